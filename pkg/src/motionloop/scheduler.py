"""Observation assembly and difficulty-escalating prompt scheduling.

Each loop's evidence is grouped into sets of (prompt, tracking metrics, dual
evaluator feedback). A set is classified as mastered-easy, hard-stable, or
hard-unstable, and the next-round prompt is produced either by a four-message
chat protocol sent to an external scheduler LLM or by a deterministic rule
policy implementing the same escalation logic. The rule policy also serves
as the fallback whenever the LLM output fails validation.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .errors import (
    CountMismatch,
    EmptyInput,
    ForeignPhrase,
    IncompleteSet,
    MalformedOutput,
    NoEligibleEntries,
    NoTemplateMatch,
    UpstreamUnavailable,
)
from .evaluation import DualFeedback
from .metrics import MetricReport
from .prompts import (
    MAX_TIER,
    SLOTS,
    ActionPrompt,
    Lineage,
    TemplateSet,
    VariableLibrary,
    derive_seed,
    instantiate_prompt,
    parse_prompt,
)

BATCH_SIZE = 5

ESCALATED_SLOTS = ("combo_action", "detail")  # raised together on mastery


class MasteryClass(enum.Enum):
    MASTERED_EASY = "mastered_easy"
    HARD_STABLE = "hard_stable"
    HARD_UNSTABLE = "hard_unstable"


@dataclass(frozen=True)
class Thresholds:
    """Escalation thresholds; the defaults are config-overridable."""

    sr_hi: float = 0.9
    sr_lo: float = 0.5
    diff_lo: float = 4.0


@dataclass
class SetRecord:
    """One complete evidence set: prompt, tracking metrics, dual feedback."""

    prompt: ActionPrompt
    report: MetricReport
    feedback: DualFeedback

    def to_record(self) -> dict:
        return {
            "prompt": self.prompt.to_record(),
            "report": self.report.to_record(),
            "feedback": self.feedback.to_record(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "SetRecord":
        return cls(
            prompt=ActionPrompt.from_record(record["prompt"]),
            report=MetricReport.from_record(record["report"]),
            feedback=DualFeedback.from_record(record["feedback"]),
        )


@dataclass
class Observation:
    """The per-loop scheduler input: sets plus the prior action summary."""

    loop_index: int
    sets: list[SetRecord]
    prev_action_summary: str = ""

    def to_record(self) -> dict:
        return {
            "loop_index": self.loop_index,
            "sets": [s.to_record() for s in self.sets],
            "prev_action_summary": self.prev_action_summary,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Observation":
        return cls(
            loop_index=record["loop_index"],
            sets=[SetRecord.from_record(s) for s in record["sets"]],
            prev_action_summary=record.get("prev_action_summary", ""),
        )


def partition_sets(records: list, batch_size: int = BATCH_SIZE) -> list[list]:
    """Chunk records into consecutive batches; the final batch may be short."""
    if not records:
        raise EmptyInput("partition_sets needs at least one record")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    return [records[i : i + batch_size] for i in range(0, len(records), batch_size)]


def build_observation(
    loop_index: int, sets: list[SetRecord], prev_prompts: list[ActionPrompt]
) -> Observation:
    """Assemble the observation; every set must carry all three signals."""
    for i, record in enumerate(sets):
        if record.prompt is None or record.report is None or record.feedback is None:
            raise IncompleteSet(f"set {i} is missing prompt, metrics, or feedback")
    summary_lines = [p.text for p in prev_prompts]
    summary_lines.append(f"loop {loop_index}: {len(prev_prompts)} prior prompts, {len(sets)} sets")
    return Observation(
        loop_index=loop_index,
        sets=list(sets),
        prev_action_summary="\n".join(summary_lines),
    )


def mastery_class(
    report: MetricReport, feedback: DualFeedback, thresholds: Thresholds = Thresholds()
) -> MasteryClass:
    """Trichotomy driving escalation magnitude.

    Mastered-easy needs high success AND both evaluators scoring it easy
    (min of the two difficulties); unstable is low success regardless of
    perceived difficulty; everything else counts as hard-but-stable.
    """
    if report.clip_success_rate >= thresholds.sr_hi and feedback.min_difficulty() <= thresholds.diff_lo:
        return MasteryClass.MASTERED_EASY
    if report.clip_success_rate < thresholds.sr_lo:
        return MasteryClass.HARD_UNSTABLE
    return MasteryClass.HARD_STABLE


def _raise_slot(lib, domain, slot, parent_tier, rng):
    """Pick a phrase one tier above ``parent_tier`` (reuse tier 5 when capped)."""
    target = min(parent_tier + 1, MAX_TIER)
    pool = [e for e in lib.entries(domain, slot) if e.tier == target]
    if not pool:
        pool = [e for e in lib.entries(domain, slot) if e.tier >= target]
    flagged = parent_tier >= MAX_TIER
    if not pool:
        pool = [e for e in lib.entries(domain, slot) if e.tier == MAX_TIER]
        flagged = True
    if not pool:
        raise NoEligibleEntries(f"{domain}.{slot} has no entries at or above tier {target}")
    return rng.choice(pool).phrase, flagged


def _swap_same_tier(lib, domain, slot, parent_phrase, parent_tier, rng):
    """Different phrase at the same tier when one exists."""
    pool = [
        e for e in lib.entries(domain, slot)
        if e.tier == parent_tier and e.phrase != parent_phrase
    ]
    if not pool:
        return parent_phrase
    return rng.choice(pool).phrase


def rule_policy_next(
    obs: Observation,
    lib: VariableLibrary,
    templates: TemplateSet,
    rng_seed: int,
    thresholds: Thresholds = Thresholds(),
) -> list[ActionPrompt]:
    """Deterministic escalation: one child prompt per set.

    Mastered-easy parents get both the combo and the detail raised a tier;
    hard-stable parents get only the rhythm raised; hard-unstable parents
    keep their tiers but swap phrases. Children never drop below the parent
    tier, and hitting the tier-5 ceiling flags the child.
    """
    if not obs.sets:
        raise EmptyInput("rule policy needs at least one set")
    children = []
    for i, record in enumerate(obs.sets):
        parent = record.prompt
        domain = parent.domain
        rng = random.Random(
            derive_seed("rule_policy", rng_seed, obs.loop_index, i, parent.prompt_id)
        )
        cls = mastery_class(record.report, record.feedback, thresholds)
        slot_tiers = {
            slot: lib.tier_of(domain, slot, parent.selection[slot]) for slot in SLOTS
        }
        selection = dict(parent.selection)
        flagged = False
        if cls is MasteryClass.MASTERED_EASY:
            for slot in ESCALATED_SLOTS:
                selection[slot], hit_cap = _raise_slot(lib, domain, slot, parent.tier, rng)
                flagged = flagged or hit_cap
        elif cls is MasteryClass.HARD_STABLE:
            selection["speed_rhythm"], flagged = _raise_slot(
                lib, domain, "speed_rhythm", slot_tiers["speed_rhythm"], rng
            )
        else:  # HARD_UNSTABLE: smaller shift, same difficulty
            for slot in SLOTS:
                selection[slot] = _swap_same_tier(
                    lib, domain, slot, parent.selection[slot], slot_tiers[slot], rng
                )
        suffix = derive_seed("child-id", rng_seed, obs.loop_index, i) % 0xFFFF
        child = instantiate_prompt(
            lib,
            templates,
            domain,
            parent.template_index,
            selection,
            prompt_id=f"L{obs.loop_index}-{domain}-{i:03d}-{suffix:04x}",
            lineage=Lineage(parent_prompt_id=parent.prompt_id, loop_index=obs.loop_index),
            flagged=flagged,
        )
        children.append(child)
    return children


# --- chat protocol ---

_MESSAGE_NAMES = ("goal", "data_summary", "resources", "tasks_and_schema")


@dataclass
class ChatScript:
    """The four ordered scheduler messages and their expected output grammar."""

    goal: str
    data_summary: str
    resources: str
    tasks_and_schema: str

    def messages(self) -> list[str]:
        return [self.goal, self.data_summary, self.resources, self.tasks_and_schema]

    def to_body(self) -> str:
        parts = []
        for name, message in zip(_MESSAGE_NAMES, self.messages()):
            parts.append(f"=== {name} ===")
            parts.append(message)
        return "\n".join(parts)

    @classmethod
    def from_body(cls, body: str) -> "ChatScript":
        sections: dict[str, list[str]] = {}
        current = None
        for line in body.split("\n"):
            if line.startswith("=== ") and line.endswith(" ==="):
                current = line[4:-4]
                sections[current] = []
                continue
            if current is not None:
                sections[current].append(line)
        missing = [name for name in _MESSAGE_NAMES if name not in sections]
        if missing:
            raise MalformedOutput(f"chat script body is missing sections: {missing}")
        return cls(**{name: "\n".join(sections[name]).strip("\n") for name in _MESSAGE_NAMES})


_GOAL_MESSAGE = """\
You optimize training prompts for a humanoid motion tracker. Generate
optimized prompts that push the tracker's performance limit: every new
prompt must be strictly harder than the original one it replaces. Base the
size of each difficulty increase jointly on the tracking metrics and the
evaluator difficulty scores. Sets with low tracking errors and low evaluator
difficulty must receive a significant difficulty increase; sets that are
already hard for both the tracker and the evaluators must only be slightly
intensified.
"""

_TASKS_MESSAGE = """\
Tasks, in order:
1. Group analysis: compare the sets on tracking metrics and evaluator
   scores, and summarize where the two evaluators agree and disagree.
2. Per-set optimization, for every set:
   A: explain how the new prompt increases difficulty over the original
   B: state which variables you selected and why
   C: state which template you used and why
   D: output the final optimized prompt sentence

Output format, one block per set, exactly these line prefixes:
SET <i>
A: <analysis>
B: <variables>
C: <template>
D: <sentence>
Use only phrases from the provided variable lists and only the provided
templates when composing each D sentence.
"""


def build_llm_messages(
    obs: Observation, lib: VariableLibrary, templates: TemplateSet
) -> ChatScript:
    """Compose the four scheduler messages for one batch of sets."""
    if not obs.sets:
        raise IncompleteSet("cannot build scheduler messages for an empty batch")
    summary_lines = []
    for i, record in enumerate(obs.sets, start=1):
        report = record.report
        first, second = record.feedback.first, record.feedback.second
        summary_lines.extend([
            f"SET {i}",
            f"prompt: {record.prompt.text}",
            f"domain: {record.prompt.domain}",
            f"tier: {record.prompt.tier}",
            (
                f"metrics: success_rate={report.clip_success_rate:.3f} "
                f"succeeded={str(report.succeeded).lower()} "
                f"g_mpjpe_mm={report.g_mpjpe * 1000.0:.1f} "
                f"l_mpjpe_mm={report.l_mpjpe * 1000.0:.1f} "
                f"vel_dist={report.vel_dist:.3f} acc_dist={report.acc_dist:.3f}"
            ),
            (
                f"evaluator_1 ({first.evaluator_id}): difficulty={first.difficulty:.2f} "
                f"alignment={first.alignment.value} | {first.attributes.get('technical_complexity', '')}"
            ),
            (
                f"evaluator_2 ({second.evaluator_id}): difficulty={second.difficulty:.2f} "
                f"alignment={second.alignment.value} | {second.attributes.get('technical_complexity', '')}"
            ),
        ])
    if obs.prev_action_summary:
        summary_lines.append("previous actions:")
        summary_lines.append(obs.prev_action_summary)

    domains = sorted({record.prompt.domain for record in obs.sets})
    resource_lines = []
    for domain in domains:
        resource_lines.append(f"domain: {domain}")
        for slot in SLOTS:
            resource_lines.append(f"  {slot}:")
            for entry in lib.entries(domain, slot):
                resource_lines.append(f"    {entry.tier} | {entry.phrase}")
        resource_lines.append("  templates:")
        for template in templates.templates(domain):
            resource_lines.append(f"    {template}")
    resource_lines.append("Use only these resources when generating new prompts.")

    return ChatScript(
        goal=_GOAL_MESSAGE.strip(),
        data_summary="\n".join(summary_lines),
        resources="\n".join(resource_lines),
        tasks_and_schema=_TASKS_MESSAGE.strip(),
    )


def parse_llm_output(
    text: str,
    lib: VariableLibrary,
    templates: TemplateSet,
    expected_sets: int | None = None,
) -> list[ActionPrompt]:
    """Extract and validate each set's D-line sentence from scheduler output."""
    blocks: list[list[str]] = []
    current: list[str] | None = None
    for line in text.split("\n"):
        stripped = line.strip()
        if stripped.startswith("SET ") or stripped == "SET":
            current = []
            blocks.append(current)
            continue
        if current is not None:
            current.append(stripped)
    if not blocks:
        raise MalformedOutput("no SET blocks in scheduler output")
    sentences = []
    for i, block in enumerate(blocks, start=1):
        d_lines = [line[2:].strip() for line in block if line.startswith("D:")]
        if len(d_lines) != 1:
            raise MalformedOutput(f"SET {i} must contain exactly one D: line")
        sentences.append(d_lines[0])
    if expected_sets is not None and len(sentences) != expected_sets:
        raise CountMismatch(f"expected {expected_sets} prompts, got {len(sentences)}")
    prompts = []
    for i, sentence in enumerate(sentences, start=1):
        try:
            prompts.append(parse_prompt(lib, templates, sentence))
        except NoTemplateMatch as exc:
            raise MalformedOutput(f"SET {i} sentence matches no template: {sentence!r}") from exc
    return prompts


# --- policy objects used by the orchestrator ---

class RulePolicy:
    """Pure deterministic escalation policy."""

    def __init__(self, thresholds: Thresholds = Thresholds()):
        self.thresholds = thresholds

    def next_prompts(self, obs, lib, templates, rng_seed):
        return rule_policy_next(obs, lib, templates, rng_seed, self.thresholds)


class LlmPolicy:
    """Scheduler backed by an external `schedule` endpoint with rule fallback.

    The raw output of any failed exchange is kept in ``fallback_events`` so a
    flaky upstream never halts the loop.
    """

    def __init__(self, schedule_fn, thresholds: Thresholds = Thresholds()):
        self.schedule_fn = schedule_fn
        self.thresholds = thresholds
        self.fallback_events: list[dict] = []

    def next_prompts(self, obs, lib, templates, rng_seed):
        script = build_llm_messages(obs, lib, templates)
        raw = None
        try:
            raw = self.schedule_fn(script)
            prompts = parse_llm_output(raw, lib, templates, expected_sets=len(obs.sets))
        except (MalformedOutput, ForeignPhrase, CountMismatch, UpstreamUnavailable) as exc:
            self.fallback_events.append(
                {"loop_index": obs.loop_index, "error": f"{type(exc).__name__}: {exc}",
                 "raw_output": raw if raw is not None else ""}
            )
            return rule_policy_next(obs, lib, templates, rng_seed, self.thresholds)
        relabeled = []
        for i, prompt in enumerate(prompts):
            parent = obs.sets[i].prompt
            suffix = derive_seed("llm-child-id", rng_seed, obs.loop_index, i) % 0xFFFF
            prompt.prompt_id = f"L{obs.loop_index}-{prompt.domain}-{i:03d}-{suffix:04x}"
            prompt.lineage = Lineage(parent_prompt_id=parent.prompt_id, loop_index=obs.loop_index)
            relabeled.append(prompt)
        return relabeled
