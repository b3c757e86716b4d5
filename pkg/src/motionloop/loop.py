"""Closed-loop orchestration: observe, schedule, generate, filter, train.

Each iteration evaluates the current tracker on the training clips, fuses
those metrics with dual evaluator feedback into an observation, asks the
policy for a harder prompt batch, generates and gates new clips, folds the
survivors into the dataset, and retrains the tracker on everything collected
so far. With the mock components the whole run is bit-deterministic: fixed
seeds reproduce identical archives, and a checkpoint taken mid-run resumes
to the same final state.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .clips import MotionClip
from .errors import (
    ComponentFailure,
    CorruptCheckpoint,
    EmptyArchive,
    EmptySet,
    IoFailure,
)
from .evaluation import check_alignment_gate
from .metrics import MetricReport, score_clip
from .physics import FilterConfig, check_foot_penetration, check_root_height, gaussian_smooth_root
from .prompts import (
    DOMAINS,
    ActionPrompt,
    TemplateSet,
    VariableLibrary,
    derive_seed,
    sample_batch,
    tiered_benchmark,
)
from .scheduler import (
    Observation,
    SetRecord,
    Thresholds,
    build_observation,
    mastery_class,
    partition_sets,
)

_CHECKPOINT_MAGIC = "motionloop-checkpoint 1"

ACCEPTED = "accepted"
PHYSICS_REJECTED = "physics_rejected"
ALIGNMENT_REJECTED = "alignment_rejected"


@dataclass
class Disposition:
    """Per-prompt outcome of a generation round (rejections are data)."""

    prompt_id: str
    outcome: str
    detail: str = ""

    def to_record(self) -> dict:
        return {"prompt_id": self.prompt_id, "outcome": self.outcome, "detail": self.detail}

    @classmethod
    def from_record(cls, record: dict) -> "Disposition":
        return cls(**record)


@dataclass
class MotionSet:
    """The accepted (clip, prompt) pairs of one loop plus the per-prompt log."""

    loop_index: int
    pairs: list[tuple[MotionClip, ActionPrompt]]
    dispositions: list[Disposition] = field(default_factory=list)

    def clips(self) -> list[MotionClip]:
        return [clip for clip, _prompt in self.pairs]

    def prompts(self) -> list[ActionPrompt]:
        return [prompt for _clip, prompt in self.pairs]

    def to_record(self) -> dict:
        return {
            "loop_index": self.loop_index,
            "pairs": [
                {"clip": _clip_record(clip), "prompt": prompt.to_record()}
                for clip, prompt in self.pairs
            ],
            "dispositions": [d.to_record() for d in self.dispositions],
        }

    @classmethod
    def from_record(cls, record: dict) -> "MotionSet":
        return cls(
            loop_index=record["loop_index"],
            pairs=[
                (_clip_from_record(p["clip"]), ActionPrompt.from_record(p["prompt"]))
                for p in record["pairs"]
            ],
            dispositions=[Disposition.from_record(d) for d in record["dispositions"]],
        )


def _clip_record(clip: MotionClip) -> dict:
    return {
        "clip_id": clip.clip_id,
        "fps": clip.fps,
        "root_index": clip.root_index,
        "source_prompt_id": clip.source_prompt_id,
        "frames": clip.frames.tolist(),
    }


def _clip_from_record(record: dict) -> MotionClip:
    return MotionClip(
        frames=record["frames"],
        fps=record["fps"],
        root_index=record["root_index"],
        clip_id=record["clip_id"],
        source_prompt_id=record["source_prompt_id"],
    )


@dataclass
class LoopConfig:
    """Run settings; everything is serialized into checkpoints."""

    rng_seed: int = 0
    prompts_per_loop: int = 50
    batch_size: int = 5
    initial_tier_range: tuple[int, int] = (1, 1)
    tau: float = 0.5
    gate_policy: str = "permissive"
    metrics_scope: str = "all"  # "all" evaluates the whole dataset, "latest" only M_{k-1}
    max_concurrency: int = 1
    heldout_per_domain: int = 2
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if self.metrics_scope not in ("all", "latest"):
            raise ValueError(f"metrics_scope must be 'all' or 'latest', got {self.metrics_scope}")
        if self.prompts_per_loop < 1:
            raise ValueError("prompts_per_loop must be >= 1")

    def to_record(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "prompts_per_loop": self.prompts_per_loop,
            "batch_size": self.batch_size,
            "initial_tier_range": list(self.initial_tier_range),
            "tau": self.tau,
            "gate_policy": self.gate_policy,
            "metrics_scope": self.metrics_scope,
            "max_concurrency": self.max_concurrency,
            "heldout_per_domain": self.heldout_per_domain,
            "filter_cfg": {
                "root_height_min": self.filter_cfg.root_height_min,
                "root_height_max": self.filter_cfg.root_height_max,
                "floor_z": self.filter_cfg.floor_z,
                "penetration_tolerance": self.filter_cfg.penetration_tolerance,
                "gaussian_sigma": self.filter_cfg.gaussian_sigma,
                "gaussian_radius": self.filter_cfg.gaussian_radius,
                "foot_joint_indices": list(self.filter_cfg.foot_joint_indices),
            },
            "thresholds": {
                "sr_hi": self.thresholds.sr_hi,
                "sr_lo": self.thresholds.sr_lo,
                "diff_lo": self.thresholds.diff_lo,
            },
        }

    @classmethod
    def from_record(cls, record: dict) -> "LoopConfig":
        filter_rec = dict(record["filter_cfg"])
        filter_rec["foot_joint_indices"] = tuple(filter_rec["foot_joint_indices"])
        return cls(
            rng_seed=record["rng_seed"],
            prompts_per_loop=record["prompts_per_loop"],
            batch_size=record["batch_size"],
            initial_tier_range=tuple(record["initial_tier_range"]),
            tau=record["tau"],
            gate_policy=record["gate_policy"],
            metrics_scope=record["metrics_scope"],
            max_concurrency=record["max_concurrency"],
            heldout_per_domain=record["heldout_per_domain"],
            filter_cfg=FilterConfig(**filter_rec),
            thresholds=Thresholds(**record["thresholds"]),
        )


@dataclass
class LoopComponents:
    """Everything the orchestrator calls out to, mock or remote."""

    generator: object
    evaluator: object
    tracker: object
    policy: object
    lib: VariableLibrary
    templates: TemplateSet


@dataclass
class LoopState:
    """Full Alg-state: archive of motion sets, tracker lineage, observations."""

    config: LoopConfig
    k: int = 0
    archive: list[MotionSet] = field(default_factory=list)
    tracker_ids: list[str] = field(default_factory=list)
    prompt_history: list[list[ActionPrompt]] = field(default_factory=list)
    observations: list[Observation] = field(default_factory=list)
    summaries: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    component_state: dict = field(default_factory=dict)

    @property
    def rng_seed(self) -> int:
        return self.config.rng_seed

    @property
    def dataset(self) -> list[tuple[MotionClip, ActionPrompt]]:
        """The accumulated training set: the disjoint union of all motion sets."""
        pairs = []
        for motion_set in self.archive:
            pairs.extend(motion_set.pairs)
        return pairs

    def check_invariants(self) -> None:
        clip_ids = [clip.clip_id for clip, _prompt in self.dataset]
        if len(set(clip_ids)) != len(clip_ids):
            raise AssertionError("archive sets are not disjoint by clip_id")
        if self.k != len(self.archive):
            raise AssertionError("k must equal the number of completed loops")

    def archive_hash(self) -> str:
        """Stable digest of the whole archive (frame bytes included)."""
        digest = hashlib.sha256()
        for motion_set in self.archive:
            digest.update(f"loop={motion_set.loop_index}".encode())
            for clip, prompt in motion_set.pairs:
                digest.update(json.dumps(prompt.to_record(), sort_keys=True).encode())
                digest.update(
                    f"{clip.clip_id}|{clip.fps!r}|{clip.root_index}|{clip.source_prompt_id}".encode()
                )
                digest.update(clip.frames.tobytes())
            for disposition in motion_set.dispositions:
                digest.update(json.dumps(disposition.to_record(), sort_keys=True).encode())
        return digest.hexdigest()

    def to_record(self) -> dict:
        return {
            "config": self.config.to_record(),
            "k": self.k,
            "archive": [m.to_record() for m in self.archive],
            "tracker_ids": list(self.tracker_ids),
            "prompt_history": [[p.to_record() for p in batch] for batch in self.prompt_history],
            "observations": [o.to_record() for o in self.observations],
            "summaries": list(self.summaries),
            "warnings": list(self.warnings),
            "component_state": self.component_state,
        }

    @classmethod
    def from_record(cls, record: dict) -> "LoopState":
        return cls(
            config=LoopConfig.from_record(record["config"]),
            k=record["k"],
            archive=[MotionSet.from_record(m) for m in record["archive"]],
            tracker_ids=list(record["tracker_ids"]),
            prompt_history=[
                [ActionPrompt.from_record(p) for p in batch]
                for batch in record["prompt_history"]
            ],
            observations=[Observation.from_record(o) for o in record["observations"]],
            summaries=list(record["summaries"]),
            warnings=list(record["warnings"]),
            component_state=record["component_state"],
        )


@dataclass
class LoopArchive:
    """Result of a completed run: final state plus the selected tracker."""

    state: LoopState
    best_tracker_id: str


def _pmap(fn, items, max_workers: int):
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


# --- pipeline stages ---

def generate_and_filter(
    prompts: list[ActionPrompt],
    generator,
    filter_cfg: FilterConfig,
    evaluator,
    gate_policy: str,
    seed: int,
    loop_index: int = 0,
    max_workers: int = 1,
) -> MotionSet:
    """Generate, smooth, physics-check, and alignment-gate one prompt batch.

    Accepted pairs keep the smoothed clip. Order follows the prompt list
    regardless of execution concurrency.
    """

    def produce(prompt: ActionPrompt):
        try:
            raw = generator.generate(prompt, derive_seed("generate", seed, prompt.prompt_id))
        except Exception as exc:
            raise ComponentFailure(
                f"generator failed: {exc}", loop_index=loop_index, prompt_id=prompt.prompt_id
            ) from exc
        smoothed = gaussian_smooth_root(raw, filter_cfg)
        reasons = []
        reasons.extend(check_root_height(smoothed, filter_cfg).reasons)
        reasons.extend(check_foot_penetration(smoothed, filter_cfg).reasons)
        if reasons:
            first = reasons[0]
            return prompt, None, Disposition(
                prompt.prompt_id, PHYSICS_REJECTED,
                f"{first.kind} at frame {first.frame} (value {first.value:.3f})",
            )
        try:
            feedback = evaluator.evaluate(smoothed, prompt)
        except Exception as exc:
            raise ComponentFailure(
                f"evaluator failed: {exc}", loop_index=loop_index, prompt_id=prompt.prompt_id
            ) from exc
        if not check_alignment_gate(feedback.second, gate_policy):
            return prompt, None, Disposition(
                prompt.prompt_id, ALIGNMENT_REJECTED,
                f"alignment {feedback.second.alignment.value} under {gate_policy} gate",
            )
        return prompt, (smoothed, prompt), Disposition(prompt.prompt_id, ACCEPTED)

    results = _pmap(produce, prompts, max_workers)
    pairs = [pair for _prompt, pair, _d in results if pair is not None]
    dispositions = [d for _prompt, _pair, d in results]
    return MotionSet(loop_index=loop_index, pairs=pairs, dispositions=dispositions)


def evaluate_training_set(
    tracker,
    policy_id: str,
    pairs: list[tuple[MotionClip, ActionPrompt]],
    tau: float,
    loop_index: int = 0,
    max_workers: int = 1,
) -> list[MetricReport]:
    """Roll out the tracker on every reference clip and score the executions."""

    def run(pair):
        clip, prompt = pair
        try:
            predicted = tracker.rollout(policy_id, clip)
        except Exception as exc:
            raise ComponentFailure(
                f"tracker rollout failed: {exc}", loop_index=loop_index, prompt_id=prompt.prompt_id
            ) from exc
        return score_clip(clip, predicted, tau)

    return _pmap(run, pairs, max_workers)


def _bootstrap_prompts(config: LoopConfig, lib, templates, loop_index: int) -> list[ActionPrompt]:
    base, remainder = divmod(config.prompts_per_loop, len(DOMAINS))
    prompts = []
    for d_idx, domain in enumerate(DOMAINS):
        count = base + (1 if d_idx < remainder else 0)
        if count == 0:
            continue
        prompts.extend(
            sample_batch(
                lib, templates, domain, count, config.initial_tier_range,
                rng_seed=derive_seed("bootstrap", config.rng_seed, loop_index, domain),
                id_prefix=f"L{loop_index}-{domain}",
            )
        )
    return prompts


def _schedule_prompts(state: LoopState, components: LoopComponents, sets_by_prompt: dict) -> tuple[list[ActionPrompt], dict]:
    """One child per latest-set record, batched per domain, canonical ids."""
    config = state.config
    latest = state.archive[-1]
    ordered_records = [sets_by_prompt[p.prompt_id] for p in latest.prompts()]
    by_domain: dict[str, list[SetRecord]] = {}
    for record in ordered_records:
        by_domain.setdefault(record.prompt.domain, []).append(record)

    tallies: dict[str, int] = {}
    children: list[ActionPrompt] = []
    for domain in sorted(by_domain):
        for batch_index, batch in enumerate(partition_sets(by_domain[domain], config.batch_size)):
            obs = Observation(loop_index=state.k, sets=batch)
            batch_children = components.policy.next_prompts(
                obs, components.lib, components.templates,
                rng_seed=derive_seed("policy", config.rng_seed, state.k, domain, batch_index),
            )
            for record in batch:
                cls = mastery_class(record.report, record.feedback, config.thresholds)
                tallies[cls.value] = tallies.get(cls.value, 0) + 1
            children.extend(batch_children)

    relabeled = []
    for idx, child in enumerate(children):
        child.prompt_id = f"L{state.k}-{child.domain}-{idx:03d}"
        relabeled.append(child)
    return relabeled, tallies


def iterate_once(state: LoopState, components: LoopComponents) -> LoopState:
    """Run one full loop iteration in place; the archive is append-only."""
    config = state.config
    k = state.k
    lib, templates = components.lib, components.templates

    have_parents = bool(state.archive) and bool(state.archive[-1].pairs) and state.tracker_ids
    if not have_parents:
        prompts = _bootstrap_prompts(config, lib, templates, k)
        state.observations.append(Observation(loop_index=k, sets=[]))
        tallies: dict[str, int] = {}
    else:
        scope_pairs = state.dataset if config.metrics_scope == "all" else state.archive[-1].pairs
        policy_id = state.tracker_ids[-1]
        reports = evaluate_training_set(
            components.tracker, policy_id, scope_pairs, config.tau,
            loop_index=k, max_workers=config.max_concurrency,
        )

        def judge(pair):
            clip, prompt = pair
            try:
                return components.evaluator.evaluate(clip, prompt)
            except Exception as exc:
                raise ComponentFailure(
                    f"evaluator failed: {exc}", loop_index=k, prompt_id=prompt.prompt_id
                ) from exc

        feedbacks = _pmap(judge, scope_pairs, config.max_concurrency)
        sets = [
            SetRecord(prompt=prompt, report=report, feedback=feedback)
            for (clip, prompt), report, feedback in zip(scope_pairs, reports, feedbacks)
        ]
        prev_prompts = state.prompt_history[-1] if state.prompt_history else []
        state.observations.append(build_observation(k, sets, prev_prompts))
        sets_by_prompt = {record.prompt.prompt_id: record for record in sets}
        prompts, tallies = _schedule_prompts(state, components, sets_by_prompt)

    motion_set = generate_and_filter(
        prompts, components.generator, config.filter_cfg, components.evaluator,
        config.gate_policy, seed=derive_seed(config.rng_seed, k, "round"),
        loop_index=k, max_workers=config.max_concurrency,
    )
    if not motion_set.pairs:
        state.warnings.append(f"loop {k}: every prompt rejected; retrying with fresh seeds")
        motion_set = generate_and_filter(
            prompts, components.generator, config.filter_cfg, components.evaluator,
            config.gate_policy, seed=derive_seed(config.rng_seed, k, "round-retry"),
            loop_index=k, max_workers=config.max_concurrency,
        )
        if not motion_set.pairs:
            state.warnings.append(f"loop {k}: retry also produced an empty motion set")

    state.archive.append(motion_set)
    state.prompt_history.append(prompts)

    training_clips = [clip for clip, _prompt in state.dataset]
    if training_clips:
        try:
            new_policy = components.tracker.train(training_clips)
        except Exception as exc:
            raise ComponentFailure(f"tracker training failed: {exc}", loop_index=k) from exc
        state.tracker_ids.append(new_policy)

    summary_lines = [prompt.text for prompt in motion_set.prompts()]
    tally_text = ", ".join(f"{name}={count}" for name, count in sorted(tallies.items()))
    summary_lines.append(
        f"loop {k}: accepted {len(motion_set.pairs)}/{len(prompts)}"
        + (f" | {tally_text}" if tally_text else "")
    )
    state.summaries.append("\n".join(summary_lines))

    if hasattr(components.tracker, "state_dict"):
        state.component_state["tracker"] = components.tracker.state_dict()
    state.k += 1
    state.check_invariants()
    return state


def _heldout_pairs(config: LoopConfig, components: LoopComponents):
    """Tier-3 benchmark clips used for best-tracker selection."""
    benchmark = tiered_benchmark(
        components.lib, components.templates,
        per_tier_n=config.heldout_per_domain * len(DOMAINS),
        rng_seed=derive_seed("heldout", config.rng_seed),
    )
    tier3 = benchmark[2]
    pairs = []
    for prompt in tier3:
        clip = components.generator.generate(
            prompt, derive_seed("heldout-clip", config.rng_seed, prompt.prompt_id)
        )
        pairs.append((clip, prompt))
    return pairs


def select_best_tracker(
    state: LoopState, heldout_pairs, tracker, tau: float = 0.5
) -> str:
    """Argmax of held-out dataset success rate; ties go to the latest loop."""
    if not state.tracker_ids:
        raise EmptyArchive("no trained trackers in the archive")
    if not heldout_pairs:
        raise EmptySet("held-out set is empty")
    best_id, best_rate = None, -1.0
    for policy_id in state.tracker_ids:
        reports = evaluate_training_set(tracker, policy_id, heldout_pairs, tau)
        rate = sum(r.clip_success_rate for r in reports) / len(reports)
        if rate >= best_rate:
            best_id, best_rate = policy_id, rate
    return best_id


def run_loop(
    config: LoopConfig,
    components: LoopComponents,
    iterations: int,
    checkpoint_dir: str | None = None,
    state: LoopState | None = None,
) -> LoopArchive:
    """Execute the full competitive iteration for ``iterations`` loops."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if state is None:
        state = LoopState(config=config)
    while state.k < iterations:
        iterate_once(state, components)
        if checkpoint_dir:
            os.makedirs(checkpoint_dir, exist_ok=True)
            checkpoint(state, os.path.join(checkpoint_dir, f"loop-{state.k:03d}.chk"))
    best = select_best_tracker(
        state, _heldout_pairs(config, components), components.tracker, config.tau
    )
    return LoopArchive(state=state, best_tracker_id=best)


# --- checkpointing ---

def checkpoint(state: LoopState, path) -> None:
    """Atomically write the full state with a content hash header."""
    payload = json.dumps(state.to_record()).encode("utf-8")
    header = f"{_CHECKPOINT_MAGIC} sha256={hashlib.sha256(payload).hexdigest()}\n".encode("ascii")
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".chk-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header)
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp_path, path)
        finally:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint {path}: {exc}") from exc


def resume(path) -> LoopState:
    """Load a checkpoint, verifying the recorded content hash."""
    try:
        with open(path, "rb") as fh:
            header = fh.readline()
            payload = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc
    text = header.decode("ascii", errors="replace").strip()
    if not text.startswith(_CHECKPOINT_MAGIC + " sha256="):
        raise CorruptCheckpoint(f"{path}: bad checkpoint header")
    expected = text.split("sha256=", 1)[1]
    actual = hashlib.sha256(payload).hexdigest()
    if actual != expected:
        raise CorruptCheckpoint(f"{path}: content hash mismatch")
    return LoopState.from_record(json.loads(payload.decode("utf-8")))
