"""Deterministic mock generator and tracker for desk-scale loop runs.

The generator synthesizes procedural whole-body oscillation whose mean joint
speed is an exact affine function of the prompt's mean slot tier, so harder
prompts always produce faster clips. The tracker models a capability
frontier: training lifts a scalar skill to cover the dataset's difficulty
quantile, and rollouts perturb the reference with a slowly varying offset
whose magnitude grows with (clip difficulty - skill). Together they realize
the co-evolution dynamics the closed loop is designed to exercise.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass

import numpy as np

from .clips import MotionClip, clip_mean_speed
from .errors import ComponentFailure, EmptySet, MalformedOutput
from .prompts import SLOTS, ActionPrompt, TemplateSet, VariableLibrary, derive_seed
from .skeleton import DEFAULT_FOOT_JOINTS, rest_pose


def prompt_intensity(lib: VariableLibrary, prompt: ActionPrompt) -> float:
    """Mean tier over the four selected slots (1.0 .. 5.0)."""
    tiers = [lib.tier_of(prompt.domain, slot, prompt.selection[slot]) for slot in SLOTS]
    return sum(tiers) / len(tiers)


class MockGenerator:
    """Procedural text-to-motion stand-in.

    Deterministic per (prompt_id, seed); output is 180 frames at 30 fps with
    24 joints, root standing near ``base_height``, tagged with the prompt id
    so the mock evaluator can verify alignment. Oscillation phases vary per
    clip, but amplitudes are renormalized so the mean joint speed equals
    ``speed_base + speed_slope * (intensity - 1)`` exactly.
    """

    def __init__(
        self,
        lib: VariableLibrary,
        frame_count: int = 180,
        fps: float = 30.0,
        base_height: float = 0.92,
        speed_base: float = 0.6,
        speed_slope: float = 0.8,
    ):
        self.lib = lib
        self.frame_count = frame_count
        self.fps = fps
        self.base_height = base_height
        self.speed_base = speed_base
        self.speed_slope = speed_slope

    def target_speed(self, intensity: float) -> float:
        return self.speed_base + self.speed_slope * (intensity - 1.0)

    def generate(self, prompt: ActionPrompt, seed: int) -> MotionClip:
        rng = random.Random(derive_seed("mock-generator", prompt.prompt_id, seed))
        T, J = self.frame_count, 24
        rest = rest_pose(24, pelvis_height=self.base_height)
        t = np.arange(T, dtype=np.float64)

        def wave(cycles: int, phase: float) -> np.ndarray:
            return np.sin(2.0 * math.pi * cycles * t / T + phase)

        # Whole-body travel: lateral/forward sway plus a tiny vertical bounce
        # (the bounce is the only vertical motion the feet see, so its scaled
        # amplitude must stay well inside the penetration tolerance).
        motion = np.zeros((T, J, 3), dtype=np.float64)
        motion[:, :, 0] += 0.35 * wave(rng.randint(2, 4), rng.uniform(0, 2 * math.pi))[:, None]
        motion[:, :, 1] += 0.25 * wave(rng.randint(2, 4), rng.uniform(0, 2 * math.pi))[:, None]
        motion[:, :, 2] += 0.002 * wave(2, rng.uniform(0, 2 * math.pi))[:, None]

        # Per-joint limb oscillation; feet move only horizontally so the
        # default penetration check always passes.
        for j in range(1, J):
            direction = np.array(
                [rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)]
            )
            if j in DEFAULT_FOOT_JOINTS:
                direction[2] = 0.0
            norm = np.linalg.norm(direction)
            if norm < 1e-9:
                direction = np.array([1.0, 0.0, 0.0])
                norm = 1.0
            direction /= norm
            amplitude = rng.uniform(0.10, 0.22)
            phase = rng.uniform(0, 2 * math.pi)
            cycles = rng.randint(3, 5)
            motion[:, j, :] += amplitude * direction[None, :] * wave(cycles, phase)[:, None]

        raw = rest[None, :, :] + motion
        raw_speed = float(
            np.linalg.norm((raw[1:] - raw[:-1]) * self.fps, axis=-1).mean()
        )
        scale = self.target_speed(prompt_intensity(self.lib, prompt)) / raw_speed
        frames = rest[None, :, :] + motion * scale

        return MotionClip(
            frames=frames,
            fps=self.fps,
            root_index=0,
            clip_id=f"{prompt.prompt_id}-clip",
            source_prompt_id=prompt.prompt_id,
        )


@dataclass
class MockTrackerModel:
    """Capability state of the mock tracker: a scalar skill frontier."""

    skill: float = 0.0
    error_ceiling: float = 2.5
    error_wobble: float = 0.8
    wobble_cycles: int = 3
    quantile: float = 0.75
    margin: float = -2.5  # negative: training pushes skill past the quantile

    def to_record(self) -> dict:
        return {
            "skill": self.skill,
            "error_ceiling": self.error_ceiling,
            "error_wobble": self.error_wobble,
            "wobble_cycles": self.wobble_cycles,
            "quantile": self.quantile,
            "margin": self.margin,
        }

    @classmethod
    def from_record(cls, record: dict) -> "MockTrackerModel":
        return cls(**record)


def mock_tracker_train(model: MockTrackerModel, clips: list[MotionClip]) -> MockTrackerModel:
    """Skill rises to cover the dataset difficulty quantile; never drops."""
    if not clips:
        raise EmptySet("training needs at least one clip")
    speeds = [clip_mean_speed(c) for c in clips]
    frontier = float(np.quantile(np.asarray(speeds), 0.75)) - model.margin
    updated = MockTrackerModel.from_record(model.to_record())
    updated.skill = max(model.skill, frontier)
    return updated


class MockTracker:
    """Train/rollout endpoint stand-in with an internal policy registry."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.models: dict[str, MockTrackerModel] = {}
        self.next_index = 0

    def train(self, clips: list[MotionClip]) -> str:
        base = MockTrackerModel()
        if self.models:
            latest = self.models[self._policy_name(self.next_index - 1)]
            base = MockTrackerModel.from_record(latest.to_record())
        model = mock_tracker_train(base, clips)
        policy_id = self._policy_name(self.next_index)
        self.models[policy_id] = model
        self.next_index += 1
        return policy_id

    def _policy_name(self, index: int) -> str:
        return f"mock-policy-{index:03d}"

    def rollout(self, policy_id: str, gt: MotionClip) -> MotionClip:
        if policy_id not in self.models:
            raise ComponentFailure(f"unknown tracker policy {policy_id!r}")
        model = self.models[policy_id]
        difficulty = clip_mean_speed(gt) if gt.frame_count >= 2 else 0.0
        gap = difficulty - model.skill
        magnitude = model.error_ceiling / (1.0 + math.exp(-gap))

        rng = random.Random(derive_seed("mock-rollout", self.seed, policy_id, gt.clip_id))
        direction = np.array([rng.uniform(-1, 1) for _ in range(3)])
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 1e-9 else np.array([1.0, 0.0, 0.0])

        T = gt.frame_count
        t = np.arange(T, dtype=np.float64)
        # Slowly varying error envelope; phase is fixed so the per-frame error
        # profile depends only on the magnitude, keeping success rates exactly
        # monotone in (difficulty - skill).
        envelope = magnitude * (
            1.0 + model.error_wobble * np.sin(2.0 * math.pi * model.wobble_cycles * t / T)
        )
        offset = envelope[:, None] * direction[None, :]
        frames = gt.frames + offset[:, None, :]
        return MotionClip(
            frames=frames,
            fps=gt.fps,
            root_index=gt.root_index,
            clip_id=gt.clip_id,
            source_prompt_id=gt.source_prompt_id,
        )

    def state_dict(self) -> dict:
        return {
            "seed": self.seed,
            "next_index": self.next_index,
            "models": {pid: m.to_record() for pid, m in self.models.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.seed = state["seed"]
        self.next_index = state["next_index"]
        self.models = {
            pid: MockTrackerModel.from_record(rec) for pid, rec in state["models"].items()
        }


# --- mock scheduler ---

_SUMMARY_PROMPT_RE = re.compile(r"^prompt: (.+)$")
_SUMMARY_METRICS_RE = re.compile(r"^metrics: success_rate=([0-9.]+)")
_SUMMARY_EVAL_RE = re.compile(r"^evaluator_[12] .*difficulty=([0-9.]+)")


def mock_schedule_response(
    script_body: str,
    lib: VariableLibrary,
    templates: TemplateSet,
    rng_seed: int = 0,
) -> str:
    """Answer a `schedule` request the way the rule policy would.

    The chat script's data summary carries enough signal (prompt text,
    success rate, both difficulty scores) to reclassify every set and emit
    escalated prompts in the SET/A/B/C/D output grammar.
    """
    from .evaluation import Alignment, DualFeedback, VlmFeedback
    from .metrics import MetricReport
    from .scheduler import ChatScript, Observation, SetRecord, mastery_class, rule_policy_next
    from .prompts import parse_prompt

    script = ChatScript.from_body(script_body)
    sets = []
    prompt_text = None
    success_rate = None
    difficulties: list[float] = []
    loop_index = 0
    for line in script.data_summary.split("\n") + ["SET end"]:
        line = line.strip()
        if line.startswith("SET") or line.startswith("previous actions:"):
            if prompt_text is not None:
                if success_rate is None or len(difficulties) < 2:
                    raise MalformedOutput("data summary set is missing metrics or scores")
                prompt = parse_prompt(lib, templates, prompt_text)
                report = MetricReport(
                    clip_id=f"{prompt.prompt_id}-clip",
                    g_mpjpe=0.0, l_mpjpe=0.0, vel_dist=0.0, acc_dist=0.0,
                    frame_errors=np.zeros(1),
                    clip_success_rate=success_rate,
                    succeeded=success_rate == 1.0,
                    tau=0.5,
                )
                feedback = DualFeedback(
                    first=VlmFeedback("gpt4o-role", difficulties[0], Alignment.ALIGNED),
                    second=VlmFeedback("qwen-role", difficulties[1], Alignment.ALIGNED),
                )
                sets.append(SetRecord(prompt=prompt, report=report, feedback=feedback))
            prompt_text, success_rate, difficulties = None, None, []
            continue
        match = _SUMMARY_PROMPT_RE.match(line)
        if match:
            prompt_text = match.group(1)
            continue
        match = _SUMMARY_METRICS_RE.match(line)
        if match:
            success_rate = float(match.group(1))
            continue
        match = _SUMMARY_EVAL_RE.match(line)
        if match:
            difficulties.append(float(match.group(1)))
    if not sets:
        raise MalformedOutput("data summary contains no sets")

    obs = Observation(loop_index=loop_index, sets=sets)
    children = rule_policy_next(obs, lib, templates, rng_seed)
    blocks = []
    for i, (record, child) in enumerate(zip(sets, children), start=1):
        cls = mastery_class(record.report, record.feedback)
        blocks.extend([
            f"SET {i}",
            f"A: escalation class {cls.value}; child tier {child.tier} vs parent {record.prompt.tier}",
            f"B: selected {', '.join(child.selection[slot] for slot in SLOTS)}",
            f"C: template {child.template_index} of domain {child.domain}",
            f"D: {child.text}",
        ])
    return "\n".join(blocks)
