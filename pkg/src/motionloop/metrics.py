"""Tracking metrics between a reference clip and an executed (predicted) clip.

Distances are meters and meters/second internally; reports print millimeters
for the MPJPE family to match conventional table magnitudes. The frame
threshold test uses a strict inequality (an error exactly at tau fails).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clips import MotionClip, finite_acceleration, finite_velocity
from .errors import DegenerateBaseline, EmptySet, ShapeMismatch, TooShort

DEFAULT_TAU = 0.5  # meters


@dataclass
class MetricReport:
    """Per-clip tracking scores.

    ``clip_success_rate`` is the fraction of frames whose mean joint error
    stays under ``tau``; ``succeeded`` is the stricter binary flag (every
    frame under threshold) used for pass/fail style reporting.
    """

    clip_id: str
    g_mpjpe: float
    l_mpjpe: float
    vel_dist: float
    acc_dist: float
    frame_errors: np.ndarray
    clip_success_rate: float
    succeeded: bool
    tau: float

    def __post_init__(self):
        self.frame_errors = np.asarray(self.frame_errors, dtype=np.float64)
        if not 0.0 <= self.clip_success_rate <= 1.0:
            raise ValueError(f"clip_success_rate must be in [0,1], got {self.clip_success_rate}")

    def to_record(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "g_mpjpe": self.g_mpjpe,
            "l_mpjpe": self.l_mpjpe,
            "vel_dist": self.vel_dist,
            "acc_dist": self.acc_dist,
            "frame_errors": [float(e) for e in self.frame_errors],
            "clip_success_rate": self.clip_success_rate,
            "succeeded": self.succeeded,
            "tau": self.tau,
        }

    @classmethod
    def from_record(cls, record: dict) -> "MetricReport":
        return cls(**{**record, "frame_errors": np.asarray(record["frame_errors"])})

    def format_text(self) -> str:
        """One structured-text record per clip (millimeters for MPJPE columns)."""
        lines = [
            f"clip_id: {self.clip_id}",
            f"g_mpjpe_mm: {self.g_mpjpe * 1000.0:.2f}",
            f"l_mpjpe_mm: {self.l_mpjpe * 1000.0:.2f}",
            f"vel_dist: {self.vel_dist:.6f}",
            f"acc_dist: {self.acc_dist:.6f}",
            f"clip_success_rate: {self.clip_success_rate:.6f}",
            f"succeeded: {str(self.succeeded).lower()}",
            f"tau: {self.tau!r}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class DatasetScore:
    """Unweighted mean of per-clip success rates over a corpus."""

    per_clip: list
    dataset_success_rate: float
    clip_count: int

    def format_text(self) -> str:
        lines = [f"clip_count: {self.clip_count}",
                 f"dataset_success_rate: {self.dataset_success_rate:.6f}"]
        lines.extend(f"clip: {cid}\t{rate:.6f}" for cid, rate in self.per_clip)
        return "\n".join(lines) + "\n"


def _check_matched(gt: MotionClip, pred: MotionClip) -> None:
    if gt.frames.shape != pred.frames.shape:
        raise ShapeMismatch(
            f"gt {gt.frames.shape} vs pred {pred.frames.shape} for clip {gt.clip_id!r}"
        )
    if gt.fps != pred.fps:
        raise ShapeMismatch(f"fps mismatch: gt {gt.fps} vs pred {pred.fps}")


def g_mpjpe(gt: MotionClip, pred: MotionClip) -> float:
    """Mean Euclidean joint error in the world frame (meters)."""
    _check_matched(gt, pred)
    return float(np.linalg.norm(gt.frames - pred.frames, axis=-1).mean())


def l_mpjpe(gt: MotionClip, pred: MotionClip) -> float:
    """Mean joint error after removing each clip's own root translation."""
    _check_matched(gt, pred)
    gt_local = gt.frames - gt.frames[:, gt.root_index : gt.root_index + 1, :]
    pred_local = pred.frames - pred.frames[:, pred.root_index : pred.root_index + 1, :]
    return float(np.linalg.norm(gt_local - pred_local, axis=-1).mean())


def vel_dist(gt: MotionClip, pred: MotionClip) -> float:
    """Mean per-joint velocity discrepancy (m/s)."""
    _check_matched(gt, pred)
    if gt.frame_count < 2:
        raise TooShort("vel_dist needs at least 2 frames")
    gv = finite_velocity(gt).values
    pv = finite_velocity(pred).values
    return float(np.linalg.norm(gv - pv, axis=-1).mean())


def acc_dist(gt: MotionClip, pred: MotionClip) -> float:
    """Mean per-joint acceleration discrepancy (m/s^2)."""
    _check_matched(gt, pred)
    if gt.frame_count < 3:
        raise TooShort("acc_dist needs at least 3 frames")
    ga = finite_acceleration(gt).values
    pa = finite_acceleration(pred).values
    return float(np.linalg.norm(ga - pa, axis=-1).mean())


def frame_errors(gt: MotionClip, pred: MotionClip) -> np.ndarray:
    """Per-frame mean-over-joints global position error (meters)."""
    _check_matched(gt, pred)
    return np.linalg.norm(gt.frames - pred.frames, axis=-1).mean(axis=1)


def clip_success_rate(gt: MotionClip, pred: MotionClip, tau: float = DEFAULT_TAU) -> float:
    """Fraction of frames with mean joint error strictly under ``tau``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    errors = frame_errors(gt, pred)
    return float((errors < tau).mean())


def score_clip(gt: MotionClip, pred: MotionClip, tau: float = DEFAULT_TAU) -> MetricReport:
    """Compute the full metric report for one reference/prediction pair."""
    errors = frame_errors(gt, pred)
    rate = float((errors < tau).mean())
    return MetricReport(
        clip_id=gt.clip_id,
        g_mpjpe=g_mpjpe(gt, pred),
        l_mpjpe=l_mpjpe(gt, pred),
        vel_dist=vel_dist(gt, pred) if gt.frame_count >= 2 else 0.0,
        acc_dist=acc_dist(gt, pred) if gt.frame_count >= 3 else 0.0,
        frame_errors=errors,
        clip_success_rate=rate,
        succeeded=rate == 1.0,
        tau=tau,
    )


def dataset_success_rate(reports: list[MetricReport]) -> DatasetScore:
    """Unweighted mean of clip success rates."""
    if not reports:
        raise EmptySet("dataset_success_rate needs at least one report")
    per_clip = [(r.clip_id, r.clip_success_rate) for r in reports]
    mean_rate = float(np.mean([rate for _, rate in per_clip]))
    return DatasetScore(per_clip=per_clip, dataset_success_rate=mean_rate, clip_count=len(reports))


def weighted_average(per_set: list[tuple[float, int]]) -> float:
    """Clip-count-weighted average of per-set percentages."""
    if not per_set:
        raise EmptySet("weighted_average needs at least one (rate, count) pair")
    total = 0
    weighted = 0.0
    for rate, count in per_set:
        if count <= 0:
            raise EmptySet(f"clip counts must be positive, got {count}")
        weighted += rate * count
        total += count
    return weighted / total


def failure_rate_reduction(baseline_avg: float, ours_avg: float) -> float:
    """Relative drop in failure rate (percent) going from baseline to ours."""
    if not (0.0 <= baseline_avg <= 100.0 and 0.0 <= ours_avg <= 100.0):
        raise ValueError("averages must be percentages in [0, 100]")
    baseline_failure = 100.0 - baseline_avg
    if baseline_failure == 0.0:
        raise DegenerateBaseline("baseline has no failures to reduce")
    ours_failure = 100.0 - ours_avg
    return 100.0 * (baseline_failure - ours_failure) / baseline_failure
