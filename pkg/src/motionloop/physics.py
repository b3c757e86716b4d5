"""Physical-validity gate: root-height bounds, foot penetration, root smoothing.

Generated clips are smoothed first (a Gaussian filter over the root
trajectory, applied as a rigid per-frame offset to the whole body), then
checked. Bounds are closed intervals: rejection requires a strict violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clips import MotionClip
from .errors import BadJointIndex, IoFailure, MalformedFile
from .skeleton import DEFAULT_FOOT_JOINTS

ROOT_HEIGHT_OUT_OF_RANGE = "RootHeightOutOfRange"
FOOT_PENETRATION = "FootPenetration"

# Canonical ordering for aggregated verdicts.
_REASON_ORDER = {ROOT_HEIGHT_OUT_OF_RANGE: 0, FOOT_PENETRATION: 1}


@dataclass(frozen=True)
class FilterConfig:
    """Tunable bounds for the validity gate.

    Defaults pass a 0.92 m standing root with ample margin; every value can
    be overridden from a config file.
    """

    root_height_min: float = 0.2
    root_height_max: float = 2.5
    floor_z: float = 0.0
    penetration_tolerance: float = 0.05
    gaussian_sigma: float = 2.0
    gaussian_radius: int = 5
    foot_joint_indices: tuple[int, ...] = DEFAULT_FOOT_JOINTS

    def __post_init__(self):
        if not self.root_height_min < self.root_height_max:
            raise ValueError("root height bounds must satisfy min < max")
        if self.penetration_tolerance < 0:
            raise ValueError("penetration_tolerance must be >= 0")
        if not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be > 0")
        if self.gaussian_radius < 1:
            raise ValueError("gaussian_radius must be >= 1")

    @classmethod
    def from_file(cls, path) -> "FilterConfig":
        """Load ``key: value`` overrides from a text config file."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read filter config {path}: {exc}") from exc
        kwargs = {}
        for i, line in enumerate(lines):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if ":" not in stripped:
                raise MalformedFile(f"{path}: bad config line {i + 1}: {line!r}")
            key, value = (part.strip() for part in stripped.split(":", 1))
            if key == "foot_joint_indices":
                kwargs[key] = tuple(int(tok) for tok in value.split())
            elif key == "gaussian_radius":
                kwargs[key] = int(value)
            elif key in ("root_height_min", "root_height_max", "floor_z",
                         "penetration_tolerance", "gaussian_sigma"):
                kwargs[key] = float(value)
            else:
                raise MalformedFile(f"{path}: unknown filter config key {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class FilterReason:
    """A single rejection cause with its first offending frame."""

    kind: str
    frame: int
    value: float


@dataclass
class FilterVerdict:
    accepted: bool
    reasons: list[FilterReason] = field(default_factory=list)

    def __post_init__(self):
        if self.accepted != (len(self.reasons) == 0):
            raise ValueError("accepted must be True exactly when reasons is empty")

    @classmethod
    def from_reasons(cls, reasons: list[FilterReason]) -> "FilterVerdict":
        ordered = sorted(reasons, key=lambda r: (_REASON_ORDER[r.kind], r.frame))
        return cls(accepted=not ordered, reasons=ordered)


def check_root_height(clip: MotionClip, cfg: FilterConfig = FilterConfig()) -> FilterVerdict:
    """Reject if any frame's root z leaves the closed interval [min, max]."""
    z = clip.root_trajectory()[:, 2]
    violations = np.flatnonzero((z < cfg.root_height_min) | (z > cfg.root_height_max))
    if violations.size == 0:
        return FilterVerdict(accepted=True)
    frame = int(violations[0])
    return FilterVerdict.from_reasons(
        [FilterReason(ROOT_HEIGHT_OUT_OF_RANGE, frame, float(z[frame]))]
    )


def check_foot_penetration(clip: MotionClip, cfg: FilterConfig = FilterConfig()) -> FilterVerdict:
    """Reject if any foot joint sinks more than the tolerance below the floor."""
    for idx in cfg.foot_joint_indices:
        if not 0 <= idx < clip.joint_count:
            raise BadJointIndex(f"foot joint index {idx} out of range for J={clip.joint_count}")
    feet_z = clip.frames[:, list(cfg.foot_joint_indices), 2]
    limit = cfg.floor_z - cfg.penetration_tolerance
    per_frame_min = feet_z.min(axis=1)
    violations = np.flatnonzero(per_frame_min < limit)
    if violations.size == 0:
        return FilterVerdict(accepted=True)
    frame = int(violations[0])
    return FilterVerdict.from_reasons(
        [FilterReason(FOOT_PENETRATION, frame, float(per_frame_min[frame]))]
    )


def _gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    return np.exp(-(offsets**2) / (2.0 * sigma**2))


def gaussian_smooth_root(clip: MotionClip, cfg: FilterConfig = FilterConfig()) -> MotionClip:
    """Smooth the root trajectory and shift the whole body along with it.

    Edge frames renormalize the truncated kernel over the in-range taps, so
    a constant trajectory survives unchanged. Root-relative pose is preserved
    bit-exactly because the smoothed root delta is added to every joint.
    """
    T = clip.frame_count
    root = clip.root_trajectory()
    weights = _gaussian_kernel(cfg.gaussian_sigma, cfg.gaussian_radius)
    radius = cfg.gaussian_radius

    smoothed = np.empty_like(root)
    for t in range(T):
        lo = max(0, t - radius)
        hi = min(T - 1, t + radius)
        taps = weights[lo - t + radius : hi - t + radius + 1]
        window = root[lo : hi + 1]
        # deviation form: constant trajectories survive bit-exactly
        smoothed[t] = root[t] + (taps[:, None] * (window - root[t])).sum(axis=0) / taps.sum()

    # Recompose from untouched root-relative offsets so the smoothed delta
    # moves the body rigidly per frame.
    local = clip.frames - root[:, None, :]
    frames = smoothed[:, None, :] + local
    return clip.with_frames(frames)


def validate(clip: MotionClip, cfg: FilterConfig = FilterConfig()) -> FilterVerdict:
    """Smooth the root, then run both checks; reasons are canonically ordered."""
    smoothed = gaussian_smooth_root(clip, cfg)
    reasons = []
    reasons.extend(check_root_height(smoothed, cfg).reasons)
    reasons.extend(check_foot_penetration(smoothed, cfg).reasons)
    return FilterVerdict.from_reasons(reasons)
