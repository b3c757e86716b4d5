"""Motion clip data model, file I/O, resampling, and finite-difference kinematics.

A clip is T frames of J global joint positions (meters, Z-up) at a fixed
frame rate. Files use a self-describing text format so clips stay diffable
and golden-file friendly; floats are written with ``repr`` so a save/load
round trip is bit-exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IoFailure,
    JointCountUnsupported,
    MalformedFile,
    NonFiniteCoordinate,
    TooShort,
    WrongJointCount,
)
from .skeleton import LEFT_HAND, LEFT_WRIST, RIGHT_HAND, RIGHT_WRIST

_MAGIC = "motionloop-clip 1"

# Joint counts the file format accepts (SMPL body / body+hands).
SUPPORTED_JOINT_COUNTS = (22, 24)


@dataclass(eq=False)
class MotionClip:
    """T x J x 3 global joint positions at a frame rate.

    ``frames[t, j]`` is the world position of joint ``j`` at frame ``t``.
    In-memory clips may carry any J >= 1 (small skeletons are handy in
    tests); the file format restricts J to 22 or 24.
    """

    frames: np.ndarray
    fps: float
    root_index: int = 0
    clip_id: str = "clip"
    source_prompt_id: str | None = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (T, J, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise ValueError("clip needs at least one frame")
        if not np.isfinite(frames).all():
            raise NonFiniteCoordinate(f"clip {self.clip_id!r} has non-finite coordinates")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if not 0 <= self.root_index < frames.shape[1]:
            raise ValueError(f"root_index {self.root_index} out of range for J={frames.shape[1]}")
        self.frames = frames
        self.fps = float(self.fps)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def joint_count(self) -> int:
        return self.frames.shape[1]

    @property
    def duration(self) -> float:
        """Nominal clip length in seconds (T / fps)."""
        return self.frame_count / self.fps

    def root_trajectory(self) -> np.ndarray:
        """(T, 3) world positions of the root joint."""
        return self.frames[:, self.root_index, :]

    def with_frames(self, frames: np.ndarray, **overrides) -> "MotionClip":
        """Copy of this clip with replaced frame data (and optional field overrides)."""
        kwargs = dict(
            fps=self.fps,
            root_index=self.root_index,
            clip_id=self.clip_id,
            source_prompt_id=self.source_prompt_id,
        )
        kwargs.update(overrides)
        return MotionClip(frames=frames, **kwargs)

    def __eq__(self, other):
        if not isinstance(other, MotionClip):
            return NotImplemented
        return (
            self.clip_id == other.clip_id
            and self.fps == other.fps
            and self.root_index == other.root_index
            and self.source_prompt_id == other.source_prompt_id
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


@dataclass
class JointSeries:
    """Finite-difference derivative track of a clip.

    ``order`` 1 is velocity (length T-1, m/s), 2 is acceleration
    (length T-2, m/s^2). ``dt`` is the source frame period in seconds.
    """

    values: np.ndarray
    order: int
    dt: float

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        self.values = np.asarray(self.values, dtype=np.float64)


# --- file format ---

def save_clip(clip: MotionClip, path) -> None:
    """Write a clip document; ``load_clip`` restores it bit-exactly."""
    if clip.joint_count not in SUPPORTED_JOINT_COUNTS:
        raise JointCountUnsupported(
            f"clip format carries 22- or 24-joint skeletons, got J={clip.joint_count}"
        )
    lines = [
        _MAGIC,
        f"clip_id: {clip.clip_id}",
        f"fps: {clip.fps!r}",
        f"joint_count: {clip.joint_count}",
        f"root_index: {clip.root_index}",
    ]
    if clip.source_prompt_id is not None:
        lines.append(f"source_prompt_id: {clip.source_prompt_id}")
    lines.append(f"frames: {clip.frame_count}")
    flat = clip.frames.reshape(clip.frame_count, -1)
    for row in flat:
        lines.append(" ".join(repr(float(v)) for v in row))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write clip to {path}: {exc}") from exc


def load_clip(path) -> MotionClip:
    """Read a clip document written by :func:`save_clip`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read clip from {path}: {exc}") from exc
    return parse_clip_document(text, origin=str(path))


def parse_clip_document(text: str, origin: str = "<document>") -> MotionClip:
    """Parse the clip text format (also used as a wire payload)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise MalformedFile(f"{origin}: missing '{_MAGIC}' header")

    header: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if ":" not in stripped:
            raise MalformedFile(f"{origin}: bad header line {i + 1}: {line!r}")
        key, value = stripped.split(":", 1)
        header[key.strip()] = value.strip()
        if key.strip() == "frames":
            body_start = i + 1
            break
    if body_start is None:
        raise MalformedFile(f"{origin}: no 'frames:' header")

    required = ("clip_id", "fps", "joint_count", "root_index", "frames")
    for key in required:
        if key not in header:
            raise MalformedFile(f"{origin}: missing header field {key!r}")

    try:
        fps = float(header["fps"])
        joint_count = int(header["joint_count"])
        root_index = int(header["root_index"])
        frame_count = int(header["frames"])
    except ValueError as exc:
        raise MalformedFile(f"{origin}: non-numeric header value ({exc})") from exc

    if joint_count not in SUPPORTED_JOINT_COUNTS:
        raise JointCountUnsupported(f"{origin}: joint_count {joint_count} not in {SUPPORTED_JOINT_COUNTS}")
    if not fps > 0:
        raise MalformedFile(f"{origin}: fps must be positive, got {fps}")
    if frame_count < 1:
        raise MalformedFile(f"{origin}: frame count must be >= 1, got {frame_count}")
    if not 0 <= root_index < joint_count:
        raise MalformedFile(f"{origin}: root_index {root_index} out of range")

    rows = [line for line in lines[body_start:] if line.strip()]
    if len(rows) != frame_count:
        raise MalformedFile(f"{origin}: expected {frame_count} frame rows, found {len(rows)}")

    width = joint_count * 3
    data = np.empty((frame_count, width), dtype=np.float64)
    for t, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != width:
            raise MalformedFile(f"{origin}: frame {t} has {len(tokens)} values, expected {width}")
        try:
            data[t] = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise MalformedFile(f"{origin}: frame {t} has a non-numeric value ({exc})") from exc
    if not np.isfinite(data).all():
        raise NonFiniteCoordinate(f"{origin}: clip contains NaN or infinite coordinates")

    return MotionClip(
        frames=data.reshape(frame_count, joint_count, 3),
        fps=fps,
        root_index=root_index,
        clip_id=header["clip_id"],
        source_prompt_id=header.get("source_prompt_id"),
    )


def format_clip_document(clip: MotionClip) -> str:
    """Render a clip to its text format without touching the filesystem."""
    if clip.joint_count not in SUPPORTED_JOINT_COUNTS:
        raise JointCountUnsupported(
            f"clip format carries 22- or 24-joint skeletons, got J={clip.joint_count}"
        )
    lines = [
        _MAGIC,
        f"clip_id: {clip.clip_id}",
        f"fps: {clip.fps!r}",
        f"joint_count: {clip.joint_count}",
        f"root_index: {clip.root_index}",
    ]
    if clip.source_prompt_id is not None:
        lines.append(f"source_prompt_id: {clip.source_prompt_id}")
    lines.append(f"frames: {clip.frame_count}")
    flat = clip.frames.reshape(clip.frame_count, -1)
    lines.extend(" ".join(repr(float(v)) for v in row) for row in flat)
    return "\n".join(lines) + "\n"


# --- manifests ---

def read_manifest(path) -> list[tuple[str, list[str]]]:
    """Read a corpus manifest: one clip path per line, optional tab-separated tags."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    entries = []
    for line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        entries.append((parts[0], [p for p in parts[1:] if p]))
    return entries


def write_manifest(entries, path) -> None:
    """Write a corpus manifest. ``entries`` are paths or (path, tags) pairs."""
    lines = []
    for entry in entries:
        if isinstance(entry, str):
            lines.append(entry)
        else:
            clip_path, tags = entry
            lines.append("\t".join([str(clip_path), *tags]) if tags else str(clip_path))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def load_manifest_clips(path) -> list[MotionClip]:
    """Load every clip listed in a manifest (paths resolved against its directory)."""
    base = os.path.dirname(os.path.abspath(path))
    clips = []
    for clip_path, _tags in read_manifest(path):
        resolved = clip_path if os.path.isabs(clip_path) else os.path.join(base, clip_path)
        clips.append(load_clip(resolved))
    return clips


# --- transforms ---

def resample(clip: MotionClip, target_fps: float) -> MotionClip:
    """Resample to ``target_fps`` by linear interpolation in time.

    The output frame count is ``round(T * target_fps / fps)``, which keeps
    the nominal duration within one target-frame period; the first and last
    frames are preserved exactly.
    """
    if clip.frame_count < 2:
        raise TooShort("resample needs at least 2 frames")
    if not target_fps > 0:
        raise ValueError(f"target_fps must be positive, got {target_fps}")
    target_fps = float(target_fps)
    if target_fps == clip.fps:
        return clip.with_frames(clip.frames.copy())

    T = clip.frame_count
    out_count = max(1, int(round(T * target_fps / clip.fps)))
    if out_count == 1:
        return clip.with_frames(clip.frames[:1].copy(), fps=target_fps)

    positions = np.linspace(0.0, T - 1, out_count)
    lo = np.floor(positions).astype(int)
    lo = np.minimum(lo, T - 2)
    frac = (positions - lo)[:, None, None]
    frames = clip.frames[lo] * (1.0 - frac) + clip.frames[lo + 1] * frac
    # Endpoints must survive bit-exactly, not merely to rounding error.
    frames[0] = clip.frames[0]
    frames[-1] = clip.frames[-1]
    return clip.with_frames(frames, fps=target_fps)


def expand_joints(clip22: MotionClip) -> MotionClip:
    """Pad a 22-joint body to 24 joints by duplicating the wrists as hands.

    Zero-length hand bones are the least committal physically valid
    completion; the original 22 joints are untouched.
    """
    if clip22.joint_count != 22:
        raise WrongJointCount(f"expand_joints needs a 22-joint clip, got J={clip22.joint_count}")
    T = clip22.frame_count
    frames = np.empty((T, 24, 3), dtype=np.float64)
    frames[:, :22] = clip22.frames
    frames[:, LEFT_HAND] = clip22.frames[:, LEFT_WRIST]
    frames[:, RIGHT_HAND] = clip22.frames[:, RIGHT_WRIST]
    return clip22.with_frames(frames)


def finite_velocity(clip: MotionClip) -> JointSeries:
    """Per-joint forward differences normalized by the frame period."""
    if clip.frame_count < 2:
        raise TooShort("velocity needs at least 2 frames")
    dt = 1.0 / clip.fps
    values = (clip.frames[1:] - clip.frames[:-1]) * clip.fps
    return JointSeries(values=values, order=1, dt=dt)


def finite_acceleration(clip: MotionClip) -> JointSeries:
    """Per-joint second differences normalized by the squared frame period."""
    if clip.frame_count < 3:
        raise TooShort("acceleration needs at least 3 frames")
    dt = 1.0 / clip.fps
    values = (clip.frames[2:] - 2.0 * clip.frames[1:-1] + clip.frames[:-2]) * clip.fps**2
    return JointSeries(values=values, order=2, dt=dt)


def clip_mean_speed(clip: MotionClip) -> float:
    """Mean joint speed (m/s) over all frame transitions and joints."""
    velocity = finite_velocity(clip)
    return float(np.linalg.norm(velocity.values, axis=-1).mean())


def apply_offset_height(clip: MotionClip, h: float) -> MotionClip:
    """Add ``h`` meters to the vertical (z) coordinate of every joint."""
    frames = clip.frames.copy()
    frames[:, :, 2] += h
    return clip.with_frames(frames)


def standard_post_process(
    clip: MotionClip,
    target_fps: float = 30.0,
    offset_height: float = 0.92,
) -> MotionClip:
    """Generator post-processing: pad 22->24 joints, resample, lift to standing height.

    Joint expansion runs before resampling (either order would work on
    positional data; this is the pipeline default).
    """
    if clip.joint_count == 22:
        clip = expand_joints(clip)
    clip = resample(clip, target_fps)
    return apply_offset_height(clip, offset_height)
