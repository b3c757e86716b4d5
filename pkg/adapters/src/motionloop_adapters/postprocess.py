"""Generator-path post-processing applied to raw upstream motion.

Text-to-motion upstreams emit 22-joint bodies at 20 fps with arbitrary
length. Before a clip crosses the wire back to the orchestrator it is padded
to 24 joints (hands copy their wrists), resampled to 30 fps, windowed to
exactly 180 frames, and lifted to standing height.
"""

from __future__ import annotations

import numpy as np

LEFT_WRIST, RIGHT_WRIST = 20, 21

TARGET_FPS = 30.0
TARGET_FRAMES = 180
OFFSET_HEIGHT = 0.92


def expand_to_24_joints(frames: np.ndarray) -> np.ndarray:
    """Append hand joints duplicating the wrists; 24-joint input passes through."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[1] == 24:
        return frames
    if frames.shape[1] != 22:
        raise ValueError(f"expected 22 or 24 joints, got {frames.shape[1]}")
    out = np.empty((frames.shape[0], 24, 3), dtype=np.float64)
    out[:, :22] = frames
    out[:, 22] = frames[:, LEFT_WRIST]
    out[:, 23] = frames[:, RIGHT_WRIST]
    return out


def resample_frames(frames: np.ndarray, src_fps: float, target_fps: float) -> np.ndarray:
    """Linear time interpolation preserving both endpoints exactly."""
    frames = np.asarray(frames, dtype=np.float64)
    T = frames.shape[0]
    if T < 2 or src_fps == target_fps:
        return frames.copy()
    out_count = max(2, int(round(T * target_fps / src_fps)))
    positions = np.linspace(0.0, T - 1, out_count)
    lo = np.minimum(np.floor(positions).astype(int), T - 2)
    frac = (positions - lo)[:, None, None]
    out = frames[lo] * (1.0 - frac) + frames[lo + 1] * frac
    out[0] = frames[0]
    out[-1] = frames[-1]
    return out


def window_frames(frames: np.ndarray, target: int = TARGET_FRAMES) -> np.ndarray:
    """Fix the clip length: truncate long clips, hold the last pose on short ones."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] >= target:
        return frames[:target].copy()
    pad = np.repeat(frames[-1:], target - frames.shape[0], axis=0)
    return np.concatenate([frames, pad], axis=0)


def lift_to_standing(frames: np.ndarray, offset: float = OFFSET_HEIGHT) -> np.ndarray:
    out = np.asarray(frames, dtype=np.float64).copy()
    out[:, :, 2] += offset
    return out


def post_process(frames, src_fps: float) -> np.ndarray:
    """The full generator-path chain: joints, rate, window, height."""
    out = expand_to_24_joints(np.asarray(frames, dtype=np.float64))
    out = resample_frames(out, src_fps, TARGET_FPS)
    out = window_frames(out)
    return lift_to_standing(out)
