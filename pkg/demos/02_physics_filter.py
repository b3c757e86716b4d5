"""
Physical validity gate
======================

Smooth a clip's root trajectory and run the two validity checks the loop
applies before a generated clip may enter the training set.
"""

import numpy as np

from motionloop import FilterConfig, MotionClip, gaussian_smooth_root, validate
from motionloop.skeleton import DEFAULT_FOOT_JOINTS, rest_pose

cfg = FilterConfig()
print(f"root height bounds [{cfg.root_height_min}, {cfg.root_height_max}] m, "
      f"penetration tolerance {cfg.penetration_tolerance} m, "
      f"gaussian sigma {cfg.gaussian_sigma} frames")

pose = rest_pose(24, pelvis_height=0.92)
standing = MotionClip(frames=np.repeat(pose[None], 40, axis=0), fps=30.0, clip_id="standing")
print("standing clip:", "accepted" if validate(standing, cfg).accepted else "rejected")

# A clip that floats away: root above the ceiling in every frame.
floating = standing.with_frames(standing.frames + np.array([0.0, 0.0, 2.0]))
verdict = validate(floating, cfg)
reason = verdict.reasons[0]
print(f"floating clip: rejected -> {reason.kind} at frame {reason.frame} (z={reason.value:.2f})")

# A sneaky one: at frame 20 the body jumps while the legs reach far down.
# Raw coordinates stay legal; smoothing removes the root spike and the deep
# foot pose follows the body down through the floor.
frames = standing.frames.copy()
frames[20, :, 2] += 0.9
for j in DEFAULT_FOOT_JOINTS:
    frames[20, j, 2] -= 0.95
sneaky = standing.with_frames(frames)
verdict = validate(sneaky, cfg)
reason = verdict.reasons[0]
print(f"compensated spike: rejected only after smoothing -> {reason.kind} "
      f"at frame {reason.frame} (z={reason.value:.2f})")

# Smoothing is a denoiser: second-difference energy of the root never grows.
rng = np.random.default_rng(1)
noisy = standing.with_frames(standing.frames + rng.normal(scale=0.2, size=(40, 1, 3)))
smoothed = gaussian_smooth_root(noisy, cfg)


def roughness(clip):
    root = clip.root_trajectory()
    second = root[2:] - 2 * root[1:-1] + root[:-2]
    return float((second**2).sum())


print(f"root roughness before {roughness(noisy):.3f} -> after {roughness(smoothed):.3f}")
