"""SMPL-compatible 24-joint skeleton constants and reference poses.

Coordinates are meters, Z-up, ground plane at z=0. The 22-joint body is the
24-joint skeleton without the two hand joints (indices 22, 23).
"""

from __future__ import annotations

import numpy as np

# Parent index per joint; -1 marks the root (pelvis).
SMPL_PARENTS_24: tuple[int, ...] = (
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
    9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
)

SMPL_JOINT_NAMES_24: tuple[str, ...] = (
    "pelvis", "left_hip", "right_hip", "spine1",
    "left_knee", "right_knee", "spine2",
    "left_ankle", "right_ankle", "spine3",
    "left_foot", "right_foot", "neck",
    "left_collar", "right_collar", "head",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hand", "right_hand",
)

ROOT_INDEX = 0
LEFT_WRIST, RIGHT_WRIST = 20, 21
LEFT_HAND, RIGHT_HAND = 22, 23

# Ankles and toes; used by the default foot-penetration check.
DEFAULT_FOOT_JOINTS: tuple[int, ...] = (7, 8, 10, 11)

# Rest (T-pose) joint positions relative to the pelvis, meters.
# Left is +x, forward is +y, up is +z.
_REST_OFFSETS = np.array([
    [0.00, 0.00, 0.00],    # pelvis
    [0.09, 0.00, -0.05],   # left_hip
    [-0.09, 0.00, -0.05],  # right_hip
    [0.00, 0.00, 0.11],    # spine1
    [0.10, 0.00, -0.45],   # left_knee
    [-0.10, 0.00, -0.45],  # right_knee
    [0.00, 0.00, 0.24],    # spine2
    [0.10, 0.00, -0.84],   # left_ankle
    [-0.10, 0.00, -0.84],  # right_ankle
    [0.00, 0.00, 0.30],    # spine3
    [0.11, 0.12, -0.90],   # left_foot
    [-0.11, 0.12, -0.90],  # right_foot
    [0.00, 0.00, 0.40],    # neck
    [0.07, 0.00, 0.37],    # left_collar
    [-0.07, 0.00, 0.37],   # right_collar
    [0.00, 0.00, 0.52],    # head
    [0.18, 0.00, 0.38],    # left_shoulder
    [-0.18, 0.00, 0.38],   # right_shoulder
    [0.44, 0.00, 0.38],    # left_elbow
    [-0.44, 0.00, 0.38],   # right_elbow
    [0.70, 0.00, 0.38],    # left_wrist
    [-0.70, 0.00, 0.38],   # right_wrist
    [0.78, 0.00, 0.38],    # left_hand
    [-0.78, 0.00, 0.38],   # right_hand
], dtype=np.float64)


def rest_pose(joint_count: int = 24, pelvis_height: float = 0.92) -> np.ndarray:
    """Return a (J, 3) T-pose standing on the ground plane.

    ``pelvis_height`` places the root; the default 0.92 m leaves the toes
    0.02 m above z=0.
    """
    if joint_count not in (22, 24):
        raise ValueError(f"joint_count must be 22 or 24, got {joint_count}")
    pose = _REST_OFFSETS[:joint_count].copy()
    pose[:, 2] += pelvis_height
    return pose


def bone_segments(joint_count: int = 24) -> list[tuple[int, int]]:
    """Parent-child joint index pairs for drawing the skeleton."""
    return [
        (parent, child)
        for child, parent in enumerate(SMPL_PARENTS_24[:joint_count])
        if parent >= 0
    ]
