import numpy as np
import pytest

from motionloop import seed_library, seed_templates
from motionloop.clips import MotionClip


@pytest.fixture(scope="session")
def lib():
    return seed_library()


@pytest.fixture(scope="session")
def templates():
    return seed_templates()


def random_clip(rng, frame_count=None, joint_count=None, fps=None, clip_id="rand"):
    """Small random clip for oracle comparisons.

    The default fps range is low so derivative metrics stay O(1) and an
    absolute 1e-12 oracle tolerance is meaningful (fps^2 scales accelerations
    past double-precision ulp otherwise).
    """
    T = frame_count if frame_count is not None else int(rng.integers(3, 11))
    J = joint_count if joint_count is not None else int(rng.integers(1, 6))
    frames = rng.normal(scale=1.0, size=(T, J, 3))
    return MotionClip(
        frames=frames,
        fps=fps if fps is not None else float(rng.integers(1, 5)),
        root_index=0,
        clip_id=clip_id,
    )
