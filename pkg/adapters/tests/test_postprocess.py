import numpy as np
import pytest

from motionloop_adapters.postprocess import (
    expand_to_24_joints,
    lift_to_standing,
    post_process,
    resample_frames,
    window_frames,
)


def raw_motion(frames=120, joints=22):
    rng = np.random.default_rng(0)
    t = np.arange(frames)
    out = np.zeros((frames, joints, 3))
    out[:, :, 0] = 0.2 * np.sin(2 * np.pi * 2 * t / frames)[:, None]
    out[:, :, 2] = np.linspace(0, 0.04 * (joints - 1), joints)[None, :]
    out += rng.normal(scale=0.002, size=out.shape)
    return out


def test_expand_copies_wrists():
    motion = raw_motion()
    out = expand_to_24_joints(motion)
    assert out.shape == (120, 24, 3)
    np.testing.assert_array_equal(out[:, :22], motion)
    np.testing.assert_array_equal(out[:, 22], motion[:, 20])
    np.testing.assert_array_equal(out[:, 23], motion[:, 21])


def test_expand_passthrough_for_24():
    motion = np.zeros((5, 24, 3))
    assert expand_to_24_joints(motion).shape == (5, 24, 3)


def test_expand_rejects_other_sizes():
    with pytest.raises(ValueError):
        expand_to_24_joints(np.zeros((5, 17, 3)))


def test_resample_counts_and_endpoints():
    motion = raw_motion(120)
    out = resample_frames(motion, 20.0, 30.0)
    assert out.shape[0] == 180
    np.testing.assert_array_equal(out[0], motion[0])
    np.testing.assert_array_equal(out[-1], motion[-1])


def test_window_truncates_and_pads():
    long = raw_motion(200)
    short = raw_motion(150)
    assert window_frames(long).shape[0] == 180
    padded = window_frames(short)
    assert padded.shape[0] == 180
    np.testing.assert_array_equal(padded[150:], np.repeat(short[-1:], 30, axis=0))


def test_full_chain():
    out = post_process(raw_motion(90), src_fps=20.0)
    assert out.shape == (180, 24, 3)
    # 90 frames at 20 fps resample to 135 at 30 fps, then pad to 180
    np.testing.assert_array_equal(out[135:], np.repeat(out[134:135], 45, axis=0))
    assert abs(out[:, 0, 2].mean() - 0.92) < 0.02


def test_lift_only_touches_z():
    motion = raw_motion(10)
    lifted = lift_to_standing(motion, 0.92)
    np.testing.assert_array_equal(lifted[:, :, :2], motion[:, :, :2])
    np.testing.assert_allclose(lifted[:, :, 2] - motion[:, :, 2], 0.92)
