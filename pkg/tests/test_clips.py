import math

import numpy as np
import pytest

from motionloop import (
    MotionClip,
    apply_offset_height,
    clip_mean_speed,
    expand_joints,
    finite_acceleration,
    finite_velocity,
    load_clip,
    resample,
    save_clip,
    standard_post_process,
)
from motionloop.errors import (
    IoFailure,
    JointCountUnsupported,
    MalformedFile,
    NonFiniteCoordinate,
    TooShort,
    WrongJointCount,
)
from motionloop.skeleton import rest_pose

from conftest import random_clip


def single_joint_clip(positions, fps=1.0):
    frames = np.asarray(positions, dtype=np.float64).reshape(-1, 1, 3)
    return MotionClip(frames=frames, fps=fps, clip_id="single")


# --- construction invariants ---

def test_nan_coordinate_rejected():
    frames = np.zeros((2, 22, 3))
    frames[1, 3, 0] = np.nan
    with pytest.raises(NonFiniteCoordinate):
        MotionClip(frames=frames, fps=30.0)


def test_nonpositive_fps_rejected():
    with pytest.raises(ValueError):
        MotionClip(frames=np.zeros((1, 22, 3)), fps=0.0)


def test_root_index_out_of_range_rejected():
    with pytest.raises(ValueError):
        MotionClip(frames=np.zeros((1, 22, 3)), fps=30.0, root_index=22)


# --- file round trips ---

def test_save_load_roundtrip_180_frames(tmp_path):
    rng = np.random.default_rng(0)
    clip = random_clip(rng, frame_count=180, joint_count=24, fps=30.0, clip_id="walk")
    path = tmp_path / "walk.clip"
    save_clip(clip, path)
    loaded = load_clip(path)
    assert loaded.frame_count == 180
    assert loaded.joint_count == 24
    assert loaded == clip


def test_roundtrip_property_random_clips(tmp_path):
    rng = np.random.default_rng(1)
    for i in range(25):
        joint_count = int(rng.choice([22, 24]))
        clip = random_clip(rng, joint_count=joint_count, clip_id=f"rt-{i}")
        clip.source_prompt_id = None if i % 2 else f"prompt-{i}"
        path = tmp_path / f"rt-{i}.clip"
        save_clip(clip, path)
        assert load_clip(path) == clip


def test_roundtrip_single_frame(tmp_path):
    clip = MotionClip(frames=np.arange(66, dtype=float).reshape(1, 22, 3), fps=30.0)
    path = tmp_path / "one.clip"
    save_clip(clip, path)
    assert load_clip(path) == clip


def test_load_nan_file_rejected(tmp_path):
    clip = MotionClip(frames=np.zeros((1, 22, 3)), fps=30.0)
    path = tmp_path / "bad.clip"
    save_clip(clip, path)
    lines = path.read_text().splitlines()
    tokens = lines[-1].split()
    tokens[3] = "nan"
    lines[-1] = " ".join(tokens)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(NonFiniteCoordinate):
        load_clip(path)


def test_load_unsupported_joint_count(tmp_path):
    path = tmp_path / "bad.clip"
    lines = ["motionloop-clip 1", "clip_id: x", "fps: 30.0", "joint_count: 17",
             "root_index: 0", "frames: 1", " ".join(["0.0"] * 51)]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(JointCountUnsupported):
        load_clip(path)


def test_load_malformed_header(tmp_path):
    path = tmp_path / "bad.clip"
    path.write_text("not a clip\n")
    with pytest.raises(MalformedFile):
        load_clip(path)


def test_load_wrong_row_width(tmp_path):
    clip = MotionClip(frames=np.zeros((2, 22, 3)), fps=30.0)
    path = tmp_path / "bad.clip"
    save_clip(clip, path)
    lines = path.read_text().splitlines()
    lines[-1] = "0.0 1.0"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedFile):
        load_clip(path)


def test_save_unwritable_path():
    clip = MotionClip(frames=np.zeros((1, 22, 3)), fps=30.0)
    with pytest.raises(IoFailure):
        save_clip(clip, "/nonexistent-dir/sub/clip.clip")


# --- resample ---

def test_resample_20_to_30_fps_preserves_duration():
    rng = np.random.default_rng(2)
    clip = random_clip(rng, frame_count=120, joint_count=22, fps=20.0)
    out = resample(clip, 30.0)
    assert out.frame_count == 180
    assert out.fps == 30.0
    assert out.duration == pytest.approx(clip.duration, abs=1.0 / 30.0)
    np.testing.assert_array_equal(out.frames[0], clip.frames[0])
    np.testing.assert_array_equal(out.frames[-1], clip.frames[-1])


def test_resample_linear_trajectory_stays_on_segment():
    positions = np.linspace([0, 0, 0], [1, 0, 0], 11)
    clip = single_joint_clip(positions, fps=10.0)
    out = resample(clip, 25.0)
    xs = out.frames[:, 0, 0]
    # every sample on the segment, monotone from 0 to 1
    assert np.all((xs >= -1e-12) & (xs <= 1 + 1e-12))
    np.testing.assert_allclose(np.diff(xs), np.diff(xs)[0], atol=1e-12)
    assert out.frames[0, 0, 0] == 0.0 and out.frames[-1, 0, 0] == 1.0


def test_resample_same_fps_identity():
    rng = np.random.default_rng(3)
    clip = random_clip(rng, frame_count=50, fps=30.0)
    out = resample(clip, 30.0)
    assert out == clip


def test_resample_constant_clip_stays_constant():
    clip = MotionClip(frames=np.ones((40, 5, 3)) * 2.5, fps=20.0)
    out = resample(clip, 33.0)
    np.testing.assert_array_equal(out.frames, np.ones_like(out.frames) * 2.5)


def test_resample_too_short():
    clip = MotionClip(frames=np.zeros((1, 5, 3)), fps=30.0)
    with pytest.raises(TooShort):
        resample(clip, 60.0)


# --- joint expansion ---

def test_expand_joints_preserves_body_and_copies_wrists():
    rng = np.random.default_rng(4)
    clip = random_clip(rng, frame_count=10, joint_count=22)
    out = expand_joints(clip)
    assert out.joint_count == 24
    np.testing.assert_array_equal(out.frames[:, :22], clip.frames)
    np.testing.assert_array_equal(out.frames[:, 22], clip.frames[:, 20])
    np.testing.assert_array_equal(out.frames[:, 23], clip.frames[:, 21])


def test_expand_joints_rejects_24():
    clip = MotionClip(frames=np.zeros((1, 24, 3)), fps=30.0)
    with pytest.raises(WrongJointCount):
        expand_joints(clip)


# --- finite differences ---

def brute_velocity(clip):
    T, J = clip.frame_count, clip.joint_count
    out = np.zeros((T - 1, J, 3))
    for t in range(T - 1):
        for j in range(J):
            for a in range(3):
                out[t, j, a] = (clip.frames[t + 1, j, a] - clip.frames[t, j, a]) * clip.fps
    return out


def brute_acceleration(clip):
    vel = brute_velocity(clip)
    T = vel.shape[0]
    out = np.zeros((T - 1, clip.joint_count, 3))
    for t in range(T - 1):
        for j in range(clip.joint_count):
            for a in range(3):
                out[t, j, a] = (vel[t + 1, j, a] - vel[t, j, a]) * clip.fps
    return out


def brute_mean_speed(clip):
    total, count = 0.0, 0
    for t in range(clip.frame_count - 1):
        for j in range(clip.joint_count):
            dx = [(clip.frames[t + 1, j, a] - clip.frames[t, j, a]) * clip.fps for a in range(3)]
            total += math.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
            count += 1
    return total / count


def test_velocity_definition():
    clip = single_joint_clip([[0, 0, 0], [1, 0, 0]], fps=1.0)
    series = finite_velocity(clip)
    assert series.order == 1 and series.dt == 1.0
    np.testing.assert_array_equal(series.values, [[[1.0, 0.0, 0.0]]])


def test_velocity_dt_normalization():
    clip = single_joint_clip([[0, 0, 0], [1, 0, 0]], fps=2.0)
    np.testing.assert_array_equal(finite_velocity(clip).values, [[[2.0, 0.0, 0.0]]])


def test_velocity_constant_clip_zero():
    clip = MotionClip(frames=np.ones((7, 4, 3)), fps=30.0)
    assert np.all(finite_velocity(clip).values == 0.0)


def test_acceleration_second_difference():
    clip = single_joint_clip([[0, 0, 0], [1, 0, 0], [3, 0, 0]], fps=1.0)
    series = finite_acceleration(clip)
    assert series.order == 2
    np.testing.assert_array_equal(series.values, [[[1.0, 0.0, 0.0]]])


def test_acceleration_linear_trajectory_zero():
    positions = np.linspace([0, 1, 2], [9, 1, 2], 10)
    clip = single_joint_clip(positions, fps=5.0)
    np.testing.assert_allclose(finite_acceleration(clip).values, 0.0, atol=1e-10)


def test_acceleration_too_short():
    clip = single_joint_clip([[0, 0, 0], [1, 0, 0]], fps=1.0)
    with pytest.raises(TooShort):
        finite_acceleration(clip)


def test_finite_differences_match_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(30):
        clip = random_clip(rng)
        np.testing.assert_allclose(
            finite_velocity(clip).values, brute_velocity(clip), atol=1e-12
        )
        np.testing.assert_allclose(
            finite_acceleration(clip).values, brute_acceleration(clip), atol=1e-12
        )


# --- mean speed ---

def test_mean_speed_constant_clip_zero():
    clip = MotionClip(frames=np.ones((10, 3, 3)), fps=30.0)
    assert clip_mean_speed(clip) == 0.0


def test_mean_speed_unit_step_at_30fps():
    positions = [[t, 0.0, 0.0] for t in range(5)]
    clip = single_joint_clip(positions, fps=30.0)
    assert clip_mean_speed(clip) == pytest.approx(30.0, abs=1e-12)


def test_mean_speed_matches_bruteforce():
    rng = np.random.default_rng(6)
    for _ in range(30):
        clip = random_clip(rng)
        assert clip_mean_speed(clip) == pytest.approx(brute_mean_speed(clip), abs=1e-12)


def test_mean_speed_translation_invariant():
    rng = np.random.default_rng(7)
    clip = random_clip(rng, frame_count=8, joint_count=4)
    shifted = clip.with_frames(clip.frames + np.array([3.0, -2.0, 11.0]))
    assert clip_mean_speed(shifted) == pytest.approx(clip_mean_speed(clip), abs=1e-12)


# --- height offset ---

def test_offset_zero_identity():
    rng = np.random.default_rng(8)
    clip = random_clip(rng)
    assert apply_offset_height(clip, 0.0) == clip


def test_offset_092_lifts_root():
    clip = MotionClip(frames=np.zeros((3, 24, 3)), fps=30.0)
    out = apply_offset_height(clip, 0.92)
    np.testing.assert_array_equal(out.frames[:, 0, 2], 0.92)


def test_offset_inverse_within_tolerance():
    rng = np.random.default_rng(9)
    clip = random_clip(rng)
    out = apply_offset_height(apply_offset_height(clip, 0.92), -0.92)
    np.testing.assert_allclose(out.frames, clip.frames, atol=1e-12)


# --- generator post-processing chain ---

def test_standard_post_process_chain():
    rng = np.random.default_rng(10)
    base = rest_pose(22, pelvis_height=0.0)
    wobble = rng.normal(scale=0.01, size=(120, 22, 3))
    clip = MotionClip(frames=base[None] + wobble, fps=20.0, clip_id="gen")
    out = standard_post_process(clip, target_fps=30.0, offset_height=0.92)
    assert out.frame_count == 180
    assert out.joint_count == 24
    assert out.fps == 30.0
    # root baseline lifted to about standing height
    assert out.frames[:, 0, 2].mean() == pytest.approx(0.92, abs=0.02)
    # endpoints preserved through the chain (expansion + offset applied)
    expected_first = np.vstack([clip.frames[0], clip.frames[0, 20:22]])
    expected_first = expected_first + np.array([0.0, 0.0, 0.92])
    np.testing.assert_allclose(out.frames[0], expected_first, atol=1e-12)
