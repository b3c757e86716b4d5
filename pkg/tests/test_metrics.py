import math

import numpy as np
import pytest

from motionloop import (
    MotionClip,
    acc_dist,
    clip_success_rate,
    dataset_success_rate,
    failure_rate_reduction,
    frame_errors,
    g_mpjpe,
    l_mpjpe,
    score_clip,
    vel_dist,
    weighted_average,
)
from motionloop.errors import DegenerateBaseline, EmptySet, ShapeMismatch, TooShort

from conftest import random_clip


# --- independent brute-force references (explicit loops, no shared code) ---

def brute_g_mpjpe(gt, pred):
    total = 0.0
    T, J = gt.frame_count, gt.joint_count
    for t in range(T):
        for j in range(J):
            d = sum((gt.frames[t, j, a] - pred.frames[t, j, a]) ** 2 for a in range(3))
            total += math.sqrt(d)
    return total / (T * J)


def brute_l_mpjpe(gt, pred):
    total = 0.0
    T, J, r = gt.frame_count, gt.joint_count, gt.root_index
    for t in range(T):
        for j in range(J):
            d = 0.0
            for a in range(3):
                local_gt = gt.frames[t, j, a] - gt.frames[t, r, a]
                local_pred = pred.frames[t, j, a] - pred.frames[t, r, a]
                d += (local_gt - local_pred) ** 2
            total += math.sqrt(d)
    return total / (T * J)


def brute_vel_dist(gt, pred):
    total = 0.0
    T, J = gt.frame_count, gt.joint_count
    for t in range(T - 1):
        for j in range(J):
            d = 0.0
            for a in range(3):
                v_gt = (gt.frames[t + 1, j, a] - gt.frames[t, j, a]) * gt.fps
                v_pred = (pred.frames[t + 1, j, a] - pred.frames[t, j, a]) * pred.fps
                d += (v_gt - v_pred) ** 2
            total += math.sqrt(d)
    return total / ((T - 1) * J)


def brute_acc_dist(gt, pred):
    total = 0.0
    T, J = gt.frame_count, gt.joint_count
    for t in range(T - 2):
        for j in range(J):
            d = 0.0
            for a in range(3):
                a_gt = (
                    gt.frames[t + 2, j, a] - 2 * gt.frames[t + 1, j, a] + gt.frames[t, j, a]
                ) * gt.fps**2
                a_pred = (
                    pred.frames[t + 2, j, a] - 2 * pred.frames[t + 1, j, a] + pred.frames[t, j, a]
                ) * pred.fps**2
                d += (a_gt - a_pred) ** 2
            total += math.sqrt(d)
    return total / ((T - 2) * J)


def brute_frame_errors(gt, pred):
    T, J = gt.frame_count, gt.joint_count
    out = []
    for t in range(T):
        total = 0.0
        for j in range(J):
            d = sum((gt.frames[t, j, a] - pred.frames[t, j, a]) ** 2 for a in range(3))
            total += math.sqrt(d)
        out.append(total / J)
    return np.array(out)


def brute_success_rate(gt, pred, tau):
    errors = brute_frame_errors(gt, pred)
    return sum(1 for e in errors if e < tau) / len(errors)


def random_pair(rng):
    gt = random_clip(rng)
    pred = gt.with_frames(gt.frames + rng.normal(scale=0.3, size=gt.frames.shape))
    return gt, pred


# --- identities and hand values ---

def test_g_mpjpe_identity_zero():
    rng = np.random.default_rng(0)
    gt = random_clip(rng)
    assert g_mpjpe(gt, gt.with_frames(gt.frames.copy())) == 0.0


def test_g_mpjpe_constant_offset():
    rng = np.random.default_rng(1)
    gt = random_clip(rng)
    pred = gt.with_frames(gt.frames + np.array([0.0, 0.0, 0.25]))
    assert g_mpjpe(gt, pred) == pytest.approx(0.25, abs=1e-12)


def test_l_mpjpe_whole_body_translation_cancels():
    rng = np.random.default_rng(2)
    gt = random_clip(rng)
    pred = gt.with_frames(gt.frames + np.array([1.0, -2.0, 0.5]))
    assert l_mpjpe(gt, pred) == pytest.approx(0.0, abs=1e-12)


def test_l_mpjpe_root_only_shift():
    rng = np.random.default_rng(3)
    gt = random_clip(rng, joint_count=5)
    frames = gt.frames.copy()
    frames[:, 0, :] += np.array([0.1, 0.0, 0.0])
    pred = gt.with_frames(frames)
    expected = brute_l_mpjpe(gt, pred)
    assert l_mpjpe(gt, pred) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.1 * (5 - 1) / 5, abs=1e-12)


def test_vel_dist_constant_offset_cancels():
    rng = np.random.default_rng(4)
    gt = random_clip(rng)
    pred = gt.with_frames(gt.frames + np.array([0.4, 0.4, 0.4]))
    assert vel_dist(gt, pred) == pytest.approx(0.0, abs=1e-12)


def test_vel_dist_static_prediction():
    gt = MotionClip(frames=np.array([[[0.0, 0, 0]], [[1.0, 0, 0]]]), fps=1.0)
    pred = MotionClip(frames=np.zeros((2, 1, 3)), fps=1.0)
    assert vel_dist(gt, pred) == pytest.approx(1.0, abs=1e-12)


def test_acc_dist_linear_drift_cancels():
    rng = np.random.default_rng(5)
    gt = random_clip(rng)
    drift = np.linspace(0, 1, gt.frame_count)[:, None, None] * np.array([1.0, 2.0, 3.0])
    pred = gt.with_frames(gt.frames + drift)
    assert acc_dist(gt, pred) == pytest.approx(0.0, abs=1e-10)


def test_frame_errors_single_joint_offset():
    gt = MotionClip(frames=np.zeros((1, 1, 3)), fps=30.0)
    pred = MotionClip(frames=np.full((1, 1, 3), [0.3, 0.0, 0.0]), fps=30.0)
    np.testing.assert_allclose(frame_errors(gt, pred), [0.3], atol=1e-12)


def test_shape_mismatch():
    gt = MotionClip(frames=np.zeros((3, 4, 3)), fps=30.0)
    pred = MotionClip(frames=np.zeros((3, 5, 3)), fps=30.0)
    with pytest.raises(ShapeMismatch):
        g_mpjpe(gt, pred)


def test_fps_mismatch():
    gt = MotionClip(frames=np.zeros((3, 4, 3)), fps=30.0)
    pred = MotionClip(frames=np.zeros((3, 4, 3)), fps=20.0)
    with pytest.raises(ShapeMismatch):
        vel_dist(gt, pred)


def test_too_short_for_derivative_metrics():
    gt = MotionClip(frames=np.zeros((1, 2, 3)), fps=30.0)
    with pytest.raises(TooShort):
        vel_dist(gt, gt.with_frames(gt.frames.copy()))
    gt2 = MotionClip(frames=np.zeros((2, 2, 3)), fps=30.0)
    with pytest.raises(TooShort):
        acc_dist(gt2, gt2.with_frames(gt2.frames.copy()))


# --- success rates ---

def fixed_error_pair(errors, tau_axis=0):
    """gt/pred pair whose frame errors equal the given values exactly."""
    T = len(errors)
    gt = MotionClip(frames=np.zeros((T, 2, 3)), fps=30.0)
    frames = np.zeros((T, 2, 3))
    for t, e in enumerate(errors):
        frames[t, :, tau_axis] = e
    return gt, MotionClip(frames=frames, fps=30.0)


def test_success_rate_two_thirds():
    gt, pred = fixed_error_pair([0.2, 0.6, 0.4])
    assert clip_success_rate(gt, pred, 0.5) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_success_rate_strict_boundary():
    gt, pred = fixed_error_pair([0.5, 0.5, 0.5])
    assert clip_success_rate(gt, pred, 0.5) == 0.0


def test_success_rate_identical_clips():
    rng = np.random.default_rng(6)
    gt = random_clip(rng)
    assert clip_success_rate(gt, gt.with_frames(gt.frames.copy()), 0.5) == 1.0


def test_success_rate_monotone_in_tau():
    gt, pred = fixed_error_pair([0.1, 0.3, 0.5, 0.7, 0.9])
    rates = [clip_success_rate(gt, pred, tau) for tau in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert rates == sorted(rates)


def test_dataset_success_rate_mean():
    gt1, pred1 = fixed_error_pair([0.1, 0.1])
    gt2, pred2 = fixed_error_pair([0.9, 0.9])
    reports = [score_clip(gt1, pred1, 0.5), score_clip(gt2, pred2, 0.5)]
    score = dataset_success_rate(reports)
    assert score.dataset_success_rate == pytest.approx(0.5, abs=1e-12)
    assert score.clip_count == 2


def test_dataset_success_rate_single_clip():
    gt, pred = fixed_error_pair([0.2, 0.6])
    report = score_clip(gt, pred, 0.5)
    score = dataset_success_rate([report])
    assert score.dataset_success_rate == report.clip_success_rate


def test_dataset_success_rate_empty():
    with pytest.raises(EmptySet):
        dataset_success_rate([])


def test_dataset_success_rate_many_random():
    rng = np.random.default_rng(7)
    reports = []
    expected = 0.0
    for _ in range(100):
        gt, pred = random_pair(rng)
        report = score_clip(gt, pred, 0.5)
        reports.append(report)
        expected += brute_success_rate(gt, pred, 0.5)
    expected /= len(reports)
    assert dataset_success_rate(reports).dataset_success_rate == pytest.approx(expected, abs=1e-12)


# --- published-table arithmetic ---

TABLE_COUNTS = (663, 45, 1320, 173)


def test_weighted_average_final_loop_row():
    rates = (60.3, 64.4, 88.1, 58.9)
    avg = weighted_average(list(zip(rates, TABLE_COUNTS)))
    assert avg == pytest.approx(76.9, abs=0.05)


def test_weighted_average_baseline_row():
    rates = (47.1, 53.3, 67.6, 31.2)
    avg = weighted_average(list(zip(rates, TABLE_COUNTS)))
    assert avg == pytest.approx(58.3, abs=0.05)


def test_weighted_average_equal_counts_is_mean():
    avg = weighted_average([(10.0, 7), (20.0, 7), (60.0, 7)])
    assert avg == pytest.approx(30.0, abs=1e-12)


def test_failure_rate_reduction_headline():
    assert failure_rate_reduction(58.3, 76.9) == pytest.approx(45.0, abs=1.0)


def test_failure_rate_reduction_no_change():
    assert failure_rate_reduction(70.0, 70.0) == 0.0


def test_failure_rate_reduction_total():
    assert failure_rate_reduction(50.0, 100.0) == pytest.approx(100.0, abs=1e-12)


def test_failure_rate_reduction_degenerate():
    with pytest.raises(DegenerateBaseline):
        failure_rate_reduction(100.0, 99.0)


# --- oracle equivalence & metric properties on random clips ---

def test_all_metrics_match_bruteforce_on_random_clips():
    rng = np.random.default_rng(8)
    for _ in range(50):
        gt, pred = random_pair(rng)
        assert g_mpjpe(gt, pred) == pytest.approx(brute_g_mpjpe(gt, pred), abs=1e-12)
        assert l_mpjpe(gt, pred) == pytest.approx(brute_l_mpjpe(gt, pred), abs=1e-12)
        assert vel_dist(gt, pred) == pytest.approx(brute_vel_dist(gt, pred), abs=1e-12)
        assert acc_dist(gt, pred) == pytest.approx(brute_acc_dist(gt, pred), abs=1e-12)
        np.testing.assert_allclose(
            frame_errors(gt, pred), brute_frame_errors(gt, pred), atol=1e-12
        )


def test_metrics_nonnegative_and_symmetric():
    rng = np.random.default_rng(9)
    for _ in range(20):
        gt, pred = random_pair(rng)
        for metric in (g_mpjpe, l_mpjpe, vel_dist, acc_dist):
            forward = metric(gt, pred)
            assert forward >= 0.0
            assert metric(pred, gt) == pytest.approx(forward, abs=1e-12)


def test_global_metrics_invariant_under_common_translation():
    rng = np.random.default_rng(10)
    gt, pred = random_pair(rng)
    shift = np.array([5.0, -3.0, 2.0])
    gt2 = gt.with_frames(gt.frames + shift)
    pred2 = pred.with_frames(pred.frames + shift)
    assert g_mpjpe(gt2, pred2) == pytest.approx(g_mpjpe(gt, pred), abs=1e-12)
    assert l_mpjpe(gt2, pred2) == pytest.approx(l_mpjpe(gt, pred), abs=1e-12)


def test_l_mpjpe_invariant_under_independent_translations():
    rng = np.random.default_rng(11)
    gt, pred = random_pair(rng)
    gt2 = gt.with_frames(gt.frames + np.array([1.0, 2.0, 3.0]))
    pred2 = pred.with_frames(pred.frames + np.array([-4.0, 0.5, 9.0]))
    assert l_mpjpe(gt2, pred2) == pytest.approx(l_mpjpe(gt, pred), abs=1e-12)


def test_report_record_roundtrip():
    rng = np.random.default_rng(12)
    gt, pred = random_pair(rng)
    report = score_clip(gt, pred, 0.5)
    from motionloop.metrics import MetricReport

    back = MetricReport.from_record(report.to_record())
    assert back.g_mpjpe == report.g_mpjpe
    assert back.clip_success_rate == report.clip_success_rate
    np.testing.assert_array_equal(back.frame_errors, report.frame_errors)
