import numpy as np
import pytest

from lrptransfer.errors import SingleClassError
from lrptransfer.platt import PlattCalibrator, fit_platt


def test_symmetric_scores_give_half_at_zero():
    scores = np.array([-1.0] * 20 + [1.0] * 20)
    labels = np.array([False] * 20 + [True] * 20)
    cal = fit_platt(scores, labels)
    assert abs(cal.B) < 0.05
    assert cal.probability(np.array([0.0]))[0] == pytest.approx(0.5, abs=0.02)
    assert cal.A < 0


def test_probability_strictly_monotone():
    scores = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    labels = np.array([False, False, False, True, True, True])
    cal = fit_platt(scores, labels)
    grid = np.linspace(-10, 10, 201)
    p = cal.probability(grid)
    assert (np.diff(p) > 0).all()
    assert (p > 0).all() and (p < 1).all()


def test_calibrated_log_loss_beats_hard_mapping(rng):
    # oracle: direct log-loss comparison against the uncalibrated 0/1 map
    scores = np.concatenate([rng.normal(-1, 1, 300), rng.normal(1, 1, 200)])
    labels = np.array([False] * 300 + [True] * 200)
    cal = fit_platt(scores, labels)
    p = np.clip(cal.probability(scores), 1e-12, 1 - 1e-12)
    calibrated = -np.mean(np.where(labels, np.log(p), np.log(1 - p)))
    hard = np.clip((scores > 0).astype(float), 1e-12, 1 - 1e-12)
    uncalibrated = -np.mean(np.where(labels, np.log(hard), np.log(1 - hard)))
    assert calibrated <= uncalibrated


def test_platt_target_smoothing_bounds_probabilities(rng):
    # perfectly separated scores: smoothed targets keep A finite
    scores = np.array([-3.0] * 30 + [3.0] * 10)
    labels = np.array([False] * 30 + [True] * 10)
    cal = fit_platt(scores, labels)
    p = cal.probability(scores)
    assert p.max() < 1.0 and p.min() > 0.0
    assert np.isfinite(cal.A) and np.isfinite(cal.B)


def test_single_class_rejected():
    with pytest.raises(SingleClassError):
        fit_platt(np.array([1.0, 2.0]), np.array([True, True]))


def test_constant_scores_fall_back_to_base_rate():
    scores = np.zeros(50)
    labels = np.array([True] * 20 + [False] * 30)
    cal = fit_platt(scores, labels)
    p = cal.probability(scores)
    assert np.allclose(p, p[0])
    assert p[0] == pytest.approx(20 / 50, abs=0.05)


def test_probability_matches_formula():
    cal = PlattCalibrator(A=-1.5, B=0.25)
    s = np.array([-2.0, 0.0, 3.0])
    expected = 1.0 / (1.0 + np.exp(cal.A * s + cal.B))
    assert np.allclose(cal.probability(s), expected, atol=1e-12)
