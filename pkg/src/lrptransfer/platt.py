"""Sigmoid calibration of decision scores into class probabilities.

Fits P(LRP | s) = 1 / (1 + exp(A*s + B)) by Newton iterations with
backtracking on the regularized Bernoulli likelihood, using the smoothed
targets t+ = (N+ + 1)/(N+ + 2) and t- = 1/(N- + 2).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingleClassError

GRAD_TOL = 1e-8
_GRAD_FLOOR_TOL = 1e-5  # accepted when float rounding stops the line search
MAX_ITER = 100
_MIN_STEP = 1e-10
_SIGMA = 1e-12


@dataclass(frozen=True)
class PlattCalibrator:
    """Fitted sigmoid coefficients; A < 0 for a correctly oriented model."""

    A: float
    B: float

    def probability(self, scores):
        z = self.A * np.asarray(scores, dtype=np.float64) + self.B
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
        out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
        return out


def _objective(scores, targets, a, b):
    z = a * scores + b
    # log(1 + exp(-|z|)) kept stable on both branches
    pos = z >= 0
    loss = np.empty_like(z)
    loss[pos] = targets[pos] * z[pos] + np.log1p(np.exp(-z[pos]))
    loss[~pos] = (targets[~pos] - 1.0) * z[~pos] + np.log1p(np.exp(z[~pos]))
    return loss.sum()


def fit_platt(scores, is_target, max_iter=MAX_ITER, grad_tol=GRAD_TOL):
    """Fit the calibrator on decision scores; is_target flags the LRP class."""
    scores = np.asarray(scores, dtype=np.float64)
    is_target = np.asarray(is_target, dtype=bool)
    n_pos = int(is_target.sum())
    n_neg = int(scores.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("calibration needs scores from both classes")
    targets = np.where(
        is_target, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)
    )
    a = 0.0
    b = np.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = _objective(scores, targets, a, b)
    for _ in range(max_iter):
        z = a * scores + b
        pos = z >= 0
        p = np.empty_like(z)
        q = np.empty_like(z)
        ez = np.exp(-np.abs(z))
        p[pos] = ez[pos] / (1.0 + ez[pos])
        p[~pos] = 1.0 / (1.0 + ez[~pos])
        q = 1.0 - p
        d1 = targets - p
        g1 = float(scores @ d1)
        g2 = float(d1.sum())
        if max(abs(g1), abs(g2)) < grad_tol:
            return PlattCalibrator(A=float(a), B=float(b))
        d2 = p * q
        h11 = float(scores @ (d2 * scores)) + _SIGMA
        h22 = float(d2.sum()) + _SIGMA
        h21 = float(scores @ d2)
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= _MIN_STEP:
            new_a, new_b = a + step * da, b + step * db
            new_f = _objective(scores, targets, new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            # The objective is at its floating-point floor; the iterate is
            # the double-precision optimum when the gradient is this small.
            if max(abs(g1), abs(g2)) <= _GRAD_FLOOR_TOL:
                return PlattCalibrator(A=float(a), B=float(b))
            raise ConvergenceError(
                "Platt line search stalled with gradient "
                f"({g1:.3e}, {g2:.3e}) above the accepted floor"
            )
    raise ConvergenceError(
        f"Platt calibration did not reach gradient norm {grad_tol:g} "
        f"within {max_iter} iterations"
    )
