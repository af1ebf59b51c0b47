"""Spatial filtering that enhances the evoked response against background.

Filters solve the generalized eigenproblem between the covariance of the
class-mean (evoked) window and the covariance of all training windows;
the top components maximize the evoked-to-background energy ratio.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh

from .errors import FitError

N_PSEUDO_CHANNELS = 4
DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True)
class SpatialFilterModel:
    """Fitted spatial filters, one column per pseudo-channel."""

    filters: np.ndarray  # (channels, n_filters)
    channel_names: tuple

    @property
    def n_filters(self):
        return self.filters.shape[1]


def _covariance(windows):
    """Average per-window scatter, (channels, channels)."""
    n_windows, _, n_samples = windows.shape
    flat = windows.transpose(1, 0, 2).reshape(windows.shape[1], -1)
    return flat @ flat.T / (n_windows * n_samples)


def _ridge(matrix, scale):
    n = matrix.shape[0]
    lam = scale * np.trace(matrix) / n
    return matrix + lam * np.eye(n)


def fit_xdawn(windows, is_target, channel_names, n_filters=N_PSEUDO_CHANNELS,
              ridge=DEFAULT_RIDGE):
    """Fit spatial filters from labeled training windows.

    windows is (n, channels, samples); is_target flags the evoked (LRP)
    class. Eigenvectors are normalized in the whitened metric
    (v' Cx v = 1) and sign-fixed for determinism.
    """
    if is_target.sum() < 2:
        raise FitError("need at least 2 evoked-class windows to fit spatial filters")
    n_channels = windows.shape[1]
    evoked = windows[is_target].mean(axis=0)
    c_evoked = evoked @ evoked.T / evoked.shape[1]
    c_all = _covariance(windows)
    k = min(n_filters, n_channels)
    for attempt_ridge in (ridge, ridge * 1e3):
        try:
            vals, vecs = eigh(_ridge(c_evoked, attempt_ridge), _ridge(c_all, attempt_ridge))
            break
        except LinAlgError:
            continue
    else:
        raise FitError("covariance remained singular after ridge regularization")
    order = np.argsort(vals)[::-1]
    filters = vecs[:, order[:k]]
    # Deterministic sign: the largest-magnitude coefficient is positive.
    anchor = np.abs(filters).argmax(axis=0)
    signs = np.sign(filters[anchor, np.arange(k)])
    signs[signs == 0] = 1.0
    return SpatialFilterModel(filters=filters * signs, channel_names=tuple(channel_names))


def apply_xdawn(model, data):
    """Project windows onto pseudo-channels: (..., channels, samples) -> (..., k, samples)."""
    if data.shape[-2] != model.filters.shape[0]:
        raise ValueError(
            f"window has {data.shape[-2]} channels, filters expect "
            f"{model.filters.shape[0]}"
        )
    return np.einsum("ck,...cs->...ks", model.filters, data)
