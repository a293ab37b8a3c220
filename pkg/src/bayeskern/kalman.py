"""Scalar AR(1) state-space model: Kalman filter, backward smoother, lag prediction.

Model: ``f_t = gamma f_{t-1} + v_t`` with ``v_t ~ N(0, process_var)`` and
``y_t = f_t + e_t`` with ``e_t ~ N(0, obs_var)``, observed at t = 1..N.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange
from .kernels import ar1_covariance


@dataclass(frozen=True)
class StateSpaceAR1:
    gamma: float
    process_var: float
    obs_var: float = 0.0

    def __post_init__(self):
        if not abs(self.gamma) < 1:
            raise ValueError(f"|gamma| must be < 1, got {self.gamma}")
        if not (self.process_var > 0 and math.isfinite(self.process_var)):
            raise ValueError("process_var must be finite and > 0")
        if not (self.obs_var >= 0 and math.isfinite(self.obs_var)):
            raise ValueError("obs_var must be finite and >= 0")


def stationary_variance(model):
    return model.process_var / (1.0 - model.gamma ** 2)


def ar1_kernel(model, t, t2):
    """Stationary covariance between ``f_t`` and ``f_t2``."""
    return float(ar1_covariance(t - t2, model.gamma, model.process_var))


def covariance_matrix(model, n):
    """Stationary ``n x n`` covariance of ``(f_1, ..., f_n)``."""
    idx = np.arange(n)
    return ar1_covariance(idx[:, None] - idx[None, :], model.gamma, model.process_var)


def precision_matrix(model, n):
    """Tridiagonal inverse of :func:`covariance_matrix`."""
    if n < 2:
        raise ValueError("precision_matrix needs n >= 2")
    g = model.gamma
    p = np.zeros((n, n))
    diag = np.full(n, 1.0 + g * g)
    diag[0] = diag[-1] = 1.0
    p[np.arange(n), np.arange(n)] = diag
    off = np.arange(n - 1)
    p[off, off + 1] = p[off + 1, off] = -g
    return p / model.process_var


@dataclass(frozen=True)
class FilterTrack:
    """Predicted ``(mean, var)`` of ``f_t | y_1..y_{t-1}`` and filtered ``f_t | y_1..y_t``."""

    mean_pred: np.ndarray
    var_pred: np.ndarray
    mean_filt: np.ndarray
    var_filt: np.ndarray

    def __len__(self):
        return self.mean_filt.size


@dataclass(frozen=True)
class SmoothTrack:
    mean: np.ndarray
    var: np.ndarray


def forward_filter(model, y, init=None):
    """Kalman filter over ``y_1..y_N``.

    ``init`` is the ``(mean, var)`` of the state ``f_0`` before the first
    prediction step. The default is the stationary law, so every
    ``f_t`` starts from the stationary marginal; ``(0, 0)`` gives the
    transient process started at zero.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    g, q, r = model.gamma, model.process_var, model.obs_var
    mu, var = (0.0, stationary_variance(model)) if init is None else map(float, init)
    n = y.size
    mp, vp, mf, vf = (np.empty(n) for _ in range(4))
    for t in range(n):
        mu, var = g * mu, g * g * var + q
        mp[t], vp[t] = mu, var
        if r == 0:
            mu, var = y[t], 0.0
        else:
            denom = var + r
            mu = r / denom * mu + var / denom * y[t]
            var = var * r / denom
        mf[t], vf[t] = mu, var
    return FilterTrack(mp, vp, mf, vf)


def backward_smooth(model, track):
    """Backward recursion from t = N-1 down to 1 with gain ``gamma var_filt / var_pred``."""
    n = len(track)
    m, v = track.mean_filt.copy(), track.var_filt.copy()
    g = model.gamma
    for t in range(n - 2, -1, -1):
        gain = g * track.var_filt[t] / track.var_pred[t + 1]
        m[t] = track.mean_filt[t] + gain * (m[t + 1] - track.mean_pred[t + 1])
        v[t] = track.var_filt[t] + gain * gain * (v[t + 1] - track.var_pred[t + 1])
    return SmoothTrack(m, np.maximum(v, 0.0))


def predict_lag(model, track, t, lag):
    """Law of ``f_{t+lag}`` given ``y_1..y_t`` (``t`` is 1-based)."""
    if not 1 <= t <= len(track):
        raise IndexOutOfRange(f"t must be in [1, {len(track)}], got {t}")
    if lag < 1:
        raise ValueError("lag must be >= 1")
    mu, var = track.mean_filt[t - 1], track.var_filt[t - 1]
    g, q = model.gamma, model.process_var
    for _ in range(int(lag)):
        mu, var = g * mu, g * g * var + q
    return mu, var
