"""Linear kernel smoothers: predictions of the form ``sum_n w_n(x) y_n``.

:func:`weights` returns the weight vector for one query point; every
``predict`` is the dot product of those weights with the outputs. Filters
(:func:`fir_apply`, :func:`iir_apply`) act on sequences instead.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .data import as_inputs
from .errors import (
    BadK,
    DuplicateInputs,
    NonEquidistantGrid,
    SequenceTooShort,
)
from .numerics import psd_solve

log = logging.getLogger(__name__)

METHODS = ("rvm", "gp", "nadaraya-watson", "knn", "idw", "lagrange", "sinc")


@dataclass(frozen=True)
class WeightProfile:
    query: np.ndarray
    weights: np.ndarray


def _gaussian_window(d2, lengthscale):
    return np.exp(-d2 / lengthscale)


def _sq_dist(x, X):
    return np.sum((X - x) ** 2, axis=1)


def nadaraya_watson_weights(x, X, lengthscale=1.0, window=None):
    """Normalized window weights ``h(x, x_n) / sum_j h(x, x_j)``.

    ``window`` maps ``(x, X)`` to unnormalized weights; the default is
    ``exp(-|x - x_n|^2 / lengthscale)``. If the weights sum to less than 1e-300
    the unweighted mean is used instead.
    """
    h = _gaussian_window(_sq_dist(x, X), lengthscale) if window is None else np.asarray(window(x, X), dtype=float)
    total = h.sum()
    if not total >= 1e-300:
        log.warning("Nadaraya-Watson window vanishes at %s; using the plain mean", x)
        return np.full(X.shape[0], 1.0 / X.shape[0])
    return h / total


def knn_weights(x, X, k):
    """Weight ``1/k`` on each of the ``k`` nearest inputs (ties go to the lower index)."""
    n = X.shape[0]
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise BadK(f"k must be an integer in [1, {n}], got {k}")
    order = np.argsort(_sq_dist(x, X), kind="stable")
    w = np.zeros(n)
    w[order[:k]] = 1.0 / k
    return w


def idw_weights(x, X, power=2.0):
    """Inverse-distance weights ``d_n^{-power}`` normalized; indicator at a node."""
    d = np.sqrt(_sq_dist(x, X))
    hit = np.flatnonzero(d == 0)
    w = np.zeros(X.shape[0])
    if hit.size:
        w[hit[0]] = 1.0
        return w
    inv = d ** (-power)
    return inv / inv.sum()


def _scalar_nodes(X, what):
    if X.shape[1] != 1:
        raise ValueError(f"{what} needs scalar inputs")
    return X[:, 0]


def lagrange_weights(x, X):
    """Lagrange basis polynomials of the nodes evaluated at ``x``."""
    nodes = _scalar_nodes(X, "Lagrange interpolation")
    if np.unique(nodes).size != nodes.size:
        raise DuplicateInputs("Lagrange interpolation needs distinct nodes")
    x = float(np.asarray(x).reshape(-1)[0])
    n = nodes.size
    w = np.ones(n)
    for i in range(n):
        others = np.delete(nodes, i)
        w[i] = np.prod((x - others) / (nodes[i] - others))
    return w


def sinc_weights(x, X, tol=1e-9):
    """Ideal band-limited interpolation weights ``sinc((x - x_n) / T0)`` on the available nodes."""
    nodes = _scalar_nodes(X, "sinc interpolation")
    if nodes.size > 1:
        order = np.sort(nodes)
        steps = np.diff(order)
        spacing = steps.mean()
        if spacing <= 0 or np.max(np.abs(steps - spacing)) > tol * max(1.0, spacing):
            raise NonEquidistantGrid("sinc interpolation needs equally spaced inputs")
    else:
        spacing = 1.0
    x = float(np.asarray(x).reshape(-1)[0])
    return np.sinc((x - nodes) / spacing)


def model_weights(model, x):
    """Weights ``phi(x)`` with ``predict(x).mean == phi(x) @ y`` for a fitted RVM or GP.

    RVM: ``psi^T Sigma Psi^T A^{-1}``; GP and Q-GP: ``psi^T (Psi + s I)^{-1}``.
    """
    x = as_inputs(x, model.dataset.dim)
    if hasattr(model, "_psi_sigma"):
        cross = model._psi_sigma @ model.design_at(x).T
    elif hasattr(model, "cross"):
        cross = model.cross(x)
    else:
        cross = model.design_at(x).T
    return psd_solve(model.factor, cross)[:, 0]


def weights(method, x, X=None, model=None, **params):
    """Weight profile of a linear smoother at one query point.

    Parameters
    ----------
    method : str
        One of :data:`METHODS`.
    x : array_like
        Query point.
    X : array_like, optional
        Training inputs; taken from ``model`` for the ``rvm`` and ``gp`` methods.
    model : RvmModel, GpModel or QgpModel, optional
        Fitted model for the model-based methods.
    **params
        ``lengthscale``/``window`` (nadaraya-watson), ``k`` (knn), ``power``
        (idw).
    """
    if method in ("rvm", "gp"):
        if model is None:
            raise ValueError(f"method {method!r} needs a fitted model")
        w = model_weights(model, x)
        return WeightProfile(np.asarray(x, dtype=float), w)
    X = as_inputs(X)
    q = as_inputs(x, X.shape[1])[0]
    if method == "nadaraya-watson":
        w = nadaraya_watson_weights(q, X, **params)
    elif method == "knn":
        w = knn_weights(q, X, params.get("k", 1))
    elif method == "idw":
        w = idw_weights(q, X, params.get("power", 2.0))
    elif method == "lagrange":
        w = lagrange_weights(q, X)
    elif method == "sinc":
        w = sinc_weights(q, X)
    else:
        raise ValueError(f"unknown smoother {method!r}; choose from {METHODS}")
    return WeightProfile(q, w)


def predict(method, x, X=None, y=None, model=None, **params):
    """``weights(method, x, ...) @ y``."""
    if model is not None and y is None:
        y = model.dataset.y
    w = weights(method, x, X, model=model, **params).weights
    return float(w @ np.asarray(y, dtype=float))


@dataclass(frozen=True)
class FilterSpec:
    """``f_t = sum_l feedback[l-1] f_{t-l} + sum_r feedforward[r] y_{t-r}``."""

    feedforward: tuple
    feedback: tuple = ()

    def __post_init__(self):
        ff = tuple(float(a) for a in self.feedforward)
        fb = tuple(float(b) for b in self.feedback)
        if not ff:
            raise ValueError("feedforward needs at least one coefficient")
        if not all(map(math.isfinite, ff + fb)):
            raise ValueError("filter coefficients must be finite")
        object.__setattr__(self, "feedforward", ff)
        object.__setattr__(self, "feedback", fb)

    @property
    def order(self):
        return len(self.feedforward) - 1


def fir_apply(spec, y):
    """Moving-average filter over full windows only; output length ``N - R``."""
    y = np.asarray(y, dtype=float)
    r = spec.order
    if y.size <= r:
        raise SequenceTooShort(f"need more than {r} samples, got {y.size}")
    return np.convolve(y, np.array(spec.feedforward), mode="valid")


def iir_apply(spec, y, init=None):
    """Recursive filter over the same full-window range as :func:`fir_apply`.

    ``init`` gives the outputs before the first computed one, oldest first
    (``len(feedback)`` values); zeros by default.
    """
    ma = fir_apply(FilterSpec(spec.feedforward), y)
    fb = np.array(spec.feedback)
    lags = fb.size
    if lags == 0:
        return ma
    state = np.zeros(lags) if init is None else np.asarray(init, dtype=float).reshape(-1)
    if state.size != lags:
        raise ValueError(f"init needs {lags} values, got {state.size}")
    out = np.concatenate([state, np.empty(ma.size)])
    for t in range(ma.size):
        past = out[t : t + lags][::-1]      # f_{t-1}, ..., f_{t-L}
        out[lags + t] = fb @ past + ma[t]
    return out[lags:]
