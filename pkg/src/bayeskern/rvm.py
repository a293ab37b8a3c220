"""Bayesian linear-in-the-weights regression (relevance vector machine).

The latent function is ``f(x) = psi(x)^T rho`` with a Gaussian weight prior
``rho ~ N(0, prior_cov)`` and i.i.d. Gaussian noise of variance ``noise_var``.
All solves go through a Cholesky factor of ``Psi prior_cov Psi^T + noise_var I``,
which stays valid when ``noise_var = 0`` as long as the design is invertible.
"""
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .data import Dataset, GaussianState, Predictive, as_inputs
from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    OptimizerDivergence,
    SingularDesign,
)
from .kernels import DualKernel
from .numerics import (
    clamp_variance,
    gaussian_logpdf,
    half_solve,
    mvn_sample,
    psd_factorize,
    psd_solve,
    symmetrize,
)

log = logging.getLogger(__name__)

DEFAULT_PRUNE = 1e6
LOG_ALPHA_BOUNDS = (math.log(1e-8), math.log(1e12))


class RvmModel:
    """Weight-space Gaussian model ``y = Psi rho + e``.

    Parameters
    ----------
    dataset : Dataset
    basis : BasisSet
        One basis function per column of the design. Usually centred on the
        training inputs; after pruning it holds the surviving subset.
    prior_cov : array_like
        Weight prior covariance (M x M).
    noise_var : float
        Observation noise variance, ``>= 0``.
    design : array_like, optional
        Precomputed N x M design. Defaults to the basis evaluated at the
        training inputs (with index-identity terms when the centers are the
        training inputs).
    jitter : float
        Passed to :func:`psd_factorize` as a one-time fallback.
    """

    def __init__(self, dataset, basis, prior_cov, noise_var, design=None, jitter=0.0):
        if not isinstance(dataset, Dataset):
            dataset = Dataset(*dataset)
        self.dataset = dataset
        self.basis = basis
        m = len(basis)
        prior_cov = np.asarray(prior_cov, dtype=float)
        if prior_cov.ndim < 2:
            prior_cov = np.diag(np.broadcast_to(prior_cov, (m,)).astype(float))
        if prior_cov.shape != (m, m):
            raise DimensionMismatch(f"prior covariance {prior_cov.shape} for {m} bases")
        self.prior_cov = symmetrize(prior_cov, "prior covariance") if m else prior_cov
        if not noise_var >= 0 or not math.isfinite(noise_var):
            raise ValueError(f"noise_var must be finite and >= 0, got {noise_var}")
        self.noise_var = float(noise_var)
        if design is None:
            if m == dataset.n and np.array_equal(basis.centers, dataset.X):
                design = basis.design_matrix()
            else:
                design = basis.evaluate(dataset.X)
        design = np.asarray(design, dtype=float)
        if design.shape != (dataset.n, m):
            raise DimensionMismatch(f"design {design.shape}, expected {(dataset.n, m)}")
        self.design = design
        self.jitter = jitter
        # Psi Sigma, reused by every posterior quantity
        self._psi_sigma = design @ self.prior_cov
        k = self._psi_sigma @ design.T
        self.prior_gram = 0.5 * (k + k.T)
        try:
            self.factor = psd_factorize(
                self.prior_gram + self.noise_var * np.eye(dataset.n), jitter
            )
        except NotPositiveDefinite as exc:
            if self.noise_var == 0:
                raise SingularDesign(
                    "noise-free RVM needs an invertible design and prior"
                ) from exc
            raise
        self._alpha = psd_solve(self.factor, dataset.y)

    @property
    def n_bases(self):
        return len(self.basis)

    def design_at(self, X):
        return self.basis.evaluate(as_inputs(X, self.basis.dim))

    def dual_kernel(self):
        return DualKernel(self.basis, self.prior_cov)

    def log_evidence(self):
        return gaussian_logpdf(self.factor, self.dataset.y)


def weight_posterior(model, check_forms=False):
    """Posterior ``N(rho_hat, cov)`` of the weights.

    Uses ``rho_hat = Sigma Psi^T A^{-1} y`` and
    ``cov = Sigma - Sigma Psi^T A^{-1} Psi Sigma`` with
    ``A = Psi Sigma Psi^T + noise_var I``. With ``check_forms`` the two
    information-form expressions are evaluated too and must agree to 1e-8.
    """
    ps = model._psi_sigma
    mean = ps.T @ model._alpha
    cov = model.prior_cov - ps.T @ psd_solve(model.factor, ps)
    cov = 0.5 * (cov + cov.T)
    if check_forms:
        for other_mean, other_cov in information_forms(model):
            scale = 1.0 + np.max(np.abs(mean), initial=0.0)
            if np.max(np.abs(other_mean - mean), initial=0.0) > 1e-8 * scale:
                raise AssertionError("weight posterior mean forms disagree")
            scale = 1.0 + np.max(np.abs(cov), initial=0.0)
            if np.max(np.abs(other_cov - cov), initial=0.0) > 1e-8 * scale:
                raise AssertionError("weight posterior covariance forms disagree")
    return GaussianState(mean, cov)


def information_forms(model):
    """The two precision-based expressions of the weight posterior.

    Returns ``[(mean, cov), (mean, cov)]`` computed from
    ``(Psi^T Psi / s + Sigma^{-1})^{-1}`` and from
    ``(Psi^T Psi + s Sigma^{-1})^{-1}``. Both need ``noise_var > 0`` and an
    invertible prior covariance.
    """
    s = model.noise_var
    if s <= 0:
        raise ValueError("information forms need noise_var > 0")
    psi, y = model.design, model.dataset.y
    prior_prec = psd_solve(psd_factorize(model.prior_cov), np.eye(model.n_bases))
    gram = psi.T @ psi
    f0 = psd_factorize(gram / s + prior_prec)
    cov0 = psd_solve(f0, np.eye(model.n_bases))
    mean0 = psd_solve(f0, psi.T @ y) / s
    f1 = psd_factorize(gram + s * prior_prec)
    mean1 = psd_solve(f1, psi.T @ y)
    cov1 = s * psd_solve(f1, np.eye(model.n_bases))
    return [(mean0, cov0), (mean1, cov1)]


def predict(model, X):
    """Predictive mean ``psi(x)^T rho_hat`` and variance of ``f(x)``.

    The variance is ``psi^T Sigma psi - psi^T Sigma Psi^T A^{-1} Psi Sigma psi``.
    """
    v = model.design_at(X)
    cross = model._psi_sigma @ v.T          # N x P
    mean = cross.T @ model._alpha
    prior_var = np.einsum("pi,ij,pj->p", v, model.prior_cov, v)
    w = half_solve(model.factor, cross)
    var = prior_var - np.sum(w * w, axis=0)
    return Predictive(mean, clamp_variance(var, prior_var))


def smooth(model):
    """Posterior of ``f = Psi rho`` at the training inputs."""
    k = model.prior_gram
    if model.noise_var == 0:
        # exact interpolation: K (K)^{-1} y = y
        n = model.dataset.n
        return GaussianState(model.dataset.y.copy(), np.zeros((n, n)))
    mean = k @ model._alpha
    cov = k - k @ psd_solve(model.factor, k)
    return GaussianState(mean, 0.5 * (cov + cov.T))


def induced_prior(model, points):
    """Zero-mean Gaussian prior on ``f`` at ``points`` implied by the weight prior."""
    v = model.design_at(points)
    c = v @ model.prior_cov @ v.T
    return GaussianState(np.zeros(v.shape[0]), 0.5 * (c + c.T))


def _posterior_function(model, points):
    v = model.design_at(points)
    w = weight_posterior(model)
    c = v @ w.cov @ v.T
    return v, w, GaussianState(v @ w.mean, 0.5 * (c + c.T))


def sample_prior(model, points, rng, count, path="weights"):
    """Draw ``count`` prior functions at ``points``; returns ``(count, P)``.

    ``path="weights"`` draws ``rho`` and forms ``V rho``; ``path="function"``
    samples the induced Gaussian over the points directly.
    """
    if path == "weights":
        v = model.design_at(points)
        rho = mvn_sample(np.zeros(model.n_bases), model.prior_cov, rng, count)
        return rho @ v.T
    if path == "function":
        g = induced_prior(model, points)
        return mvn_sample(g.mean, g.cov, rng, count)
    raise ValueError(f"unknown sampling path {path!r}")


def sample_posterior(model, points, rng, count, path="weights"):
    """Draw ``count`` posterior functions at ``points``; returns ``(count, P)``."""
    v, w, g = _posterior_function(model, points)
    if path == "weights":
        rho = mvn_sample(w.mean, w.cov, rng, count)
        return rho @ v.T
    if path == "function":
        return mvn_sample(g.mean, g.cov, rng, count)
    raise ValueError(f"unknown sampling path {path!r}")


def relevance_evidence(design, alpha, noise_var, y, jitter=0.0):
    """Log evidence of ``y`` under ``rho ~ N(0, diag(1/alpha))``."""
    c = (design / alpha) @ design.T + noise_var * np.eye(design.shape[0])
    return gaussian_logpdf(psd_factorize(c, jitter), y)


def learn_relevance(model, max_iter=50, prune_threshold=DEFAULT_PRUNE, tol=1e-8):
    """Learn per-weight precisions by coordinate-wise evidence maximization.

    Each sweep runs a bounded scalar search over ``log alpha_i`` for every
    weight in turn and accepts the result only if the evidence improves.
    Sweeps stop once the relative change of the objective falls below
    ``tol`` or after ``max_iter`` sweeps. Bases with ``alpha > prune_threshold``
    are dropped and the model is refitted on the survivors. The noise
    variance is held fixed.

    Returns
    -------
    alpha : ndarray
        Learned precisions for all original bases.
    kept : ndarray
        Indices of the surviving bases.
    refit : RvmModel
    history : list of float
        Evidence after each sweep (non-decreasing).
    """
    cov = model.prior_cov
    if np.any(cov - np.diag(np.diag(cov))):
        raise ValueError("relevance learning needs a diagonal prior covariance")
    y, design, s = model.dataset.y, model.design, model.noise_var
    prior_var = np.diag(cov).copy()
    alpha = np.where(prior_var > 0, 1.0 / np.maximum(prior_var, 1e-300), math.exp(LOG_ALPHA_BOUNDS[1]))
    alpha = np.clip(alpha, *np.exp(LOG_ALPHA_BOUNDS))

    def objective(a):
        try:
            val = relevance_evidence(design, a, s, y, model.jitter)
        except NotPositiveDefinite:
            return -math.inf
        return val

    best = objective(alpha)
    if not math.isfinite(best):
        raise OptimizerDivergence("relevance objective is not finite at the initial precisions")
    history = [best]
    for _ in range(max_iter):
        start = best
        for i in range(alpha.size):
            trial = alpha.copy()

            def neg(log_a):
                trial[i] = math.exp(log_a)
                val = objective(trial)
                return -val if math.isfinite(val) else math.inf

            res = minimize_scalar(neg, bounds=LOG_ALPHA_BOUNDS, method="bounded",
                                  options={"xatol": 1e-6})
            if math.isfinite(res.fun) and -res.fun > best:
                alpha[i] = math.exp(res.x)
                best = -res.fun
        history.append(best)
        if abs(best - start) <= tol * (1.0 + abs(start)):
            break
    kept = np.flatnonzero(alpha <= prune_threshold)
    refit = RvmModel(
        model.dataset,
        model.basis.subset(kept),
        np.diag(1.0 / alpha[kept]),
        s,
        design=design[:, kept],
        jitter=model.jitter,
    )
    return alpha, kept, refit, history
