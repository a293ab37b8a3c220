"""Gaussian-process regression with a zero prior mean."""
import numpy as np

from .data import Dataset, GaussianState, Predictive, as_inputs
from .errors import InvalidModel
from .kernels import BasisSet, validate_covariance
from .numerics import (
    clamp_variance,
    gaussian_logpdf,
    half_solve,
    psd_factorize,
    psd_solve,
    sampling_factor,
)


PSD_TOL = 1e-8


class GpModel:
    """GP posterior given a dataset, a covariance function and noise variance.

    Parameters
    ----------
    kernel : KernelSpec or DualKernel
        Anything exposing ``matrix(X, Z=None)`` and ``diag(X)``.
    noise_var : float
        ``>= 0``. With 0 the posterior interpolates the data.
    jitter : float
        One-time fallback for the factorization of ``Psi + noise_var I``.
    """

    def __init__(self, dataset, kernel, noise_var, jitter=0.0):
        if not isinstance(dataset, Dataset):
            dataset = Dataset(*dataset)
        if isinstance(kernel, BasisSet):
            if not kernel.is_homogeneous:
                raise InvalidModel("GP needs one kernel shared by all inputs")
            kernel = kernel.specs[0]
        if not noise_var >= 0:
            raise ValueError(f"noise_var must be >= 0, got {noise_var}")
        self.dataset = dataset
        self.kernel = kernel
        self.noise_var = float(noise_var)
        self.jitter = jitter
        self.design = kernel.matrix(dataset.X)
        report = validate_covariance(self.design, jitter)
        if not report.symmetric:
            raise InvalidModel(f"kernel matrix is asymmetric by {report.max_asymmetry:.3g}")
        if not report.factorizable:
            # Smooth kernels on close inputs give singular but valid matrices;
            # only reject genuinely indefinite ones.
            low = np.linalg.eigvalsh(self.design)[0]
            if low < -PSD_TOL * (1.0 + np.max(np.abs(np.diag(self.design)))):
                raise InvalidModel(f"kernel matrix is indefinite (eigenvalue {low:.3g})")
        self.factor = psd_factorize(self.design + self.noise_var * np.eye(dataset.n), jitter)
        self._alpha = psd_solve(self.factor, dataset.y)

    def cross(self, X):
        """N x P matrix ``V`` of kernel values between training and query inputs."""
        X = as_inputs(X, self.dataset.dim)
        return self.kernel.matrix(self.dataset.X, X)

    def log_evidence(self):
        return gaussian_logpdf(self.factor, self.dataset.y)


def predict(model, X):
    """Mean ``psi^T (Psi + s I)^{-1} y`` and variance ``k(x,x) - psi^T (Psi + s I)^{-1} psi``."""
    X = as_inputs(X, model.dataset.dim)
    v = model.cross(X)
    prior = model.kernel.diag(X)
    w = half_solve(model.factor, v)
    var = prior - np.sum(w * w, axis=0)
    return Predictive(v.T @ model._alpha, clamp_variance(var, prior))


def predict_joint(model, points):
    """Joint posterior of ``f`` over ``points``: ``V^T A^{-1} y`` and ``C - V^T A^{-1} V``."""
    X = as_inputs(points, model.dataset.dim)
    v = model.cross(X)
    w = half_solve(model.factor, v)
    cov = model.kernel.matrix(X, X) - w.T @ w
    return GaussianState(v.T @ model._alpha, 0.5 * (cov + cov.T))


def smooth(model):
    """``Psi (Psi + s I)^{-1} y`` and ``Psi - Psi (Psi + s I)^{-1} Psi``."""
    psi = model.design
    n = model.dataset.n
    if model.noise_var == 0:
        return GaussianState(model.dataset.y.copy(), np.zeros((n, n)))
    mean = psi @ model._alpha
    cov = psi - psi @ psd_solve(model.factor, psi)
    return GaussianState(mean, 0.5 * (cov + cov.T))


def _draw(mean, cov, rng, count, max_jitter, info):
    s, clipped = sampling_factor(cov, max_jitter)
    if info is not None:
        info["clipped_eigenvalue"] = clipped
    if count < 0:
        raise ValueError("count must be nonnegative")
    z = rng.standard_normal((count, s.shape[1]))
    return mean + z @ s.T


def sample_prior(model, points, rng, count, max_jitter=1e-8, info=None):
    """``count`` draws from ``N(0, C)`` at ``points``; shape ``(count, P)``.

    If ``info`` is a dict it receives the magnitude of any negative eigenvalue
    clipped to make ``C`` samplable.
    """
    X = as_inputs(points, model.dataset.dim)
    return _draw(np.zeros(X.shape[0]), model.kernel.matrix(X, X), rng, count, max_jitter, info)


def sample_posterior(model, points, rng, count, max_jitter=1e-8, info=None):
    """``count`` draws from :func:`predict_joint`'s Gaussian; shape ``(count, P)``."""
    g = predict_joint(model, points)
    return _draw(g.mean, g.cov, rng, count, max_jitter, info)
