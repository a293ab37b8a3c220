"""Quasi-GP regression: the weight-space model with prior covariance ``Psi^{-1}``.

This is probabilistic kernel ridge regression. It shares its predictive mean
with the GP but its variance vanishes away from the data. Implemented on its
own factors rather than through :mod:`bayeskern.rvm` so the two routes can be
checked against each other.
"""
import numpy as np

from .data import Dataset, GaussianState, Predictive, as_inputs
from .errors import InvalidModel
from .kernels import BasisSet, validate_covariance
from .numerics import clamp_variance, gaussian_logpdf, half_solve, psd_factorize, psd_solve


class QgpModel:
    """Quasi-GP over a homogeneous symmetric positive-definite design.

    ``kernel`` is a :class:`KernelSpec` (or any object with ``matrix``).
    """

    def __init__(self, dataset, kernel, noise_var, jitter=0.0):
        if not isinstance(dataset, Dataset):
            dataset = Dataset(*dataset)
        if isinstance(kernel, BasisSet):
            if not kernel.is_homogeneous:
                raise InvalidModel("Q-GP needs one kernel shared by all bases")
            kernel = kernel.specs[0]
        if not noise_var >= 0:
            raise ValueError(f"noise_var must be >= 0, got {noise_var}")
        self.dataset = dataset
        self.kernel = kernel
        self.noise_var = float(noise_var)
        self.jitter = jitter
        self.design = kernel.matrix(dataset.X)
        report = validate_covariance(self.design, jitter)
        if not report.valid_for_gp:
            raise InvalidModel(
                f"design is not a valid covariance (symmetric={report.symmetric}, "
                f"factorizable={report.factorizable})"
            )
        n = dataset.n
        self.design_factor = psd_factorize(self.design, jitter)
        if self.noise_var == 0:
            self.factor = self.design_factor
        else:
            self.factor = psd_factorize(self.design + self.noise_var * np.eye(n), jitter)
        self._alpha = psd_solve(self.factor, dataset.y)

    def design_at(self, X):
        X = as_inputs(X, self.dataset.dim)
        return self.kernel.matrix(X, self.dataset.X)

    def log_evidence(self):
        return gaussian_logpdf(self.factor, self.dataset.y)


def weight_posterior(model):
    """``rho_hat = (Psi + s I)^{-1} y``, ``cov = Psi^{-1} - (Psi + s I)^{-1}``."""
    n = model.dataset.n
    if model.noise_var == 0:
        return GaussianState(model._alpha.copy(), np.zeros((n, n)))
    eye = np.eye(n)
    cov = psd_solve(model.design_factor, eye) - psd_solve(model.factor, eye)
    return GaussianState(model._alpha.copy(), 0.5 * (cov + cov.T))


def predict(model, X):
    """Mean ``psi^T (Psi + s I)^{-1} y``; variance ``psi^T Psi^{-1} psi - psi^T (Psi + s I)^{-1} psi``."""
    v = model.design_at(X).T                     # N x P
    mean = v.T @ model._alpha
    a = half_solve(model.design_factor, v)
    prior_term = np.sum(a * a, axis=0)
    if model.factor is model.design_factor:
        var = np.zeros_like(prior_term)
    else:
        b = half_solve(model.factor, v)
        var = prior_term - np.sum(b * b, axis=0)
    return Predictive(mean, clamp_variance(var, prior_term))


def smooth(model):
    """``Psi (Psi + s I)^{-1} y`` and ``Psi - Psi (Psi + s I)^{-1} Psi``."""
    psi = model.design
    n = model.dataset.n
    if model.noise_var == 0:
        return GaussianState(model.dataset.y.copy(), np.zeros((n, n)))
    mean = psi @ model._alpha
    cov = psi - psi @ psd_solve(model.factor, psi)
    return GaussianState(mean, 0.5 * (cov + cov.T))
