"""Bayesian kernel regression: RVM, quasi-GP and GP regression, linear
smoothers and AR(1) Kalman filtering behind one data model."""

__version__ = "0.1.0"

from . import errors, evidence, gp, kalman, kernels, numerics, qgp, rvm, smoothers  # noqa: E402
from .data import Dataset, GaussianState, Predictive  # noqa: E402
from .kernels import BasisSet, DualKernel, KernelSpec  # noqa: E402

__all__ = [
    "BasisSet", "Dataset", "DualKernel", "GaussianState", "KernelSpec", "Predictive",
    "errors", "evidence", "gp", "kalman", "kernels", "numerics", "qgp", "rvm", "smoothers",
]
