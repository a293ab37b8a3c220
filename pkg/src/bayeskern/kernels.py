"""Kernel and basis families, design vectors/matrices and the RVM dual kernel.

Kernel objects share a small duck-typed interface used by the regression
modules:

``matrix(X, Z=None)``
    Cross matrix between row inputs ``X`` and ``Z``. With ``Z=None`` the
    inputs are the training set itself and index-identity terms (the
    ``nugget`` of the general exponential family) fire on the diagonal.
``diag(X)``
    ``k(x, x)`` for each row of ``X`` treated as a fresh query point.
``check_inputs(X)``
    Raise :class:`DomainError` for inputs outside the family's domain.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .data import as_inputs
from .errors import DegenerateVariance, DimensionMismatch, DomainError
from .numerics import _try_cholesky, symmetrize

SYMMETRY_TOL = 1e-10

FAMILIES = {
    # amplitude * exp(-r**roughness / lengthscale) + bias + nugget * [same index]
    "squared-exp-general": {
        "amplitude": 1.0, "lengthscale": 1.0, "roughness": 2.0,
        "bias": 0.0, "nugget": 0.0, "p": 2.0,
    },
    "radial-exponential": {"lengthscale": 1.0, "p": 2.0},
    "boxcar": {"radius": 1.0, "p": 2.0},
    "wiener": {},
    "brownian-bridge": {},
    "ornstein-uhlenbeck": {"rate": 1.0, "sigma": 1.0, "mean0": 0.0, "long_run_mean": 0.0},
    "ar1-discrete": {"ar_coef": 0.5, "process_var": 1.0},
}

SCALAR_FAMILIES = {"wiener", "brownian-bridge", "ornstein-uhlenbeck", "ar1-discrete"}

_POSITIVE = {"amplitude", "lengthscale", "roughness", "radius", "rate", "sigma", "process_var"}
_NONNEGATIVE = {"bias", "nugget"}


def ar1_covariance(lag, ar_coef, process_var):
    """Stationary AR(1) autocovariance ``ar_coef**|lag| * process_var / (1 - ar_coef**2)``."""
    lag = np.abs(np.asarray(lag))
    return ar_coef ** lag * process_var / (1.0 - ar_coef ** 2)


def lp_distance(X, Z, p=2.0):
    d = np.abs(X[:, None, :] - Z[None, :, :])
    if math.isinf(p):
        return d.max(axis=-1)
    if p == 2.0:
        return np.sqrt((d * d).sum(axis=-1))
    if p == 1.0:
        return d.sum(axis=-1)
    return (d ** p).sum(axis=-1) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A kernel family name plus its parameters.

    Missing parameters take the family defaults in :data:`FAMILIES`.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {sorted(FAMILIES)}")
        defaults = FAMILIES[self.family]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for {self.family}")
        merged = {k: float(self.params.get(k, v)) for k, v in defaults.items()}
        for k, v in merged.items():
            if math.isnan(v):
                raise ValueError(f"{k} is NaN")
            if k in _POSITIVE and not v > 0:
                raise ValueError(f"{k} must be > 0, got {v}")
            if k in _NONNEGATIVE and v < 0:
                raise ValueError(f"{k} must be >= 0, got {v}")
            if k == "p" and not v >= 1:
                raise ValueError(f"p must be >= 1, got {v}")
        if self.family == "ar1-discrete" and not abs(merged["ar_coef"]) < 1:
            raise ValueError("ar1-discrete needs |ar_coef| < 1")
        object.__setattr__(self, "params", merged)

    def __eq__(self, other):
        return (
            isinstance(other, KernelSpec)
            and self.family == other.family
            and self.params == other.params
        )

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    def with_params(self, **updates):
        return KernelSpec(self.family, {**self.params, **updates})

    def to_dict(self):
        return {"family": self.family, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        family = d.pop("family")
        return cls(family, {k: float(v) for k, v in d.items()})

    @property
    def stationary(self):
        return self.family in ("squared-exp-general", "radial-exponential", "boxcar", "ar1-discrete")

    def check_inputs(self, X):
        X = as_inputs(X)
        if self.family not in SCALAR_FAMILIES:
            return X
        if X.shape[1] != 1:
            raise DomainError(f"{self.family} kernel needs scalar inputs, got dimension {X.shape[1]}")
        if self.family == "ar1-discrete":
            if np.any(X != np.round(X)):
                raise DomainError("ar1-discrete kernel needs integer time indices")
        elif np.any(X < 0):
            raise DomainError(f"{self.family} kernel needs nonnegative inputs")
        if self.family == "brownian-bridge" and np.any(X > 1):
            raise DomainError("brownian-bridge inputs must lie in [0, 1]")
        return X

    def matrix(self, X, Z=None):
        same = Z is None
        X = self.check_inputs(X)
        Z = X if same else self.check_inputs(Z)
        if X.shape[1] != Z.shape[1]:
            raise DimensionMismatch(f"input dimensions differ: {X.shape[1]} vs {Z.shape[1]}")
        q = self.params
        fam = self.family
        if fam == "squared-exp-general":
            r = lp_distance(X, Z, q["p"])
            k = q["amplitude"] * np.exp(-(r ** q["roughness"]) / q["lengthscale"]) + q["bias"]
            if same and q["nugget"]:
                k = k + q["nugget"] * np.eye(X.shape[0])
            return k
        if fam == "radial-exponential":
            return np.exp(-lp_distance(X, Z, q["p"]) / q["lengthscale"])
        if fam == "boxcar":
            return (lp_distance(X, Z, q["p"]) <= q["radius"]).astype(float)
        x, z = X[:, 0][:, None], Z[:, 0][None, :]
        if fam == "wiener":
            return np.minimum(x, z)
        if fam == "brownian-bridge":
            return np.minimum(x, z) - x * z
        if fam == "ornstein-uhlenbeck":
            th, s = q["rate"], q["sigma"]
            return s * s / (2 * th) * np.exp(-th * (x + z)) * np.expm1(2 * th * np.minimum(x, z))
        return ar1_covariance(x - z, q["ar_coef"], q["process_var"])

    def diag(self, X):
        X = self.check_inputs(X)
        fam, q = self.family, self.params
        n = X.shape[0]
        if fam == "squared-exp-general":
            return np.full(n, q["amplitude"] + q["bias"])
        if fam in ("radial-exponential", "boxcar"):
            return np.ones(n)
        if fam == "ar1-discrete":
            return np.full(n, ar1_covariance(0, q["ar_coef"], q["process_var"]))
        return np.array([self.matrix(X[i : i + 1])[0, 0] for i in range(n)]).reshape(n)

    def __call__(self, x, z):
        return eval_kernel(self, x, z)


def _point(x):
    return np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)


def eval_kernel(spec, x, z, same_index=False):
    """Kernel value at one pair of points.

    ``same_index`` marks ``x`` and ``z`` as the same indexed training datum,
    the only case in which the nugget term is added.
    """
    x, z = _point(x), _point(z)
    if same_index:
        return float(spec.matrix(x)[0, 0])
    return float(spec.matrix(x, z)[0, 0])


def mean_function(spec, x):
    """Prior mean of the process; nonzero only for Ornstein-Uhlenbeck."""
    x = np.asarray(x, dtype=float)
    if spec.family != "ornstein-uhlenbeck":
        return np.zeros_like(x) if x.ndim else 0.0
    q = spec.params
    decay = np.exp(-q["rate"] * x)
    out = decay * q["mean0"] + q["long_run_mean"] * (1.0 - decay)
    return float(out) if out.ndim == 0 else out


class BasisSet:
    """Localized basis functions, one ``(center, spec)`` pair per column.

    Column ``n`` of :meth:`evaluate` is ``psi_n(x, center_n)``. Specs may differ
    between columns, which only the RVM accepts.
    """

    def __init__(self, centers, specs):
        self.centers = as_inputs(centers)
        if isinstance(specs, KernelSpec):
            specs = [specs] * self.centers.shape[0]
        self.specs = tuple(specs)
        if len(self.specs) != self.centers.shape[0]:
            raise DimensionMismatch(f"{len(self.specs)} specs for {self.centers.shape[0]} centers")
        for s in set(self.specs):
            s.check_inputs(self.centers)

    @classmethod
    def homogeneous(cls, centers, spec):
        return cls(centers, spec)

    def __len__(self):
        return len(self.specs)

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def is_homogeneous(self):
        return len(set(self.specs)) <= 1

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return BasisSet(self.centers[idx], [self.specs[i] for i in idx])

    def _groups(self):
        groups = {}
        for n, s in enumerate(self.specs):
            groups.setdefault(s, []).append(n)
        return groups

    def evaluate(self, X):
        """Stacked design vectors: row ``p`` is ``psi(X[p])``."""
        X = as_inputs(X, self.dim)
        out = np.empty((X.shape[0], len(self)))
        for spec, cols in self._groups().items():
            out[:, cols] = spec.matrix(X, self.centers[cols])
        return out

    def design_matrix(self):
        """Design matrix at the centers, with index-identity terms on the diagonal."""
        out = self.evaluate(self.centers)
        for spec, cols in self._groups().items():
            nug = spec.params.get("nugget", 0.0)
            if nug:
                out[cols, cols] += nug
        return out


def design_vector(basis, x):
    return basis.evaluate(_point(x) if basis.dim > 1 else np.atleast_1d(x)[:1])[0]


@dataclass(frozen=True)
class DesignMatrix:
    matrix: np.ndarray
    symmetric: bool
    max_asymmetry: float


def design_matrix(basis, inputs=None):
    """Design matrix with row ``i`` equal to ``psi(x_i)``.

    ``inputs`` default to the basis centers, which is the regression setting.
    """
    if inputs is None:
        m = basis.design_matrix()
    else:
        m = basis.evaluate(inputs)
    asym = float(np.max(np.abs(m - m.T))) if m.shape[0] == m.shape[1] else math.inf
    return DesignMatrix(m, asym <= SYMMETRY_TOL, asym)


@dataclass(frozen=True)
class CovarianceReport:
    symmetric: bool
    factorizable: bool
    min_chol_diag: float
    max_asymmetry: float
    failing_pivot: int = 0

    @property
    def valid_for_gp(self):
        return self.symmetric and self.factorizable

    @property
    def valid_for_rvm(self):
        return True


def validate_covariance(m, jitter=0.0):
    """Check whether a design matrix can act as a GP prior covariance."""
    if isinstance(m, DesignMatrix):
        m = m.matrix
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return CovarianceReport(False, False, math.nan, math.inf)
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    symmetric = asym <= SYMMETRY_TOL
    if not symmetric:
        return CovarianceReport(False, False, math.nan, asym)
    s = 0.5 * (m + m.T) + jitter * np.eye(m.shape[0])
    lower, info = _try_cholesky(s)
    if lower is None:
        return CovarianceReport(True, False, math.nan, asym, info)
    return CovarianceReport(True, True, float(np.min(np.diag(lower))), asym)


class DualKernel:
    """Covariance induced on ``f(x) = psi(x)^T rho`` by ``rho ~ N(0, prior_cov)``."""

    def __init__(self, basis, prior_cov):
        prior_cov = np.atleast_2d(np.asarray(prior_cov, dtype=float))
        if prior_cov.shape != (len(basis), len(basis)):
            raise DimensionMismatch(f"prior covariance {prior_cov.shape} for {len(basis)} bases")
        self.basis = basis
        self.prior_cov = symmetrize(prior_cov, "prior covariance")
        self.stationary = False

    def check_inputs(self, X):
        return as_inputs(X, self.basis.dim)

    def matrix(self, X, Z=None):
        vx = self.basis.evaluate(X)
        vz = vx if Z is None else self.basis.evaluate(Z)
        k = vx @ self.prior_cov @ vz.T
        return 0.5 * (k + k.T) if Z is None else k

    def diag(self, X):
        vx = self.basis.evaluate(X)
        return np.einsum("ij,jk,ik->i", vx, self.prior_cov, vx)


def dual_kernel(basis, prior_cov, x, z):
    return float(DualKernel(basis, prior_cov).matrix(_point(x), _point(z))[0, 0])


def dual_kernel_matrix(basis, prior_cov, inputs=None):
    """``Psi Sigma Psi^T`` over ``inputs`` (default: the basis centers)."""
    kern = DualKernel(basis, prior_cov)
    if inputs is None:
        v = basis.design_matrix()
        k = v @ kern.prior_cov @ v.T
        return 0.5 * (k + k.T)
    return kern.matrix(inputs)


def induced_correlation(basis, prior_cov, x, z):
    kern = DualKernel(basis, prior_cov)
    x, z = _point(x), _point(z)
    kxz = kern.matrix(x, z)[0, 0]
    kxx, kzz = kern.diag(x)[0], kern.diag(z)[0]
    if kxx < 1e-300 or kzz < 1e-300:
        raise DegenerateVariance("induced prior variance vanishes at one of the inputs")
    return float(kxz / math.sqrt(kxx * kzz))
