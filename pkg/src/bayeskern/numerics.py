"""Dense positive-(semi)definite linear algebra and Gaussian sampling.

All solves in the package go through :func:`psd_factorize` and
:func:`psd_solve` so that the cross-method equivalence checks share one
numerical path.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import (
    DimensionMismatch,
    NegativeVariance,
    NonFiniteObjective,
    NotPositiveDefinite,
    SingularMatrix,
)

log = logging.getLogger(__name__)

ASYMMETRY_WARN = 1e-10


@dataclass(frozen=True)
class CholFactor:
    """Lower Cholesky factor of ``m + jitter * I``."""

    lower: np.ndarray
    jitter: float = 0.0

    @property
    def order(self):
        return self.lower.shape[0]

    def reconstruct(self):
        return self.lower @ self.lower.T


def symmetrize(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > ASYMMETRY_WARN * (1.0 + np.max(np.abs(m), initial=0.0)):
        log.warning("%s asymmetric by %.3g; symmetrizing", name, asym)
    return 0.5 * (m + m.T)


def _try_cholesky(m):
    n = m.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0
    c, info = lapack.dpotrf(m, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        return None, info
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    # Exactly singular inputs can pass dpotrf with a round-off pivot.
    d = np.diag(c)
    tol = n * np.finfo(float).eps * max(np.max(np.abs(np.diag(m))), np.finfo(float).tiny)
    bad = np.flatnonzero(d * d <= tol)
    if bad.size:
        return None, int(bad[0]) + 1
    return c, 0


def psd_factorize(m, jitter=0.0):
    """Cholesky-factorize a symmetric matrix.

    Tries ``m`` as given first; if that fails and ``jitter > 0`` it retries once
    with ``m + jitter * I``. There is no automatic escalation beyond that.

    Raises
    ------
    NotPositiveDefinite
        With the 1-based index of the failing pivot.
    """
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    m = symmetrize(m)
    lower, info = _try_cholesky(m)
    if lower is not None:
        return CholFactor(lower, 0.0)
    if jitter > 0:
        lower, info = _try_cholesky(m + jitter * np.eye(m.shape[0]))
        if lower is not None:
            return CholFactor(lower, float(jitter))
    raise NotPositiveDefinite(
        f"matrix of order {m.shape[0]} is not positive definite "
        f"(pivot {info}, jitter {jitter:g})",
        pivot=info,
    )


def psd_solve(f, b):
    """Solve ``(L L^T) X = b``; ``b`` may be a vector or a matrix."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.order:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor has order {f.order}")
    z = solve_triangular(f.lower, b, lower=True, check_finite=False)
    return solve_triangular(f.lower.T, z, lower=False, check_finite=False)


def half_solve(f, b):
    """``L^{-1} b``; the squared column norms give quadratic forms ``b^T M^{-1} b``."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.order:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor has order {f.order}")
    return solve_triangular(f.lower, b, lower=True, check_finite=False)


def psd_inverse(f):
    return psd_solve(f, np.eye(f.order))


def psd_logdet(f):
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def make_rng(seed):
    """Seeded PCG64 generator; the same seed reproduces the same draws bit for bit."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def sampling_factor(cov, max_jitter=1e-8):
    """Square root ``S`` with ``S S^T = cov`` for sampling.

    Cholesky is tried first. Semidefinite matrices (zero or round-off negative
    eigenvalues) fall back to a clipped eigen-decomposition, accepted only if
    the most negative eigenvalue is above ``-max_jitter * (1 + max|diag|)``.
    Returns ``(S, clipped)`` where ``clipped`` is the magnitude of the most
    negative eigenvalue that was discarded (0 for the Cholesky path).
    """
    cov = symmetrize(cov, "covariance")
    if cov.shape[0] == 0:
        return np.zeros((0, 0)), 0.0
    lower, _ = _try_cholesky(cov)
    if lower is not None:
        return lower, 0.0
    w, v = np.linalg.eigh(cov)
    scale = 1.0 + np.max(np.abs(np.diag(cov)))
    if w[0] < -max_jitter * scale:
        raise NotPositiveDefinite(
            f"covariance has eigenvalue {w[0]:.3g} below tolerance {-max_jitter * scale:.3g}"
        )
    clipped = float(max(0.0, -w[0]))
    if clipped > 0:
        log.info("sampling: clipped negative eigenvalue %.3g", clipped)
    return v * np.sqrt(np.clip(w, 0.0, None)), clipped


def mvn_sample(mean, cov, rng, count, max_jitter=1e-8):
    """Draw ``count`` vectors from ``N(mean, cov)``; returns shape ``(count, P)``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (mean.size, mean.size):
        raise DimensionMismatch(f"mean has size {mean.size}, cov has shape {cov.shape}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.zeros((0, mean.size))
    s, _ = sampling_factor(cov, max_jitter)
    z = rng.standard_normal((count, s.shape[1]))
    return mean + z @ s.T


def woodbury_inverse(z, u, l, v):
    """``(Z + U L V^T)^{-1}`` evaluated through the matrix inversion lemma.

    ``Z`` is n x n, ``U`` and ``V`` are n x k, ``L`` is k x k.
    """
    z, u, l, v = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (z, u, l, v))
    n, k = u.shape
    if z.shape != (n, n) or l.shape != (k, k) or v.shape != (n, k):
        raise DimensionMismatch(
            f"shapes Z{z.shape} U{u.shape} L{l.shape} V{v.shape} do not conform"
        )
    try:
        zinv_u = np.linalg.solve(z, u)
        zinv = np.linalg.solve(z, np.eye(n))
        inner = np.linalg.inv(l) + v.T @ zinv_u
        correction = zinv_u @ np.linalg.solve(inner, v.T @ zinv)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"matrix inversion lemma: {exc}") from exc
    return zinv - correction


def finite_diff_grad(fn, x, h=1e-5):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        hi, lo = fn(x + e), fn(x - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteObjective(f"objective not finite near coordinate {i}")
        g.flat[i] = (hi - lo) / (2.0 * h)
    return g


def clamp_variance(var, scale=1.0, tol=1e-10):
    """Clip round-off negative variances to zero.

    Values in ``[-tol * (1 + scale), 0)`` are set to 0 with a warning; anything
    more negative raises :class:`NegativeVariance`.
    """
    var = np.asarray(var, dtype=float)
    limit = -tol * (1.0 + np.abs(np.asarray(scale, dtype=float)))
    if np.any(var < limit):
        raise NegativeVariance(f"variance {np.min(var):.3g} is negative beyond round-off")
    neg = var < 0
    if np.any(neg):
        log.warning("clamping %d round-off negative variances (min %.3g)", int(neg.sum()), var.min())
        var = np.where(neg, 0.0, var)
    return var


LOG_2PI = float(np.log(2.0 * np.pi))


def gaussian_nll_terms(f, y):
    """``(0.5 y^T M^{-1} y, 0.5 log det M, N/2 log 2 pi)`` for ``M = L L^T``.

    This is the single code path behind every marginal likelihood in the
    package, so models sharing ``M`` share the value bit for bit.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    z = half_solve(f, y)
    return 0.5 * float(z @ z), 0.5 * psd_logdet(f), 0.5 * y.size * LOG_2PI


def gaussian_logpdf(f, y):
    fit, complexity, const = gaussian_nll_terms(f, y)
    return -(fit + complexity + const)
