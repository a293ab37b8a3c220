"""Marginal likelihoods, type-II maximum likelihood and hyperparameter MCMC.

Hyperparameters are handled by :class:`HyperModel`, which maps a named
parameter vector (kernel parameters plus ``noise_var`` and, for the RVM,
``prior_var``) to a fitted model. Free parameters are always positive and
are searched or sampled in log space.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from . import gp, qgp, rvm
from .data import Dataset
from .errors import (
    NonFiniteTarget,
    NotPositiveDefinite,
    OptimizerDivergence,
)
from .kernels import BasisSet, KernelSpec
from .numerics import gaussian_logpdf, gaussian_nll_terms, make_rng

log = logging.getLogger(__name__)

KINDS = ("gp", "qgp", "rvm")
_PREDICT = {"gp": gp.predict, "qgp": qgp.predict, "rvm": rvm.predict}


def log_marginal(model):
    """``log N(y | 0, C_yy)`` for a fitted GP, Q-GP or RVM model.

    ``C_yy`` is ``Psi + s I`` for GP and Q-GP and ``Psi Sigma Psi^T + s I`` for
    the RVM; the value is read off the model's stored Cholesky factor.
    """
    return gaussian_logpdf(model.factor, model.dataset.y)


@dataclass(frozen=True)
class NllTerms:
    fit: float
    complexity: float
    constant: float

    @property
    def total(self):
        return self.fit + self.complexity + self.constant


def nll_decomposition(model):
    """Split ``-log p(y)`` into data fit, complexity penalty and constant."""
    return NllTerms(*gaussian_nll_terms(model.factor, model.dataset.y))


class HyperModel:
    """Family of models indexed by hyperparameters.

    Parameters
    ----------
    kind : {"gp", "qgp", "rvm"}
    dataset : Dataset
    kernel : KernelSpec
        Provides the family and the values of parameters that stay fixed.
    free : sequence of str
        Names of the parameters being learned, drawn from the kernel
        parameters, ``noise_var`` and (RVM only) ``prior_var``.
    noise_var, prior_var : float
        Values used when these are not free. The RVM weight prior is
        ``prior_var * I``.
    """

    def __init__(self, kind, dataset, kernel, free, noise_var=1.0, prior_var=1.0, jitter=0.0):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not isinstance(dataset, Dataset):
            dataset = Dataset(*dataset)
        self.kind = kind
        self.dataset = dataset
        self.kernel = kernel
        self.fixed = {**kernel.params, "noise_var": float(noise_var)}
        if kind == "rvm":
            self.fixed["prior_var"] = float(prior_var)
        self.free = tuple(free)
        unknown = set(self.free) - set(self.fixed)
        if unknown:
            raise ValueError(f"unknown hyperparameters {sorted(unknown)}")
        self.jitter = jitter

    @property
    def theta0(self):
        return np.array([self.fixed[k] for k in self.free])

    def as_dict(self, theta):
        return {**self.fixed, **dict(zip(self.free, map(float, theta)))}

    def build(self, theta):
        full = self.as_dict(theta)
        noise = full.pop("noise_var")
        prior_var = full.pop("prior_var", None)
        spec = KernelSpec(self.kernel.family, full)
        if self.kind == "gp":
            return gp.GpModel(self.dataset, spec, noise, self.jitter)
        if self.kind == "qgp":
            return qgp.QgpModel(self.dataset, spec, noise, self.jitter)
        basis = BasisSet(self.dataset.X, spec)
        return rvm.RvmModel(self.dataset, basis, prior_var * np.eye(len(basis)), noise,
                            jitter=self.jitter)

    def log_marginal(self, theta):
        return log_marginal(self.build(theta))

    def nll(self, theta):
        """``-log p(y | theta)``; ``inf`` where the model cannot be built."""
        theta = np.asarray(theta, dtype=float)
        if np.any(~np.isfinite(theta)) or np.any(theta <= 0):
            return math.inf
        try:
            val = -self.log_marginal(theta)
        except (NotPositiveDefinite, ValueError):
            return math.inf
        return val if math.isfinite(val) else math.inf

    def predict(self, theta, X):
        return _PREDICT[self.kind](self.build(theta), X)


@dataclass
class OptimizationResult:
    theta: np.ndarray
    nll: float
    trace: list          # (evaluation count, theta, nll), running best
    names: tuple = ()


def optimize_type2(hyper, theta0=None, bounds=None, max_iter=200, restarts=2, seed=0,
                   simplex_step=1.0):
    """Type-II maximum likelihood by Nelder-Mead in log space.

    The first run starts from ``theta0``. Each of the ``restarts`` rounds then
    reruns once from the best point so far and once from ``theta0`` perturbed
    by a unit log-normal factor. Every run starts from a simplex with edges of
    ``simplex_step`` in log units. ``bounds`` maps parameter names to
    ``(low, high)`` in natural units.

    Returns
    -------
    OptimizationResult
        The trace holds the running best, so its objective is non-increasing.
    """
    theta0 = hyper.theta0 if theta0 is None else np.asarray(theta0, dtype=float)
    names = hyper.free
    if bounds is None:
        bounds = {}
    log_bounds = []
    for k, t in zip(names, theta0):
        lo, hi = bounds.get(k, (1e-6, 1e6))
        if not lo <= t <= hi:
            raise ValueError(f"theta0[{k}]={t} outside bounds ({lo}, {hi})")
        log_bounds.append((math.log(lo), math.log(hi)))
    nll0 = hyper.nll(theta0)
    if not math.isfinite(nll0):
        raise OptimizerDivergence("objective is not finite at the starting hyperparameters")
    best = [np.log(theta0), nll0]
    trace = [(0, theta0.copy(), nll0)]
    if max_iter <= 0 or not names:
        return OptimizationResult(theta0.copy(), nll0, trace, names)
    count = [0]

    def objective(u):
        val = hyper.nll(np.exp(u))
        count[0] += 1
        if val < best[1]:
            best[0], best[1] = np.array(u, dtype=float), val
            trace.append((count[0], np.exp(u), val))
        return val if math.isfinite(val) else 1e300

    lo = np.array([b[0] for b in log_bounds])
    hi = np.array([b[1] for b in log_bounds])

    def run(u0):
        # scipy's default simplex is a few percent of |u|, far too small in log space
        u0 = np.clip(u0, lo, hi)
        simplex = np.vstack([u0] + [u0 + simplex_step * e for e in np.eye(u0.size)])
        simplex = np.where(simplex > hi, 2 * u0 - simplex, simplex)
        minimize(objective, u0, method="Nelder-Mead", bounds=log_bounds,
                 options={"maxiter": max_iter, "xatol": 1e-6, "fatol": 1e-9,
                          "initial_simplex": np.clip(simplex, lo, hi)})

    rng = make_rng(seed)
    run(np.log(theta0))
    for _ in range(restarts):
        # one restart around the incumbent, one from a perturbed start
        run(best[0])
        run(np.log(theta0) + rng.standard_normal(len(names)))
    return OptimizationResult(np.exp(best[0]), best[1], trace, names)


class LogNormalPrior:
    """Independent log-normal prior with the given medians and log-scale sd."""

    def __init__(self, median, log_sd=1.0):
        self.log_median = np.log(np.asarray(median, dtype=float))
        self.log_sd = log_sd

    def logpdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0):
            return -math.inf
        u = np.log(theta)
        z = (u - self.log_median) / self.log_sd
        return float(np.sum(-0.5 * z * z - u - math.log(self.log_sd) - 0.5 * math.log(2 * math.pi)))

    def sample(self, rng, count):
        return np.exp(self.log_median + self.log_sd * rng.standard_normal((count, self.log_median.size)))


class FlatPrior:
    """Improper prior constant in ``theta``."""

    def logpdf(self, theta):
        return 0.0 if np.all(np.asarray(theta) > 0) else -math.inf


@dataclass
class HyperPosterior:
    draws: np.ndarray            # (S, D)
    log_weights: np.ndarray      # (S,)
    acceptance_rate: float
    names: tuple = ()
    chain: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def log_target(hyper, prior, u):
    """Log posterior density of ``u = log theta`` (including the log Jacobian)."""
    theta = np.exp(u)
    lp = prior.logpdf(theta)
    if not math.isfinite(lp):
        return -math.inf
    nll = hyper.nll(theta)
    if not math.isfinite(nll):
        return -math.inf
    return -nll + lp + float(np.sum(u))


def _metropolis(hyper, prior, u, rng, steps, scale):
    d = u.size
    current = log_target(hyper, prior, u)
    states = np.empty((steps, d))
    proposals = np.empty((steps, d))
    t_cur = np.empty(steps)
    t_prop = np.empty(steps)
    acc_prob = np.empty(steps)
    accepted = np.zeros(steps, dtype=bool)
    for i in range(steps):
        prop = u + scale * rng.standard_normal(d)
        tp = log_target(hyper, prior, prop)
        a = 1.0 if tp >= current else (math.exp(tp - current) if math.isfinite(tp) else 0.0)
        proposals[i], t_cur[i], t_prop[i], acc_prob[i] = prop, current, tp, a
        if rng.random() < a:
            u, current = prop, tp
            accepted[i] = True
        states[i] = u
    chain = {"states": states, "proposals": proposals, "log_target_current": t_cur,
             "log_target_proposal": t_prop, "accept_prob": acc_prob, "accepted": accepted}
    return u, chain


def sample_hyperposterior(hyper, prior=None, rng=None, chain_len=5000, proposal_scale=None,
                          burn_in=1000, thin=4, tune=None, tune_steps=500):
    """Random-walk Metropolis over ``log theta``.

    With ``proposal_scale=None`` the scale starts at 0.5 and is tuned once on
    a pilot run so that the acceptance rate lands in [0.2, 0.5]; pass
    ``tune=False`` to skip that step. ``prior`` defaults to a log-normal with
    median at the model's current values and log-sd 1.
    """
    if chain_len < 1:
        raise ValueError("chain_len must be >= 1")
    if rng is None:
        rng = make_rng(0)
    theta0 = hyper.theta0
    if prior is None:
        prior = LogNormalPrior(theta0, 1.0)
    if tune is None:
        tune = proposal_scale is None
    scale = 0.5 if proposal_scale is None else float(proposal_scale)
    u = np.log(theta0)
    if not math.isfinite(log_target(hyper, prior, u)):
        raise NonFiniteTarget("log posterior is not finite at the initial hyperparameters")
    if tune:
        for _ in range(5):
            _, pilot = _metropolis(hyper, prior, u, rng, tune_steps, scale)
            rate = float(pilot["accepted"].mean())
            if 0.2 <= rate <= 0.5:
                break
            scale *= math.exp(2.0 * (rate - 0.35))
            if rate == 0.0:
                scale *= 0.1
    _, chain = _metropolis(hyper, prior, u, rng, chain_len, scale)
    states = chain["states"]
    draws = states[burn_in::thin] if burn_in < chain_len else states[-1:]
    meta = {"chain_len": chain_len, "burn_in": burn_in, "thin": thin,
            "proposal_scale": scale, "tuned": bool(tune)}
    return HyperPosterior(np.exp(draws), np.zeros(len(draws)), float(chain["accepted"].mean()),
                          hyper.free, chain, meta)


@dataclass(frozen=True)
class MixturePredictive:
    means: np.ndarray        # (S, P)
    variances: np.ndarray    # (S, P)
    weights: np.ndarray      # (S,)
    mean: np.ndarray
    within: np.ndarray
    between: np.ndarray

    @property
    def total(self):
        return self.within + self.between


def mixture_predictive(hyper, posterior, points):
    """Average the predictive laws of the models at the posterior draws.

    ``hyper`` is a :class:`HyperModel` or any callable ``theta -> (mean, var)``
    over ``points``. Draws are weighted by ``exp(log_weights)``, normalized.
    """
    if isinstance(hyper, HyperModel):
        def predict_at(theta):
            return hyper.predict(theta, points)
    else:
        predict_at = hyper
    means, variances = zip(*(tuple(predict_at(t)) for t in posterior.draws))
    means, variances = np.array(means), np.array(variances)
    lw = np.asarray(posterior.log_weights, dtype=float)
    w = np.exp(lw - logsumexp(lw))
    fbar = w @ means
    within = w @ variances
    between = w @ (means - fbar) ** 2
    return MixturePredictive(means, variances, w, fbar, within, between)


def model_evidence(hyper, prior, rng, count=1000):
    """Simple Monte Carlo estimate of ``log p(y)`` averaging over prior draws.

    A rough estimate: its variance grows quickly when the prior is diffuse
    relative to the likelihood.
    """
    draws = prior.sample(rng, count)
    vals = np.array([-hyper.nll(t) for t in draws])
    return float(logsumexp(vals) - math.log(count))
