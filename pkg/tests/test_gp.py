import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayeskern import BasisSet, Dataset, DualKernel, KernelSpec, gp, rvm
from bayeskern.errors import DomainError, InvalidModel, NotPositiveDefinite
from bayeskern.numerics import make_rng
from oracles import gp_direct, moment_bound, se

SE = KernelSpec("squared-exp-general")


def test_single_point():
    p = gp.predict(gp.GpModel(Dataset([0.0], [1.0]), SE, 1.0), [0.0])
    assert p.mean[0] == pytest.approx(0.5) and p.variance[0] == pytest.approx(0.5)


def test_matches_direct_inverse(se_problem):
    ds, spec, _ = se_problem
    pts = np.linspace(-3, 23, 30)
    mean, cov = gp_direct(ds.X[:, 0], ds.y, pts, lambda a, b: se(a, b, 1.0, 1.5), 0.1)
    j = gp.predict_joint(gp.GpModel(ds, spec, 0.1), pts)
    np.testing.assert_allclose(j.mean, mean, atol=1e-10)
    np.testing.assert_allclose(j.cov, cov, atol=1e-10)


def test_noise_free_interpolation(se_problem):
    ds, spec, _ = se_problem
    p = gp.predict(gp.GpModel(ds, spec, 0.0), ds.X)
    assert np.max(np.abs(p.mean - ds.y)) <= 1e-8
    assert np.max(p.variance) <= 1e-10


def test_far_field_reverts_to_prior():
    spec = KernelSpec("squared-exp-general", {"amplitude": 0.8})
    x = np.linspace(0, 5, 10)
    p = gp.predict(gp.GpModel(Dataset(x, np.sin(x)), spec, 0.09), [100.0])
    assert abs(p.mean[0]) < 1e-12 and abs(p.variance[0] - 0.8) < 1e-12


def test_joint_specializations(se_problem):
    ds, spec, _ = se_problem
    model = gp.GpModel(ds, spec, 0.1)
    one = gp.predict_joint(model, [3.3])
    p = gp.predict(model, [3.3])
    assert abs(one.mean[0] - p.mean[0]) <= 1e-12 and abs(one.cov[0, 0] - p.variance[0]) <= 1e-12
    tr, sm = gp.predict_joint(model, ds.X), gp.smooth(model)
    assert np.max(np.abs(tr.mean - sm.mean)) <= 1e-12
    assert np.max(np.abs(tr.cov - sm.cov)) <= 1e-12
    pts = np.linspace(-2, 22, 17)
    j, p = gp.predict_joint(model, pts), gp.predict(model, pts)
    assert np.max(np.abs(np.diag(j.cov) - p.variance)) <= 1e-12


def test_smooth_limits(se_problem):
    ds, spec, _ = se_problem
    assert np.array_equal(gp.smooth(gp.GpModel(ds, spec, 0.0)).mean, ds.y)
    loud = gp.GpModel(ds, spec, 1e12)
    s = gp.smooth(loud)
    assert np.max(np.abs(s.mean)) <= 1e-6
    np.testing.assert_allclose(s.cov, loud.design, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), na=st.integers(1, 6), nb=st.integers(1, 6))
def test_marginalization_consistency(seed, na, nb):
    rng = make_rng(seed)
    x = np.linspace(0, 10, 12)
    model = gp.GpModel(Dataset(x, rng.standard_normal(12)), SE, 0.2)
    a, b = rng.uniform(-2, 12, na), rng.uniform(-2, 12, nb)
    full, part = gp.predict_joint(model, np.concatenate([a, b])), gp.predict_joint(model, a)
    assert np.max(np.abs(full.mean[:na] - part.mean)) <= 1e-10
    assert np.max(np.abs(full.cov[:na, :na] - part.cov)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), noise=st.floats(0.0, 3.0))
def test_posterior_variance_below_prior(seed, noise):
    rng = make_rng(seed)
    x = np.linspace(0, 10, 10)
    model = gp.GpModel(Dataset(x, rng.standard_normal(10)), SE, noise)
    pts = rng.uniform(-3, 13, 20)
    assert np.all(gp.predict(model, pts).variance <= SE.diag(pts) + 1e-10)


def test_dual_equivalence():
    rng = make_rng(17)
    x = np.linspace(0, 8, 16)
    specs = [KernelSpec("squared-exp-general", {"lengthscale": 0.4 if i % 2 else 1.6}) for i in range(16)]
    basis = BasisSet(x, specs)
    a = rng.standard_normal((16, 16))
    prior = a @ a.T / 16 + 0.1 * np.eye(16)
    ds = Dataset(x, np.sin(x) + 0.1 * rng.standard_normal(16))
    r = rvm.RvmModel(ds, basis, prior, 0.05)
    g = gp.GpModel(ds, DualKernel(basis, prior), 0.05)
    pts = rng.uniform(-1, 9, 20)
    pr, pg = rvm.predict(r, pts), gp.predict(g, pts)
    assert np.max(np.abs(pr.mean - pg.mean)) <= 1e-8
    assert np.max(np.abs(pr.variance - pg.variance)) <= 1e-8


def test_rejects_invalid_inputs():
    # duplicated inputs are fine with noise but not without
    gp.GpModel(Dataset([0.0, 0.0], [1.0, 1.0]), KernelSpec("boxcar"), 0.1)
    with pytest.raises(NotPositiveDefinite):
        gp.GpModel(Dataset([0.0, 0.0], [1.0, 1.0]), KernelSpec("boxcar"), 0.0)
    asym = DualKernel(BasisSet([0.0, 1.0], SE), np.eye(2))
    asym.matrix = lambda X, Z=None: np.array([[1.0, 0.5], [0.2, 1.0]])
    with pytest.raises(InvalidModel):
        gp.GpModel(Dataset([0.0, 1.0], [1.0, 1.0]), asym, 0.1)
    with pytest.raises(DomainError):
        gp.GpModel(Dataset(np.ones((3, 2)), [1.0, 2.0, 3.0]), KernelSpec("wiener"), 0.1)
    # roughness above 2 need not give a valid covariance
    x = np.linspace(0, 1, 30)
    with pytest.raises(InvalidModel):
        gp.GpModel(Dataset(x, x), KernelSpec("squared-exp-general", {"roughness": 4.0, "lengthscale": 0.01}), 0.0)


def test_prior_variance_of_samples():
    spec = KernelSpec("squared-exp-general", {"amplitude": 0.7})
    model = gp.GpModel(Dataset([0.0], [0.0]), spec, 0.1)
    n = 20000
    d = gp.sample_prior(model, [3.0], make_rng(4), n)
    assert abs(d.var() - 0.7) <= 3 * 0.7 * np.sqrt(2 / n)


def test_wiener_prior_samples():
    model = gp.GpModel(Dataset([0.5], [0.0]), KernelSpec("wiener"), 0.1)
    d = gp.sample_prior(model, [1.0, 2.0], make_rng(9), 20000)
    c = np.array([[1.0, 1.0], [1.0, 2.0]])
    assert np.all(np.abs(np.cov(d.T, bias=True) - c) <= moment_bound(c, 20000))
    assert gp.sample_prior(model, [1.0, 2.0], make_rng(9), 0).shape == (0, 2)


def test_noise_free_posterior_draws_hit_data(se_problem):
    ds, spec, _ = se_problem
    model = gp.GpModel(ds, spec, 0.0)
    info = {}
    d = gp.sample_posterior(model, ds.X[:5], make_rng(3), 50, info=info)
    assert np.max(np.abs(d - ds.y[:5])) <= 1e-6
    assert info["clipped_eigenvalue"] <= 1e-8


def test_posterior_sample_moments(se_problem):
    ds, spec, _ = se_problem
    model = gp.GpModel(ds, spec, 0.1)
    pts = [1.0, 7.7, 8.1, 30.0]
    n = 20000
    d = gp.sample_posterior(model, pts, make_rng(10), n)
    j = gp.predict_joint(model, pts)
    assert np.all(np.abs(d.mean(0) - j.mean) <= 3 * np.sqrt(np.diag(j.cov) / n) + 1e-15)
    assert np.all(np.abs(np.cov(d.T, bias=True) - j.cov) <= moment_bound(j.cov, n))
