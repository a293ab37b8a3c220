import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayeskern import Dataset, KernelSpec, gp, kalman
from bayeskern.errors import IndexOutOfRange
from bayeskern.kalman import StateSpaceAR1
from bayeskern.numerics import make_rng, psd_factorize, psd_solve
from oracles import kalman_loop


def ar1_series(model, n, seed):
    rng = make_rng(seed)
    f = np.empty(n)
    f[0] = np.sqrt(kalman.stationary_variance(model)) * rng.standard_normal()
    for t in range(1, n):
        f[t] = model.gamma * f[t - 1] + np.sqrt(model.process_var) * rng.standard_normal()
    return f + np.sqrt(model.obs_var) * rng.standard_normal(n)


def gp_for(model, y):
    spec = KernelSpec("ar1-discrete", {"ar_coef": model.gamma, "process_var": model.process_var})
    t = np.arange(1, len(y) + 1, dtype=float)
    return gp.GpModel(Dataset(t, y), spec, model.obs_var)


def test_stationary_variance():
    assert kalman.stationary_variance(StateSpaceAR1(0.5, 0.75)) == pytest.approx(1.0)
    assert kalman.stationary_variance(StateSpaceAR1(0.0, 0.3)) == 0.3
    assert kalman.stationary_variance(StateSpaceAR1(0.9, 0.19)) == pytest.approx(1.0)


def test_ar1_kernel():
    m = StateSpaceAR1(0.5, 0.75)
    assert kalman.ar1_kernel(m, 4, 4) == kalman.stationary_variance(m)
    assert kalman.ar1_kernel(m, 3, 4) == pytest.approx(0.5)
    neg = StateSpaceAR1(-0.6, 1.0)
    signs = [np.sign(kalman.ar1_kernel(neg, 0, tau)) for tau in range(5)]
    assert signs == [1, -1, 1, -1, 1]


def test_invalid_model():
    with pytest.raises(ValueError):
        StateSpaceAR1(1.0, 1.0)
    with pytest.raises(ValueError):
        StateSpaceAR1(0.5, 0.0)


def test_precision_matrix():
    np.testing.assert_array_equal(kalman.precision_matrix(StateSpaceAR1(0.0, 1.0), 2), np.eye(2))
    m = StateSpaceAR1(0.8, 0.36)
    p = kalman.precision_matrix(m, 12)
    i, j = np.indices(p.shape)
    assert np.all(p[np.abs(i - j) > 1] == 0)
    cov = kalman.covariance_matrix(m, 12)
    assert np.max(np.abs(p @ cov - np.eye(12))) <= 1e-8
    assert np.max(np.abs(psd_solve(psd_factorize(cov), np.eye(12)) - p)) <= 1e-8


def test_filter_half_weighting():
    tr = kalman.forward_filter(StateSpaceAR1(0.5, 0.75, 1.0), [2.0])
    assert tr.mean_filt[0] == pytest.approx(1.0) and tr.var_filt[0] == pytest.approx(0.5)


def test_exact_observations():
    y = make_rng(0).standard_normal(8)
    tr = kalman.forward_filter(StateSpaceAR1(0.7, 0.5, 0.0), y)
    assert np.array_equal(tr.mean_filt, y) and np.all(tr.var_filt == 0)


def test_filter_matches_textbook_loop():
    m = StateSpaceAR1(0.8, 0.36, 0.5)
    y = ar1_series(m, 40, 1)
    tr = kalman.forward_filter(m, y)
    ref = kalman_loop(0.8, 0.36, 0.5, y, 0.0, kalman.stationary_variance(m))
    np.testing.assert_allclose(tr.mean_filt, ref[:, 0], atol=1e-13)
    np.testing.assert_allclose(tr.var_filt, ref[:, 1], atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), g=st.floats(-0.95, 0.95), r=st.floats(0.01, 3.0),
       n=st.integers(1, 40))
def test_filter_and_smoother_equal_gp(seed, g, r, n):
    m = StateSpaceAR1(g, 0.5, r)
    y = ar1_series(m, n, seed)
    tr = kalman.forward_filter(m, y)
    for t in range(1, n + 1, max(1, n // 5)):
        p = gp.predict(gp_for(m, y[:t]), [float(t)])
        assert abs(p.mean[0] - tr.mean_filt[t - 1]) <= 1e-8
        assert abs(p.variance[0] - tr.var_filt[t - 1]) <= 1e-8
    sm = kalman.backward_smooth(m, tr)
    p = gp.predict(gp_for(m, y), np.arange(1, n + 1, dtype=float))
    assert np.max(np.abs(p.mean - sm.mean)) <= 1e-8
    assert np.max(np.abs(p.variance - sm.var)) <= 1e-8


def test_smoother_special_cases():
    m = StateSpaceAR1(0.6, 1.0, 0.4)
    one = kalman.forward_filter(m, [0.7])
    s = kalman.backward_smooth(m, one)
    assert np.array_equal(s.mean, one.mean_filt) and np.array_equal(s.var, one.var_filt)
    white = StateSpaceAR1(0.0, 1.0, 0.4)
    tr = kalman.forward_filter(white, [0.3, -1.0, 2.0])
    s = kalman.backward_smooth(white, tr)
    assert np.array_equal(s.mean, tr.mean_filt) and np.array_equal(s.var, tr.var_filt)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), g=st.floats(-0.99, 0.99), r=st.floats(0.0, 5.0))
def test_variance_recursions(seed, g, r):
    m = StateSpaceAR1(g, 0.8, r)
    y = ar1_series(m, 25, seed)
    tr = kalman.forward_filter(m, y)
    assert np.all(tr.var_filt >= 0) and np.all(tr.var_filt <= tr.var_pred)
    assert np.all(tr.var_filt <= np.minimum(tr.var_pred, r) + 1e-15)
    if r > 1e-6:
        np.testing.assert_allclose(1 / tr.var_filt, 1 / tr.var_pred + 1 / r, rtol=1e-12)
    sm = kalman.backward_smooth(m, tr)
    assert np.all(sm.var <= tr.var_filt + 1e-12)


def test_stationary_prediction_fixed_point():
    m = StateSpaceAR1(0.9, 0.19, 1e300)
    tr = kalman.forward_filter(m, np.zeros(30))
    np.testing.assert_allclose(tr.var_pred, 1.0, rtol=1e-12)


def test_zero_initialization_transient():
    m = StateSpaceAR1(0.7, 0.5, 1e300)
    tr = kalman.forward_filter(m, np.zeros(10), init=(0.0, 0.0))
    t = np.arange(1, 11)
    expect = (1 - 0.7 ** (2 * t)) / (1 - 0.49) * 0.5
    np.testing.assert_allclose(tr.var_pred, expect, rtol=1e-12)


def test_predict_lag():
    m = StateSpaceAR1(0.5, 0.75, 0.3)
    y = ar1_series(m, 10, 3)
    tr = kalman.forward_filter(m, y)
    mu, var = kalman.predict_lag(m, tr, 4, 1)
    assert mu == pytest.approx(tr.mean_pred[4]) and var == pytest.approx(tr.var_pred[4])
    mu, var = kalman.predict_lag(m, tr, 10, 100)
    assert abs(mu) <= 1e-12 and abs(var - 1.0) <= 1e-12
    white = StateSpaceAR1(0.0, 0.6, 0.3)
    mu, var = kalman.predict_lag(white, kalman.forward_filter(white, y), 5, 7)
    assert mu == 0 and var == 0.6
    with pytest.raises(IndexOutOfRange):
        kalman.predict_lag(m, tr, 11, 1)
    with pytest.raises(IndexOutOfRange):
        kalman.predict_lag(m, tr, 0, 1)
