import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayeskern import gp, qgp, rvm
from bayeskern.errors import BadK, DuplicateInputs, NonEquidistantGrid, SequenceTooShort
from bayeskern.numerics import make_rng
from bayeskern.smoothers import FilterSpec, fir_apply, iir_apply, predict, weights
from oracles import lagrange_by_vandermonde, sliding_mean

X5 = np.array([0.0, 1.0, 2.5, 4.0, 7.0])


def test_sinc_node_indicator():
    grid = np.arange(6) * 0.5
    for i, x in enumerate(grid):
        w = weights("sinc", x, grid).weights
        assert np.max(np.abs(w - np.eye(6)[i])) <= 1e-12


def test_sinc_rejects_irregular_grid():
    with pytest.raises(NonEquidistantGrid):
        weights("sinc", 0.3, X5)


def test_knn_full_is_mean():
    y = np.array([3.0, -1.0, 4.0, 1.0, 5.0])
    assert np.array_equal(weights("knn", 2.0, X5, k=5).weights, np.full(5, 0.2))
    assert abs(predict("knn", 9.0, X5, y, k=5) - y.mean()) <= 1e-12


def test_knn_bad_k():
    with pytest.raises(BadK):
        weights("knn", 0.0, X5, k=0)
    with pytest.raises(BadK):
        weights("knn", 0.0, X5, k=6)


def test_knn_nearest_neighbour_ties_to_lower_index():
    y = np.array([10.0, 20.0, 30.0])
    assert predict("knn", 0.5, [0.0, 1.0, 2.0], y, k=1) == 10.0
    assert predict("knn", 1.6, [0.0, 1.0, 2.0], y, k=1) == 30.0


def test_nw_single_datum():
    assert np.array_equal(weights("nadaraya-watson", 17.0, [0.0]).weights, [1.0])


def test_nw_symmetric_pair():
    assert predict("nadaraya-watson", 0.5, [0.0, 1.0], [0.0, 2.0]) == pytest.approx(1.0, abs=1e-15)


def test_nw_vanishing_window_falls_back_to_mean():
    y = np.array([1.0, 3.0])
    assert predict("nadaraya-watson", 1e4, [0.0, 1.0], y, lengthscale=1e-3) == 2.0


def test_nw_custom_window():
    def box(x, X):
        return (np.abs(X[:, 0] - x[0]) <= 1.0).astype(float)

    y = np.arange(5.0)
    assert predict("nadaraya-watson", 1.0, X5, y, window=box) == pytest.approx(0.5)


def test_lagrange_examples():
    np.testing.assert_allclose(weights("lagrange", 0.5, [0.0, 1.0]).weights, [0.5, 0.5])
    assert predict("lagrange", 3.0, [0.0, 1.0, 2.0], [1.0, 3.0, 7.0]) == pytest.approx(13.0, abs=1e-12)
    with pytest.raises(DuplicateInputs):
        weights("lagrange", 0.5, [0.0, 0.0, 1.0])


def test_idw_node_and_convexity():
    y = np.array([2.0, -1.0, 5.0, 0.5, 3.0])
    assert predict("idw", 2.5, X5, y) == 5.0
    w = weights("idw", 3.3, X5, power=3.0).weights
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.floats(-20, 20),
       method=st.sampled_from(["nadaraya-watson", "knn", "idw"]))
def test_convex_weights(seed, q, method):
    rng = make_rng(seed)
    X = rng.uniform(-10, 10, 7)
    params = {"k": 3} if method == "knn" else {}
    w = weights(method, q, X, **params).weights
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_lagrange_reproduces_polynomials(seed, n):
    rng = make_rng(seed)
    nodes = np.sort(rng.uniform(-1, 1, n))
    while n > 1 and np.min(np.diff(nodes)) < 0.05:
        nodes = np.sort(rng.uniform(-1, 1, n))
    coef = rng.standard_normal(n)
    y = np.polyval(coef, nodes)
    for x in rng.uniform(-1, 1, 20):
        expect = np.polyval(coef, x)
        assert abs(predict("lagrange", x, nodes, y) - expect) <= 1e-8 * (1 + abs(expect))


def test_lagrange_matches_vandermonde_oracle():
    nodes = np.array([0.0, 0.7, 1.1, 2.0])
    y = np.array([1.0, -2.0, 0.5, 3.0])
    assert predict("lagrange", 1.5, nodes, y) == pytest.approx(
        lagrange_by_vandermonde(nodes, y, 1.5), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 8), j=st.integers(0, 7))
def test_interpolator_node_property(n, j):
    j = j % n
    nodes = np.linspace(-1, 3, n)
    for method in ("lagrange", "sinc"):
        w = weights(method, nodes[j], nodes).weights
        assert np.max(np.abs(w - np.eye(n)[j])) <= 1e-12


def test_model_weights_reproduce_means(se_problem):
    ds, spec, basis = se_problem
    models = [rvm.RvmModel(ds, basis, 0.8 * np.eye(ds.n), 0.2), gp.GpModel(ds, spec, 0.2),
              qgp.QgpModel(ds, spec, 0.2)]
    modules = [rvm, gp, qgp]
    for model, module in zip(models, modules):
        method = "rvm" if module is rvm else "gp"
        for x in (-2.0, 4.4, 13.0):
            got = predict(method, x, model=model)
            assert abs(got - module.predict(model, [x]).mean[0]) <= 1e-10


def test_noise_free_model_weights_are_indicators(se_problem):
    ds, spec, basis = se_problem
    for method, model in (("rvm", rvm.RvmModel(ds, basis, np.eye(ds.n), 0.0)),
                          ("gp", gp.GpModel(ds, spec, 0.0))):
        for j in (0, 7, ds.n - 1):
            w = weights(method, ds.X[j], model=model).weights
            assert np.max(np.abs(w - np.eye(ds.n)[j])) <= 1e-8


def test_fir_examples():
    y = np.array([4.0, -1.0, 2.0])
    assert np.array_equal(fir_apply(FilterSpec([1.0]), y), y)
    assert np.array_equal(fir_apply(FilterSpec([0.5, 0.5]), [1.0, 3.0, 5.0]), [2.0, 4.0])


def test_fir_is_sliding_mean():
    y = make_rng(0).standard_normal(30)
    np.testing.assert_allclose(fir_apply(FilterSpec([0.25] * 4), y), sliding_mean(y, 4), atol=1e-15)


def test_fir_weights_recent_samples_first():
    # f_t = a0 y_t + a1 y_{t-1}
    assert np.array_equal(fir_apply(FilterSpec([1.0, 10.0]), [1.0, 2.0, 3.0]), [12.0, 23.0])


def test_fir_too_short():
    with pytest.raises(SequenceTooShort):
        fir_apply(FilterSpec([1.0, 1.0, 1.0]), [1.0, 2.0])


def test_iir_examples():
    assert np.array_equal(iir_apply(FilterSpec([1.0], [0.5]), [1.0, 0.0, 0.0]), [1.0, 0.5, 0.25])
    y = make_rng(1).standard_normal(10)
    spec = FilterSpec([0.3, 0.7])
    assert np.array_equal(iir_apply(spec, y), fir_apply(spec, y))
    assert np.array_equal(iir_apply(FilterSpec([1.0], [1.0]), np.zeros(5)), np.zeros(5))


def test_iir_initial_state_order():
    # f_t = 1.0 f_{t-1} + 0.1 f_{t-2}; init lists oldest first
    out = iir_apply(FilterSpec([1.0], [1.0, 0.1]), [0.0, 0.0], init=[2.0, 3.0])
    assert out[0] == pytest.approx(3.0 + 0.2)
    assert out[1] == pytest.approx(3.2 + 0.3)


def test_unknown_method():
    with pytest.raises(ValueError):
        weights("spline", 0.0, X5)
