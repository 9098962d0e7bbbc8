import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaussian_weights
from regret_bw.design_space import ExperimentDesign, make_grid_design
from regret_bw.errors import ConfigurationError, DegenerateBandwidthError, DimensionError, DomainError
from regret_bw.kernels import KernelSpec, WeightVectors, decision_statistic, treats, weights


def test_symmetric_pair():
    w = weights(make_grid_design(2, 2, 0.1), KernelSpec(), 0.7)
    assert np.allclose(w.w1, [0.5, 0.5])


def test_weights_example_against_scalar_oracle():
    d = ExperimentDesign([0.5, 1.0], [0.0], 0.1)
    w = weights(d, KernelSpec(), 0.5)
    assert np.allclose(w.w1, gaussian_weights([0.5, 1.0], 0.5), atol=1e-15)
    assert np.allclose(w.w1, [0.8176, 0.1824], atol=1e-4)


def test_large_bandwidth_uniform():
    d = make_grid_design(7, 4, 0.1)
    w = weights(d, KernelSpec(), 1e6)
    assert np.allclose(w.w1, 1 / 7) and np.allclose(w.w0, 1 / 4)


def test_tiny_bandwidth_no_nan():
    d = make_grid_design(5, 5, 0.1)
    w = weights(d, KernelSpec(), 1e-3)
    assert np.all(np.isfinite(w.w1)) and w.w1[2] == pytest.approx(1.0)


@pytest.mark.parametrize("family", ["uniform", "epanechnikov"])
def test_compact_kernels_degenerate(family):
    d = ExperimentDesign([0.5, 1.0], [0.0], 0.1)
    with pytest.raises(DegenerateBandwidthError) as err:
        weights(d, KernelSpec(family), 0.4)
    assert err.value.arm == "treated"
    assert np.allclose(weights(d, KernelSpec(family), 2.0).w1.sum(), 1.0)


def test_bad_inputs():
    d = make_grid_design(2, 2, 0.1)
    with pytest.raises(DomainError):
        weights(d, KernelSpec(), 0.0)
    with pytest.raises(ConfigurationError):
        KernelSpec("triangle")


def test_statistic_examples():
    w = WeightVectors(np.array([0.8176, 0.1824]), np.array([0.5, 0.5]), 0.5)
    s = decision_statistic(w, [0, 1], [1, 0])
    assert s == pytest.approx(-0.3176) and not treats(s)
    assert decision_statistic(w, [1, 1], [0, 0]) == pytest.approx(1.0)
    assert decision_statistic(w, [0, 0], [0, 0]) == 0.0 and treats(0.0)
    with pytest.raises(DimensionError):
        decision_statistic(w, [0, 1, 1], [1, 0])
    with pytest.raises(DomainError):
        decision_statistic(w, [0, 2], [1, 0])


xs = st.lists(st.floats(-3, 3), min_size=1, max_size=8)


@settings(max_examples=80, deadline=None)
@given(x1=xs, x0=xs, theta=st.floats(0.01, 50), scale=st.floats(0.01, 100), fam=st.sampled_from(["gaussian", "epanechnikov", "uniform"]))
def test_weight_properties(x1, x0, theta, scale, fam):
    d = ExperimentDesign(x1, x0, 0.1)
    try:
        w = weights(d, KernelSpec(fam), theta)
    except DegenerateBandwidthError:
        return
    for v in (w.w1, w.w0):
        assert np.all(v >= 0) and abs(v.sum() - 1) <= 1e-12
    ws = weights(d, KernelSpec(fam, scale), theta)
    assert np.allclose(w.w1, ws.w1, rtol=1e-12, atol=1e-15)
    perm = np.random.default_rng(0).permutation(len(x1))
    wp = weights(ExperimentDesign(np.array(x1)[perm], x0, 0.1), KernelSpec(fam), theta)
    assert np.allclose(wp.w1, w.w1[perm], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(n1=st.integers(1, 6), n0=st.integers(1, 6), theta=st.floats(0.05, 5), data=st.data())
def test_rule_monotone_in_outcomes(n1, n0, theta, data):
    d = ExperimentDesign(np.linspace(-1, 1, n1), np.linspace(-0.7, 0.9, n0), 0.1)
    w = weights(d, KernelSpec(), theta)
    y1 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n1, max_size=n1)))
    y0 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n0, max_size=n0)))
    base = decision_statistic(w, y1, y0)
    for i in np.flatnonzero(y1 == 0):
        up = y1.copy()
        up[i] = 1
        assert decision_statistic(w, up, y0) >= base
    for i in np.flatnonzero(y0 == 0):
        up = y0.copy()
        up[i] = 1
        assert decision_statistic(w, y1, up) <= base
