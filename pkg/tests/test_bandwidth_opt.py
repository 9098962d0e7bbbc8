import math

import numpy as np
import pytest

from regret_bw.bandwidth_opt import (
    CurvePoint,
    ThetaGridSpec,
    compare_binary_normal,
    optimize_bandwidth,
    plateau_detect,
    regret_curve,
    table1,
    worker_count,
)
from regret_bw.design_space import ExperimentDesign, make_grid_design
from regret_bw.errors import ConfigurationError, NoFeasibleBandwidthError
from regret_bw.kernels import KernelSpec
from regret_bw.regret_mc import PGridSpec, make_draws, max_regret

K = KernelSpec()


def _curve(vals, se=0.0):
    return [CurvePoint((i + 1) / 10, v, se) for i, v in enumerate(vals)]


def test_plateau_convex_is_degenerate():
    assert plateau_detect(_curve([5, 3, 1, 2, 4])) == (0.3, 0.3)


def test_plateau_constant_is_full():
    assert plateau_detect(_curve([1, 1, 1, 1])) == (0.1, 0.4)


def test_plateau_uses_se_and_floor():
    vals = [0.5, 0.30005, 0.3, 0.3002, 0.4]
    assert plateau_detect(_curve(vals), 1e-4, 0) == (0.2, 0.3)
    lo, hi = plateau_detect(_curve(vals, se=0.001), 1e-4, 1)
    assert (lo, hi) == pytest.approx((0.2, 0.4))


def test_plateau_errors():
    with pytest.raises(ConfigurationError):
        plateau_detect([])
    with pytest.raises(ConfigurationError):
        plateau_detect([CurvePoint(0.2, 1, 0), CurvePoint(0.1, 1, 0)])


def test_theta_grid_spec():
    g = ThetaGridSpec(0.1, 1.0, 3)
    assert np.allclose(g.points(), [0.1, math.sqrt(0.1), 1.0])
    assert np.allclose(ThetaGridSpec(0.1, 1.0, 3, "linear").points(), [0.1, 0.55, 1.0])
    for bad in ((1.0, 0.1, 3), (0.1, 1.0, 1), (0.0, 1.0, 3)):
        with pytest.raises(ConfigurationError):
            ThetaGridSpec(*bad)
    d = make_grid_design(5, 5, 0.1)
    g = ThetaGridSpec.default_for(d)
    assert g.theta_min == pytest.approx(0.25) and g.theta_max == pytest.approx(8.0) and g.count == 60


def test_optimize_invariants_and_reproducibility():
    d = make_grid_design(5, 5, 0.2)
    draws = make_draws(3, 4000, d)
    grid = ThetaGridSpec(0.05, 1.5, 25)
    sol = optimize_bandwidth(d, K, draws, PGridSpec(51), grid)
    regrets = [c.regret for c in sol.curve]
    assert sol.min_regret == min(regrets)
    assert sol.plateau[0] <= sol.theta_star <= sol.plateau[1]
    assert sol.plateau[0] <= sol.theta_argmin <= sol.plateau[1]
    inside = [c for c in sol.curve if sol.plateau[0] <= c.theta <= sol.plateau[1]]
    assert all(c.regret <= sol.min_regret + sol.plateau_tolerance for c in inside)
    star = next(c for c in sol.curve if c.theta == sol.theta_star)
    assert star.regret <= min(regrets) + sol.plateau_tolerance
    assert optimize_bandwidth(d, K, make_draws(3, 4000, d), PGridSpec(51), grid) == sol


def test_curve_matches_pointwise_max_regret():
    d = make_grid_design(4, 4, 0.3)
    draws = make_draws(0, 1000, d)
    grid = ThetaGridSpec(0.1, 1.0, 5)
    curve = regret_curve(d, K, draws, PGridSpec(21), grid)
    for pt, t in zip(curve, grid.points()):
        assert pt.regret == max_regret(d, K, t, draws, PGridSpec(21)).value


def test_threads_do_not_change_results(monkeypatch):
    d = make_grid_design(4, 4, 0.3)
    draws = make_draws(0, 1000, d)
    grid = ThetaGridSpec(0.1, 1.0, 8)
    one = regret_curve(d, K, draws, PGridSpec(21), grid, threads=1)
    four = regret_curve(d, K, draws, PGridSpec(21), grid, threads=4)
    assert one == four
    monkeypatch.setenv("REGRET_BW_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("REGRET_BW_THREADS", "x")
    with pytest.raises(ConfigurationError):
        worker_count()


def test_per_theta_scope_runs():
    d = make_grid_design(4, 4, 0.3)
    sol = optimize_bandwidth(d, K, make_draws(0, 1000, d), PGridSpec(21), ThetaGridSpec(0.1, 1.0, 6), "per-theta")
    assert len(sol.curve) == 6
    with pytest.raises(ConfigurationError):
        regret_curve(d, K, make_draws(0, 10, d), PGridSpec(21), ThetaGridSpec(0.1, 1.0, 6), "bogus")


def test_all_degenerate_raises():
    d = ExperimentDesign([1.0, 2.0], [1.0], 0.1)
    with pytest.raises(NoFeasibleBandwidthError):
        optimize_bandwidth(d, KernelSpec("uniform"), make_draws(0, 100, d), PGridSpec(11), ThetaGridSpec(0.1, 0.5, 4))


def test_degenerate_points_are_skipped():
    d = ExperimentDesign([0.5, 2.0], [0.5], 0.1)
    sol = optimize_bandwidth(d, KernelSpec("uniform"), make_draws(0, 200, d), PGridSpec(11), ThetaGridSpec(0.1, 1.0, 6))
    assert all(c.theta >= 0.5 for c in sol.curve)


def test_flat_curve_in_large_c_regime():
    d = ExperimentDesign([-1.0, 1.0], [-1.0, 1.0], 5.0)
    sol = optimize_bandwidth(d, K, make_draws(0, 2000, d), PGridSpec(21), ThetaGridSpec(0.05, 2.0, 10))
    assert all(c.regret == 1.0 for c in sol.curve)
    assert sol.plateau == pytest.approx((0.05, 2.0))


def test_comparison_row_and_small_table():
    d = make_grid_design(5, 5, 0.1)
    row = compare_binary_normal(d, K, make_draws(0, 3000, d), PGridSpec(51), ThetaGridSpec(0.05, 2.0, 30))
    assert row.n == 10 and row.normal.theta_star == pytest.approx(0.64, abs=0.01)
    assert row.divergent
    rows = table1(s_draws=500, seed=1, p_grid=PGridSpec(21), theta_grid=ThetaGridSpec(0.05, 2.0, 10), cs=(0.3, 0.1), ns=(10, 20))
    assert [(r.lipschitz_c, r.n) for r in rows] == [(0.3, 10), (0.3, 20), (0.1, 10), (0.1, 20)]
    with pytest.raises(ConfigurationError):
        table1(s_draws=10, ns=(11,))
