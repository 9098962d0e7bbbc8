import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaussian_weights, naive_acceptance
from regret_bw.design_space import ExperimentDesign, make_grid_design, worst_case_profiles
from regret_bw.errors import ConfigurationError, DomainError
from regret_bw.kernels import KernelSpec
from regret_bw.regret_mc import (
    CONTROL_BETTER,
    TREAT_BETTER,
    PGridSpec,
    acceptance_minus,
    acceptance_plus,
    acceptance_surface,
    make_draws,
    max_regret,
    regret_at,
)

K = KernelSpec()


def test_draws_deterministic_and_streams_differ():
    d = make_grid_design(3, 4, 0.1)
    a, b = make_draws(5, 100, d), make_draws(5, 100, d)
    assert np.array_equal(a.u1, b.u1) and np.array_equal(a.u0, b.u0)
    assert a.u1.shape == (100, 3) and a.u0.shape == (100, 4)
    assert not np.array_equal(make_draws(5, 100, d, stream=1).u1, a.u1)
    with pytest.raises(ConfigurationError):
        make_draws(0, 0, d)


def test_pgrid():
    assert np.allclose(PGridSpec(3).points(), [0, 0.5, 1])
    with pytest.raises(ConfigurationError):
        PGridSpec(1)


def test_single_site_matches_hand_enumeration():
    # one site per arm, C slack enough that the site equals the anchor
    d = ExperimentDesign([0.5], [-0.5], 0.0)
    draws = make_draws(3, 200_000, d)
    acc = acceptance_minus(d, K, 1.0, draws, 0.7, 0.4)
    se = math.sqrt(0.88 * 0.12 / 200_000)
    assert abs(acc - 0.88) <= 4 * se


def test_clipped_profile_matches_exact_oracle():
    d = ExperimentDesign([1.0], [1.0], 2.0)
    draws = make_draws(11, 100_000, d)
    prof = worst_case_profiles(d, 0.6, 0.3)
    p1, p0 = prof.minus_config()
    exact = naive_acceptance([1.0], [1.0], p1[1:], p0[1:])
    acc = acceptance_minus(d, K, 0.5, draws, 0.6, 0.3)
    assert abs(acc - exact) <= 4 * math.sqrt(exact * (1 - exact) / 100_000) + 1e-12


def test_regret_at_zero_on_diagonal_and_bounded():
    d = make_grid_design(3, 3, 0.2)
    draws = make_draws(0, 2000, d)
    assert regret_at(d, K, 0.5, draws, 0.4, 0.4).regret == 0.0
    pt = regret_at(d, K, 0.5, draws, 0.9, 0.1)
    assert pt.branch == TREAT_BETTER and 0 <= pt.regret <= 0.8
    pt = regret_at(d, K, 0.5, draws, 0.1, 0.9)
    assert pt.branch == CONTROL_BETTER and 0 <= pt.regret <= 0.8


@pytest.mark.parametrize("c", [0.0, 0.15, 0.6])
@pytest.mark.parametrize("theta", [0.1, 0.5, 3.0])
def test_breakpoint_engine_equals_direct_thresholding(c, theta):
    d = make_grid_design(4, 5, c)
    draws = make_draws(1, 500, d)
    grid = np.linspace(0, 1, 9)
    for branch, fn in ((TREAT_BETTER, acceptance_minus), (CONTROL_BETTER, acceptance_plus)):
        surf = acceptance_surface(d, K, theta, draws, branch, grid)
        direct = np.array([[fn(d, K, theta, draws, a, b) for b in grid] for a in grid])
        assert np.array_equal(surf, direct)


def test_max_regret_equals_naive_grid_search():
    d = make_grid_design(4, 4, 0.3)
    draws = make_draws(2, 800, d)
    grid = np.linspace(0, 1, 11)
    naive = max(regret_at(d, K, 0.4, draws, a, b).regret for a in grid for b in grid)
    est = max_regret(d, K, 0.4, draws, PGridSpec(11))
    assert est.value == pytest.approx(naive, abs=1e-12)
    assert est.mc_standard_error >= 0
    with pytest.raises(DomainError):
        max_regret(d, K, -1.0, draws, PGridSpec(11))


def test_refinement_never_lowers_value():
    d = make_grid_design(4, 4, 0.3)
    draws = make_draws(2, 800, d)
    coarse = max_regret(d, K, 0.4, draws, PGridSpec(11))
    fine = max_regret(d, K, 0.4, draws, PGridSpec(11, refine=True))
    assert fine.value >= coarse.value


@settings(max_examples=40, deadline=None)
@given(
    c=st.floats(0, 1),
    theta=st.floats(0.05, 3),
    a=st.floats(0, 1),
    b=st.floats(0, 1),
    da=st.floats(0, 0.5),
    db=st.floats(0, 0.5),
)
def test_crn_monotonicity(c, theta, a, b, da, db):
    d = make_grid_design(3, 4, c)
    draws = make_draws(4, 400, d)
    base = acceptance_minus(d, K, theta, draws, a, b)
    assert acceptance_minus(d, K, theta, draws, min(a + da, 1), b) >= base
    assert acceptance_minus(d, K, theta, draws, a, min(b + db, 1)) <= base
    base = acceptance_plus(d, K, theta, draws, a, b)
    assert acceptance_plus(d, K, theta, draws, min(a + da, 1), b) >= base
    assert 0 <= base <= 1


def test_mc_agrees_with_exact_on_small_designs():
    rng = np.random.default_rng(9)
    s = 20_000
    inside = total = 0
    for _ in range(30):
        x1, x0 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 3)
        d = ExperimentDesign(x1, x0, 0.4)
        draws = make_draws(int(rng.integers(1 << 30)), s, d)
        theta, a, b = rng.uniform(0.1, 2), rng.uniform(), rng.uniform()
        p1, p0 = worst_case_profiles(d, a, b).minus_config()
        exact = naive_acceptance(gaussian_weights(x1, theta), gaussian_weights(x0, theta), p1[1:], p0[1:])
        mc = acceptance_minus(d, K, theta, draws, a, b)
        total += 1
        inside += abs(mc - exact) <= 4 * math.sqrt(exact * (1 - exact) / s) + 1e-12
    assert inside >= 29
