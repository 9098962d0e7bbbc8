"""Exact small-sample regret by enumerating every outcome vector.

Outcome patterns are enumerated per arm and combined meet-in-the-middle:
with the control patterns sorted by their weighted sum, the acceptance
probability of each treated pattern is a cumulative probability lookup.
Every weighted sum is computed directly from its pattern (no running
updates), so exact ties in the contrast are resolved consistently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .design_space import MEMBERSHIP_TOL, ExperimentDesign, lower_profile, upper_profile, worst_case_profiles
from .errors import ConfigurationError, DimensionError, DomainError, EnumerationTooLargeError
from .kernels import TIE_TOL, KernelSpec, WeightVectors, weights

MAX_ENUMERATED_SITES = 24
MAX_BRUTEFORCE_PAIRS = 10**10

Method = Literal["reduced-two-parameter", "full-space-brute-force"]


@dataclass(frozen=True)
class ExactRegretResult:
    value: float
    argmax_profile: tuple[NDArray[np.float64], NDArray[np.float64]]
    method: Method


def _guard(design: ExperimentDesign) -> None:
    if design.n1 + design.n0 > MAX_ENUMERATED_SITES:
        raise EnumerationTooLargeError(
            f"exact enumeration limited to n1 + n0 <= {MAX_ENUMERATED_SITES}, got {design.n1 + design.n0}"
        )


def outcome_patterns(n: int) -> NDArray[np.bool_]:
    """All 2^n binary vectors, row r holding the bits of r (site 0 = lowest bit)."""
    r = np.arange(2**n)[:, None]
    return ((r >> np.arange(n)[None, :]) & 1).astype(bool)


def pattern_probabilities(patterns: NDArray[np.bool_], probs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Probability of each pattern; ``probs`` may be (n,) or a batch (m, n)."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        return np.prod(np.where(patterns, probs, 1.0 - probs), axis=1)
    # (m, n) -> (m, 2^n)
    return np.prod(np.where(patterns[None, :, :], probs[:, None, :], 1.0 - probs[:, None, :]), axis=2)


@dataclass(frozen=True, eq=False)
class _OutcomeTable:
    pat1: NDArray[np.bool_]
    pat0: NDArray[np.bool_]
    sum1: NDArray[np.float64]
    sum0: NDArray[np.float64]

    def accept_matrix(self) -> NDArray[np.float64]:
        """1.0 where the rule treats, rows = treated patterns, columns = control patterns."""
        return (self.sum1[:, None] >= self.sum0[None, :] - TIE_TOL).astype(np.float64)


def _outcome_table(w: WeightVectors) -> _OutcomeTable:
    pat1 = outcome_patterns(w.w1.size)
    pat0 = outcome_patterns(w.w0.size)
    return _OutcomeTable(pat1, pat0, pat1 @ w.w1, pat0 @ w.w0)


def _check_probs(p: ArrayLike, n: int, name: str) -> NDArray[np.float64]:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n,):
        raise DimensionError(f"{name} must have length {n}, got shape {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError(f"{name} entries must lie in [0, 1]")
    return p


def exact_acceptance(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, p1_vec: ArrayLike, p0_vec: ArrayLike
) -> float:
    """Probability that the rule treats when site outcomes are independent Bernoulli draws."""
    _guard(design)
    p1 = _check_probs(p1_vec, design.n1, "p1_vec")
    p0 = _check_probs(p0_vec, design.n0, "p0_vec")
    tab = _outcome_table(weights(design, kernel, theta))
    prob1 = pattern_probabilities(tab.pat1, p1)
    prob0 = pattern_probabilities(tab.pat0, p0)
    order = np.argsort(tab.sum0, kind="stable")
    cum0 = np.concatenate(([0.0], np.cumsum(prob0[order])))
    idx = np.searchsorted(tab.sum0[order], tab.sum1 + TIE_TOL, side="right")
    return float(np.clip(prob1 @ cum0[idx], 0.0, 1.0))


def exact_regret_at(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, p1_full: ArrayLike, p0_full: ArrayLike
) -> float:
    """Regret (p1_0 - p0_0) * (1{p1_0 >= p0_0} - P(treat)) at full parameter vectors."""
    p1_full = np.asarray(p1_full, dtype=np.float64)
    p0_full = np.asarray(p0_full, dtype=np.float64)
    if p1_full.shape != (design.n1 + 1,) or p0_full.shape != (design.n0 + 1,):
        raise DimensionError("full vectors must have lengths n1 + 1 and n0 + 1")
    gap = float(p1_full[0] - p0_full[0])
    if gap == 0.0:
        return 0.0
    acc = exact_acceptance(design, kernel, theta, p1_full[1:], p0_full[1:])
    best = 1.0 if gap >= 0 else 0.0
    return gap * (best - acc)


def _acceptance_grid(tab: _OutcomeTable, probs1: NDArray, probs0: NDArray) -> NDArray[np.float64]:
    """Acceptance for every pair of treated site vectors (rows) and control site vectors."""
    pp1 = pattern_probabilities(tab.pat1, probs1)
    pp0 = pattern_probabilities(tab.pat0, probs0)
    return np.clip(pp1 @ tab.accept_matrix() @ pp0.T, 0.0, 1.0)


def exact_max_regret_reduced(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, anchor_grid_resolution: int = 101
) -> ExactRegretResult:
    """Exact maximum regret over anchor pairs, each with its clipped worst-case profiles."""
    _guard(design)
    if anchor_grid_resolution < 2:
        raise ConfigurationError("anchor grid resolution must be >= 2")
    tab = _outcome_table(weights(design, kernel, theta))
    grid = np.linspace(0.0, 1.0, anchor_grid_resolution)
    c = design.lipschitz_c
    lo1 = np.array([lower_profile(p, design.norms1, c) for p in grid])
    hi1 = np.array([upper_profile(p, design.norms1, c) for p in grid])
    lo0 = np.array([lower_profile(p, design.norms0, c) for p in grid])
    hi0 = np.array([upper_profile(p, design.norms0, c) for p in grid])
    gap = grid[:, None] - grid[None, :]

    acc_minus = _acceptance_grid(tab, lo1[:, 1:], hi0[:, 1:])
    reg_minus = np.where(gap > 0, gap * (1.0 - acc_minus), -np.inf)
    acc_plus = _acceptance_grid(tab, hi1[:, 1:], lo0[:, 1:])
    reg_plus = np.where(gap < 0, -gap * acc_plus, -np.inf)

    km, jm = np.unravel_index(int(np.argmax(reg_minus)), reg_minus.shape)
    kp, jp = np.unravel_index(int(np.argmax(reg_plus)), reg_plus.shape)
    if reg_minus[km, jm] >= reg_plus[kp, jp]:
        return ExactRegretResult(float(reg_minus[km, jm]), (lo1[km], hi0[jm]), "reduced-two-parameter")
    return ExactRegretResult(float(reg_plus[kp, jp]), (hi1[kp], lo0[jp]), "reduced-two-parameter")


# ---------------------------------------------------------------------------
# full-space brute force (validation oracle)


def _step_bounds(dist: NDArray[np.float64], c: float, steps: int) -> NDArray[np.int64]:
    """Largest index difference k with k/steps <= c * dist (+ membership slack)."""
    return np.floor((c * dist + MEMBERSHIP_TOL) * steps).astype(np.int64)


def arm_site_profiles(x: NDArray[np.float64], c: float, resolution: int):
    """Every grid site vector of one arm for which some grid anchor is feasible.

    Returns ``(sites, anchor_lo, anchor_hi)``: sites as grid indices (m, n),
    and for each row the range of anchor indices completing it to a member
    of the Lipschitz space.  Sites are filled one at a time, each confined to
    the interval allowed by the sites already fixed and by the surviving
    anchor range.
    """
    steps = resolution - 1
    n = x.shape[0]
    to_anchor = _step_bounds(np.linalg.norm(x, axis=1), c, steps)
    pair = _step_bounds(np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2), c, steps)

    sites = np.zeros((1, 0), dtype=np.int64)
    a_lo = np.zeros(1, dtype=np.int64)
    a_hi = np.full(1, steps, dtype=np.int64)
    for i in range(n):
        lo = np.maximum(a_lo - to_anchor[i], 0)
        hi = np.minimum(a_hi + to_anchor[i], steps)
        if i:
            lo = np.maximum(lo, np.max(sites - pair[i, :i], axis=1))
            hi = np.minimum(hi, np.min(sites + pair[i, :i], axis=1))
        count = np.maximum(hi - lo + 1, 0)
        rows = np.repeat(np.arange(sites.shape[0]), count)
        offsets = np.arange(rows.size) - np.repeat(np.cumsum(count) - count, count)
        vals = lo[rows] + offsets
        sites = np.column_stack([sites[rows], vals])
        a_lo = np.maximum(a_lo[rows], vals - to_anchor[i])
        a_hi = np.minimum(a_hi[rows], vals + to_anchor[i])
        keep = a_lo <= a_hi
        sites, a_lo, a_hi = sites[keep], a_lo[keep], a_hi[keep]
    return sites, a_lo, a_hi


def exact_max_regret_bruteforce(
    design: ExperimentDesign,
    kernel: KernelSpec,
    theta: float,
    per_site_grid_resolution: int = 21,
    chunk: int = 2048,
) -> ExactRegretResult:
    """Exact maximum regret over every grid parameter vector in the Lipschitz space.

    Makes no use of worst-case profiles.  For fixed site vectors the regret
    depends on the anchors only through their gap, and the two arms' anchor
    ranges are independent, so each site pair is scored at its largest
    feasible gap in each direction.
    """
    _guard(design)
    if per_site_grid_resolution < 2:
        raise ConfigurationError("per-site grid resolution must be >= 2")
    steps = per_site_grid_resolution - 1
    c = design.lipschitz_c
    s1, lo1, hi1 = arm_site_profiles(design.x1, c, per_site_grid_resolution)
    s0, lo0, hi0 = arm_site_profiles(design.x0, c, per_site_grid_resolution)
    if s1.shape[0] * s0.shape[0] > MAX_BRUTEFORCE_PAIRS:
        raise EnumerationTooLargeError(
            f"brute force would score {s1.shape[0] * s0.shape[0]:.3g} site pairs "
            f"(limit {MAX_BRUTEFORCE_PAIRS:.0e})"
        )
    tab = _outcome_table(weights(design, kernel, theta))
    m = tab.accept_matrix()
    pp0_t = pattern_probabilities(tab.pat0, s0 / steps).T  # (2^n0, N0)

    best = (-1.0, None)
    for start in range(0, s1.shape[0], chunk):
        sl = slice(start, start + chunk)
        acc = np.clip(pattern_probabilities(tab.pat1, s1[sl] / steps) @ m @ pp0_t, 0.0, 1.0)
        # treat-better: anchors at hi1 (treated) and lo0 (control)
        gap = (hi1[sl, None] - lo0[None, :]) / steps
        reg = np.where(gap > 0, gap * (1.0 - acc), 0.0)
        k, j = np.unravel_index(int(np.argmax(reg)), reg.shape)
        if reg[k, j] > best[0]:
            best = (float(reg[k, j]), (start + k, j, hi1[start + k], lo0[j]))
        gap = (hi0[None, :] - lo1[sl, None]) / steps
        reg = np.where(gap > 0, gap * acc, 0.0)
        k, j = np.unravel_index(int(np.argmax(reg)), reg.shape)
        if reg[k, j] > best[0]:
            best = (float(reg[k, j]), (start + k, j, lo1[start + k], hi0[j]))

    value, (k, j, a1, a0) = best
    p1_full = np.concatenate(([a1], s1[k])) / steps
    p0_full = np.concatenate(([a0], s0[j])) / steps
    return ExactRegretResult(value, (p1_full, p0_full), "full-space-brute-force")


# ---------------------------------------------------------------------------
# reduction check on random small instances

VERIFY_CS = (0.1, 0.3, 0.7)
VERIFY_THETAS = (0.3, 1.0, 3.0)


@dataclass(frozen=True)
class ReductionCheck:
    x1: tuple[float, ...]
    x0: tuple[float, ...]
    lipschitz_c: float
    theta: float
    reduced: float
    bruteforce: float
    at_bruteforce_anchors: float
    slack: float

    @property
    def difference(self) -> float:
        return abs(self.reduced - self.bruteforce)

    @property
    def violation(self) -> bool:
        # worst-case profiles must dominate the brute-force optimum at its own anchors
        return self.difference > self.slack or self.at_bruteforce_anchors < self.bruteforce - 1e-12


def reduced_regret_at_anchors(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, p1: float, p0: float
) -> float:
    prof = worst_case_profiles(design, p1, p0)
    vecs = prof.minus_config() if p1 > p0 else prof.plus_config()
    return exact_regret_at(design, kernel, theta, *vecs)


def random_small_design(rng: np.random.Generator, max_n: int, lipschitz_c: float) -> ExperimentDesign:
    total = int(rng.integers(2, max_n + 1))
    n1 = int(rng.integers(1, total))
    return ExperimentDesign(
        np.round(rng.uniform(-1, 1, n1), 3), np.round(rng.uniform(-1, 1, total - n1), 3), lipschitz_c
    )


def verify_reduction(
    instances: int = 54,
    max_n: int = 6,
    resolution: int = 41,
    seed: int = 0,
    kernel: KernelSpec = KernelSpec(),
) -> list[ReductionCheck]:
    """Compare the two-anchor search with the full-space brute force on random designs.

    Instances cycle through every (C, theta) combination of ``VERIFY_CS`` x
    ``VERIFY_THETAS``; covariates are uniform on [-1, 1].
    """
    if max_n < 2:
        raise ConfigurationError("max_n must be >= 2 (one site per arm)")
    rng = np.random.default_rng(seed)
    slack = 2.0 / (resolution - 1)
    out = []
    for i in range(instances):
        c = VERIFY_CS[i % len(VERIFY_CS)]
        theta = VERIFY_THETAS[(i // len(VERIFY_CS)) % len(VERIFY_THETAS)]
        design = random_small_design(rng, max_n, c)
        red = exact_max_regret_reduced(design, kernel, theta, resolution)
        brute = exact_max_regret_bruteforce(design, kernel, theta, resolution)
        p1, p0 = brute.argmax_profile
        at = reduced_regret_at_anchors(design, kernel, theta, float(p1[0]), float(p0[0]))
        out.append(
            ReductionCheck(
                tuple(design.x1[:, 0]), tuple(design.x0[:, 0]), c, theta, red.value, brute.value, at, slack
            )
        )
    return out
