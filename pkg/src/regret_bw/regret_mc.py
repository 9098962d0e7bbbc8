"""Monte Carlo maximum regret of the kernel plug-in rule.

For fixed anchors (p1, p0) the regret is maximized by the clipped worst-case
profiles, so the maximum regret over the whole Lipschitz space reduces to a
search over the two anchors.  Acceptance probabilities under those profiles
are estimated from one set of common uniforms: outcome i of draw s is
``U[s, i] <= profile_i(p)``.

Grid evaluation uses the fact that, for a fixed draw, each outcome switches
on at a single anchor grid index.  Bucketing the uniforms by that index once
turns every (theta, p1, p0) evaluation into cumulative sums and a two-pointer
merge, O(S * (n + G)) per bandwidth instead of O(S * n * G^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numba
import numpy as np
from numpy.typing import NDArray

from .design_space import ExperimentDesign, lower_profile, upper_profile, worst_case_profiles
from .errors import ConfigurationError, DomainError
from .kernels import TIE_TOL, KernelSpec, WeightVectors, treats, weights

Branch = Literal["treat-better", "control-better"]
TREAT_BETTER: Branch = "treat-better"
CONTROL_BETTER: Branch = "control-better"

DEFAULT_S = 10_000
DEFAULT_P_RESOLUTION = 101


@dataclass(frozen=True, eq=False)
class CrnDraws:
    u1: NDArray[np.float64]
    u0: NDArray[np.float64]
    seed: int
    s_draws: int
    stream: int | None = None


def make_draws(seed: int, s_draws: int, design: ExperimentDesign, stream: int | None = None) -> CrnDraws:
    """Common uniforms for both arms, a deterministic function of (seed, stream, S, n1, n0).

    ``stream`` selects an independent substream; the per-bandwidth CRN
    scope uses the bandwidth index here.
    """
    if s_draws < 1:
        raise ConfigurationError(f"number of draws must be >= 1, got {s_draws}")
    entropy = [int(seed)] if stream is None else [int(seed), int(stream)]
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    u1 = rng.random((s_draws, design.n1))
    u0 = rng.random((s_draws, design.n0))
    u1.setflags(write=False)
    u0.setflags(write=False)
    return CrnDraws(u1, u0, int(seed), int(s_draws), stream)


@dataclass(frozen=True)
class PGridSpec:
    """Anchor grid on [0, 1] shared by both anchors.

    ``refine`` re-searches a finer local grid around the grid argmax; it is
    off by default because with finite S the surface is a step function.
    """

    resolution: int = DEFAULT_P_RESOLUTION
    refine: bool = False
    refine_points: int = 11

    def __post_init__(self) -> None:
        if self.resolution < 2:
            raise ConfigurationError(
                f"anchor grid resolution {self.resolution} leaves no pair with p1 != p0"
            )

    def points(self) -> NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.resolution)


@dataclass(frozen=True)
class RegretSurfacePoint:
    p1: float
    p0: float
    regret: float
    branch: Branch
    acceptance: float


@dataclass(frozen=True)
class MaxRegretEstimate:
    theta: float
    value: float
    argmax_point: RegretSurfacePoint
    mc_standard_error: float


# ---------------------------------------------------------------------------
# pointwise (direct thresholding) estimates


def _simulate_acceptance(w: WeightVectors, draws: CrnDraws, p1_full, p0_full) -> float:
    y1 = draws.u1 <= p1_full[1:]
    y0 = draws.u0 <= p0_full[1:]
    stat = y1 @ w.w1 - y0 @ w.w0
    return float(np.mean(treats(stat)))


def acceptance_minus(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, draws: CrnDraws, p1: float, p0: float
) -> float:
    """Simulated treatment probability under (treated pushed down, control pushed up)."""
    prof = worst_case_profiles(design, p1, p0)
    return _simulate_acceptance(weights(design, kernel, theta), draws, *prof.minus_config())


def acceptance_plus(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, draws: CrnDraws, p1: float, p0: float
) -> float:
    prof = worst_case_profiles(design, p1, p0)
    return _simulate_acceptance(weights(design, kernel, theta), draws, *prof.plus_config())


def regret_at(
    design: ExperimentDesign, kernel: KernelSpec, theta: float, draws: CrnDraws, p1: float, p0: float
) -> RegretSurfacePoint:
    """Worst-case regret for fixed anchors (zero on the diagonal)."""
    if p1 > p0:
        acc = acceptance_minus(design, kernel, theta, draws, p1, p0)
        return RegretSurfacePoint(p1, p0, (p1 - p0) * (1.0 - acc), TREAT_BETTER, acc)
    acc = acceptance_plus(design, kernel, theta, draws, p1, p0)
    return RegretSurfacePoint(p1, p0, (p0 - p1) * acc, CONTROL_BETTER, acc)


# ---------------------------------------------------------------------------
# breakpoint engine


@numba.njit(cache=True, nogil=True)
def _bucket_sums(buckets, w, n_grid):
    """A[s, k] = sum_i w[i] * (k >= buckets[s, i]) for k < n_grid."""
    n_s, n = buckets.shape
    out = np.empty((n_s, n_grid))
    row = np.empty(n_grid + 1)
    for s in range(n_s):
        row[:] = 0.0
        for i in range(n):
            row[buckets[s, i]] += w[i]
        acc = 0.0
        for k in range(n_grid):
            acc += row[k]
            out[s, k] = acc
    return out


@numba.njit(cache=True, nogil=True)
def _accept_counts(a, b, tol):
    """counts[k, j] = #{s : a[s, k] >= b[s, j] - tol}; rows of a and b nondecreasing."""
    n_s, g1 = a.shape
    g0 = b.shape[1]
    hist = np.zeros((g1, g0 + 1), dtype=np.int64)
    for s in range(n_s):
        j = 0
        for k in range(g1):
            lim = a[s, k] + tol
            while j < g0 and b[s, j] <= lim:
                j += 1
            hist[k, j] += 1
    counts = np.empty((g1, g0), dtype=np.int64)
    for k in range(g1):
        c = 0
        for j in range(g0, 0, -1):
            c += hist[k, j]
            counts[k, j - 1] = c
    return counts


def _buckets(u: NDArray[np.float64], norms: NDArray[np.float64], c: float, grid, side: str) -> NDArray:
    """Index of the first grid anchor at which each outcome switches to 1."""
    dtype = np.int16 if grid.size < np.iinfo(np.int16).max else np.int32
    out = np.empty(u.shape, dtype=dtype)
    for i, r in enumerate(norms):
        prof = np.maximum(grid - c * r, 0.0) if side == "lo" else np.minimum(grid + c * r, 1.0)
        out[:, i] = np.searchsorted(prof, u[:, i], side="left")
    return out


@dataclass(frozen=True, eq=False)
class Breakpoints:
    """Switch-on grid indices of every (draw, site) for both profile sides.

    Independent of the bandwidth, so one instance serves a whole search.
    """

    p1_grid: NDArray[np.float64]
    p0_grid: NDArray[np.float64]
    s_draws: int
    treated: dict[str, NDArray] = field(repr=False)
    control: dict[str, NDArray] = field(repr=False)


def prepare_breakpoints(design: ExperimentDesign, draws: CrnDraws, p1_grid, p0_grid=None) -> Breakpoints:
    p1_grid = np.asarray(p1_grid, dtype=np.float64)
    p0_grid = p1_grid if p0_grid is None else np.asarray(p0_grid, dtype=np.float64)
    for g in (p1_grid, p0_grid):
        if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) < 0) or g[0] < 0 or g[-1] > 1:
            raise ConfigurationError("anchor grids must be sorted vectors inside [0, 1]")
    if draws.u1.shape[1] != design.n1 or draws.u0.shape[1] != design.n0:
        raise ConfigurationError("draws were generated for a different design size")
    c = design.lipschitz_c
    treated = {side: _buckets(draws.u1, design.norms1, c, p1_grid, side) for side in ("lo", "hi")}
    control = {side: _buckets(draws.u0, design.norms0, c, p0_grid, side) for side in ("lo", "hi")}
    return Breakpoints(p1_grid, p0_grid, draws.s_draws, treated, control)


def acceptance_counts(w: WeightVectors, bp: Breakpoints, branch: Branch) -> NDArray[np.int64]:
    """Number of draws in which the rule treats, for every (p1, p0) grid pair."""
    t_side, c_side = ("lo", "hi") if branch == TREAT_BETTER else ("hi", "lo")
    a = _bucket_sums(bp.treated[t_side], w.w1, bp.p1_grid.size)
    b = _bucket_sums(bp.control[c_side], w.w0, bp.p0_grid.size)
    return _accept_counts(a, b, TIE_TOL)


def acceptance_surface(
    design: ExperimentDesign,
    kernel: KernelSpec,
    theta: float,
    draws: CrnDraws,
    branch: Branch,
    p1_grid,
    p0_grid=None,
    breakpoints: Breakpoints | None = None,
) -> NDArray[np.float64]:
    """Simulated acceptance probability on a grid of anchors, rows indexed by p1."""
    bp = breakpoints or prepare_breakpoints(design, draws, p1_grid, p0_grid)
    return acceptance_counts(weights(design, kernel, theta), bp, branch) / bp.s_draws


def _branch_max(bp: Breakpoints, w: WeightVectors, branch: Branch):
    counts = acceptance_counts(w, bp, branch)
    gap = bp.p1_grid[:, None] - bp.p0_grid[None, :]
    s = bp.s_draws
    if branch == TREAT_BETTER:
        reg = np.where(gap > 0, gap * ((s - counts) / s), -np.inf)
    else:
        reg = np.where(gap < 0, -gap * (counts / s), -np.inf)
    k, j = np.unravel_index(int(np.argmax(reg)), reg.shape)
    if not np.isfinite(reg[k, j]):
        return None
    return RegretSurfacePoint(
        float(bp.p1_grid[k]), float(bp.p0_grid[j]), float(reg[k, j]), branch, float(counts[k, j] / s)
    )


def _local_grid(center: float, step: float, n_points: int) -> NDArray[np.float64]:
    lo, hi = max(center - step, 0.0), min(center + step, 1.0)
    return np.linspace(lo, hi, n_points)


def max_regret(
    design: ExperimentDesign,
    kernel: KernelSpec,
    theta: float,
    draws: CrnDraws,
    p_grid: PGridSpec = PGridSpec(),
    breakpoints: Breakpoints | None = None,
) -> MaxRegretEstimate:
    """Maximum simulated regret over both branches of the anchor grid."""
    theta = float(theta)
    if not theta > 0:
        raise DomainError(f"bandwidth must be positive, got {theta!r}")
    w = weights(design, kernel, theta)
    bp = breakpoints or prepare_breakpoints(design, draws, p_grid.points())
    candidates = [pt for pt in (_branch_max(bp, w, TREAT_BETTER), _branch_max(bp, w, CONTROL_BETTER)) if pt]
    if not candidates:
        raise ConfigurationError("anchor grid contains no pair with p1 != p0")
    best = max(candidates, key=lambda pt: pt.regret)  # first wins ties: treat-better
    if p_grid.refine:
        step = 1.0 / (p_grid.resolution - 1)
        local = prepare_breakpoints(
            design,
            draws,
            _local_grid(best.p1, step, p_grid.refine_points),
            _local_grid(best.p0, step, p_grid.refine_points),
        )
        polished = _branch_max(local, w, best.branch)
        if polished is not None and polished.regret > best.regret:
            best = polished
    gap = abs(best.p1 - best.p0)
    pi = best.acceptance
    se = gap * math.sqrt(max(pi * (1.0 - pi), 0.0) / draws.s_draws)
    return MaxRegretEstimate(theta, best.regret, best, se)
