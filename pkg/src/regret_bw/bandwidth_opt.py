"""Outer minimization of the maximum regret over the bandwidth.

With finite S the binary-outcome objective is a step function of theta, so
the search stays on the grid and reports the plateau of near-minimal values
instead of a refined point.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .design_space import ExperimentDesign, make_grid_design
from .errors import ConfigurationError, DegenerateBandwidthError, NoFeasibleBandwidthError
from .kernels import KernelSpec
from .regret_mc import CrnDraws, PGridSpec, make_draws, max_regret, prepare_breakpoints

PLATEAU_TOL_ABS = 1e-4
PLATEAU_Z = 1.0
THREADS_ENV = "REGRET_BW_THREADS"

CrnScope = Literal["global", "per-theta"]

# reference bandwidth table: C values, total sample sizes, theta grid
TABLE1_C = (0.1, 0.2, 0.3)
TABLE1_N = (10, 50, 100, 200)
TABLE1_THETA = (0.05, 2.0, 60)


@dataclass(frozen=True)
class ThetaGridSpec:
    theta_min: float
    theta_max: float
    count: int = 60
    spacing: Literal["log", "linear"] = "log"
    explicit: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.explicit is not None:
            return
        if not (0 < self.theta_min < self.theta_max and math.isfinite(self.theta_max)):
            raise ConfigurationError(
                f"theta grid needs 0 < theta_min < theta_max, got [{self.theta_min}, {self.theta_max}]"
            )
        if self.count < 2:
            raise ConfigurationError(f"theta grid needs at least 2 points, got {self.count}")
        if self.spacing not in ("log", "linear"):
            raise ConfigurationError(f"unknown theta spacing {self.spacing!r}")

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "ThetaGridSpec":
        pts = tuple(sorted(float(t) for t in points))
        if not pts or pts[0] <= 0:
            raise ConfigurationError("explicit theta grid must be nonempty and positive")
        return cls(pts[0], pts[-1], len(pts), "log", pts)

    @classmethod
    def default_for(cls, design: ExperimentDesign, count: int = 60, spacing: str = "log") -> "ThetaGridSpec":
        """Half the smallest nonzero covariate distance to the target up to 4x the covariate diameter."""
        norms = np.concatenate([design.norms1, design.norms0])
        nz = norms[norms > 0]
        pts = np.vstack([design.x1, design.x0, np.zeros((1, design.dim))])
        diam = float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)))
        if nz.size == 0 or diam == 0:
            raise ConfigurationError("all covariates sit at the target; no bandwidth scale to search")
        return cls(0.5 * float(nz.min()), 4.0 * diam, count, spacing)

    def points(self) -> np.ndarray:
        if self.explicit is not None:
            return np.array(self.explicit)
        if self.spacing == "log":
            return np.geomspace(self.theta_min, self.theta_max, self.count)
        return np.linspace(self.theta_min, self.theta_max, self.count)


@dataclass(frozen=True)
class CurvePoint:
    theta: float
    regret: float
    se: float


@dataclass(frozen=True)
class BandwidthSolution:
    """Minimizing bandwidth, its plateau and the full regret curve.

    ``theta_star`` is the curve point closest (in log scale) to the middle
    of the plateau; ``theta_argmin`` is the first exact grid minimizer.
    """

    theta_star: float
    plateau: tuple[float, float]
    min_regret: float
    curve: list[CurvePoint]
    method: Literal["binary-mc", "normal-closed-form"]
    theta_argmin: float
    plateau_tolerance: float = 0.0
    breakdown: list = field(default_factory=list, repr=False)


def plateau_detect(
    curve: Sequence[CurvePoint], tol_abs: float = PLATEAU_TOL_ABS, z: float = PLATEAU_Z
) -> tuple[float, float]:
    """Largest contiguous theta range around the argmin whose regret is near the minimum.

    A point belongs when its regret is within max(tol_abs, z * se) of the minimum.
    """
    if not curve:
        raise ConfigurationError("empty regret curve")
    thetas = np.array([c.theta for c in curve])
    if np.any(np.diff(thetas) <= 0):
        raise ConfigurationError("regret curve must be sorted by strictly increasing theta")
    reg = np.array([c.regret for c in curve])
    se = np.array([c.se for c in curve])
    k = int(np.argmin(reg))
    ok = reg <= reg[k] + np.maximum(tol_abs, z * se)
    lo = hi = k
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    while hi < len(curve) - 1 and ok[hi + 1]:
        hi += 1
    return float(thetas[lo]), float(thetas[hi])


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _ordered_map(fn, items: list, threads: int | None = None) -> list:
    """Map preserving input order; results never depend on completion order."""
    threads = worker_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def regret_curve(
    design: ExperimentDesign,
    kernel: KernelSpec,
    draws: CrnDraws,
    p_grid: PGridSpec,
    theta_grid: ThetaGridSpec,
    crn_scope: CrnScope = "global",
    threads: int | None = None,
) -> list[CurvePoint | None]:
    """Maximum regret at each grid bandwidth; None where the kernel weights are degenerate."""
    thetas = list(theta_grid.points())
    if crn_scope == "global":
        bp = prepare_breakpoints(design, draws, p_grid.points())

        def one(item):
            _, theta = item
            try:
                est = max_regret(design, kernel, theta, draws, p_grid, breakpoints=bp)
            except DegenerateBandwidthError:
                return None
            return CurvePoint(float(theta), est.value, est.mc_standard_error)

    elif crn_scope == "per-theta":

        def one(item):
            j, theta = item
            local = make_draws(draws.seed, draws.s_draws, design, stream=j)
            try:
                est = max_regret(design, kernel, theta, local, p_grid)
            except DegenerateBandwidthError:
                return None
            return CurvePoint(float(theta), est.value, est.mc_standard_error)

    else:
        raise ConfigurationError(f"unknown CRN scope {crn_scope!r}")
    return _ordered_map(one, list(enumerate(thetas)), threads)


def _log_middle(curve: list[CurvePoint], plateau: tuple[float, float]) -> float:
    mid = 0.5 * (math.log(plateau[0]) + math.log(plateau[1]))
    inside = [c.theta for c in curve if plateau[0] <= c.theta <= plateau[1]]
    return min(inside, key=lambda t: (abs(math.log(t) - mid), t))


def optimize_bandwidth(
    design: ExperimentDesign,
    kernel: KernelSpec,
    draws: CrnDraws,
    p_grid: PGridSpec = PGridSpec(),
    theta_grid: ThetaGridSpec | None = None,
    crn_scope: CrnScope = "global",
    plateau_tol: float = PLATEAU_TOL_ABS,
    plateau_z: float | None = None,
    threads: int | None = None,
) -> BandwidthSolution:
    """Grid minimizer of the simulated maximum regret, with its plateau.

    ``plateau_z`` defaults to 0 under the global CRN scope (identical rules
    give bit-identical regret, so noise cannot split a plateau) and to
    ``PLATEAU_Z`` when draws are regenerated per bandwidth.
    """
    theta_grid = theta_grid or ThetaGridSpec.default_for(design)
    if plateau_z is None:
        plateau_z = 0.0 if crn_scope == "global" else PLATEAU_Z
    raw = regret_curve(design, kernel, draws, p_grid, theta_grid, crn_scope, threads)
    curve = [c for c in raw if c is not None]
    if not curve:
        raise NoFeasibleBandwidthError("kernel weights are degenerate at every grid bandwidth")
    plateau = plateau_detect(curve, plateau_tol, plateau_z)
    argmin = min(curve, key=lambda c: c.regret)  # first on ties
    return BandwidthSolution(
        theta_star=_log_middle(curve, plateau),
        plateau=plateau,
        min_regret=argmin.regret,
        curve=curve,
        method="binary-mc",
        theta_argmin=argmin.theta,
        plateau_tolerance=plateau_tol,
    )


@dataclass(frozen=True)
class ComparisonRow:
    lipschitz_c: float
    n1: int
    n0: int
    binary: BandwidthSolution
    normal: BandwidthSolution

    @property
    def n(self) -> int:
        return self.n1 + self.n0

    @property
    def divergent(self) -> bool:
        """The two bandwidth choices differ by more than a factor of 1.5."""
        return abs(math.log(self.normal.theta_star / self.binary.theta_star)) > math.log(1.5)


def compare_binary_normal(
    design: ExperimentDesign,
    kernel: KernelSpec,
    draws: CrnDraws,
    p_grid: PGridSpec,
    theta_grid: ThetaGridSpec,
    sigma: float = 0.5,
    crn_scope: CrnScope = "global",
    threads: int | None = None,
) -> ComparisonRow:
    from .normal_ref import NormalModelSpec, normal_optimal_bandwidth

    binary = optimize_bandwidth(design, kernel, draws, p_grid, theta_grid, crn_scope, threads=threads)
    normal = normal_optimal_bandwidth(NormalModelSpec(design, kernel, sigma), theta_grid)
    return ComparisonRow(design.lipschitz_c, design.n1, design.n0, binary, normal)


def table1(
    s_draws: int = 50_000,
    seed: int = 0,
    p_grid: PGridSpec = PGridSpec(),
    theta_grid: ThetaGridSpec | None = None,
    kernel: KernelSpec = KernelSpec(),
    sigma: float = 0.5,
    cs: Sequence[float] = TABLE1_C,
    ns: Sequence[int] = TABLE1_N,
    crn_scope: CrnScope = "global",
    threads: int | None = None,
) -> list[ComparisonRow]:
    """Binary vs normal bandwidth choices on the equidistant design, n1 = n0 = n/2.

    Rows come back in (C, n) order whatever the scheduling.  Draws depend on
    the seed and arm sizes only, so cells with the same n share them.
    """
    theta_grid = theta_grid or ThetaGridSpec(*TABLE1_THETA)
    for n in ns:
        if n % 2 or n < 4:
            raise ConfigurationError(f"table sample sizes must be even and >= 4, got {n}")
    cells = [(c, n) for c in cs for n in ns]

    def one(cell):
        c, n = cell
        design = make_grid_design(n // 2, n // 2, c)
        draws = make_draws(seed, s_draws, design)
        return compare_binary_normal(design, kernel, draws, p_grid, theta_grid, sigma, crn_scope, threads=1)

    return _ordered_map(one, cells, threads)
