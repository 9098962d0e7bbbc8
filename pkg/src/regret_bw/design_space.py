"""Experimental design, Lipschitz parameter space and worst-case profiles.

The target point is always the origin: covariates are stored already
translated, and index 0 of every probability vector refers to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, DomainError, InvalidDesignError

# Absolute slack for the pairwise Lipschitz check (duplicate covariates
# force equal probabilities, which rounding can violate by a few ulps).
MEMBERSHIP_TOL = 1e-12


def _as_covariates(x: ArrayLike, arm: str) -> NDArray[np.float64]:
    arr = np.array(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidDesignError(f"{arm} covariates must be a vector or a matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1:
        raise InvalidDesignError(f"{arm} arm is empty")
    if arr.shape[1] < 1:
        raise InvalidDesignError(f"{arm} covariates have dimension 0")
    if not np.all(np.isfinite(arr)):
        raise InvalidDesignError(f"{arm} covariates contain non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ExperimentDesign:
    """Treated/control covariates (target at the origin) and Lipschitz constant.

    ``x1`` and ``x0`` are stored as ``(n, d_x)`` float arrays; one-dimensional
    input is promoted to a single column.
    """

    x1: NDArray[np.float64]
    x0: NDArray[np.float64]
    lipschitz_c: float

    def __post_init__(self) -> None:
        x1 = _as_covariates(self.x1, "treated")
        x0 = _as_covariates(self.x0, "control")
        if x1.shape[1] != x0.shape[1]:
            raise InvalidDesignError(
                f"covariate dimension mismatch: treated d_x={x1.shape[1]}, control d_x={x0.shape[1]}"
            )
        c = float(self.lipschitz_c)
        if not np.isfinite(c) or c < 0:
            raise InvalidDesignError(f"lipschitz_c must be finite and >= 0, got {self.lipschitz_c!r}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "lipschitz_c", c)
        n1 = np.linalg.norm(x1, axis=1)
        n0 = np.linalg.norm(x0, axis=1)
        n1.setflags(write=False)
        n0.setflags(write=False)
        object.__setattr__(self, "_norms1", n1)
        object.__setattr__(self, "_norms0", n0)

    @property
    def n1(self) -> int:
        return self.x1.shape[0]

    @property
    def n0(self) -> int:
        return self.x0.shape[0]

    @property
    def dim(self) -> int:
        return self.x1.shape[1]

    @property
    def norms1(self) -> NDArray[np.float64]:
        """Euclidean distance of each treated covariate to the target."""
        return self._norms1

    @property
    def norms0(self) -> NDArray[np.float64]:
        return self._norms0

    def with_c(self, lipschitz_c: float) -> "ExperimentDesign":
        return ExperimentDesign(self.x1, self.x0, lipschitz_c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExperimentDesign):
            return NotImplemented
        return (
            self.lipschitz_c == other.lipschitz_c
            and np.array_equal(self.x1, other.x1)
            and np.array_equal(self.x0, other.x0)
        )

    __hash__ = None  # type: ignore[assignment]


def grid_points(n: int) -> NDArray[np.float64]:
    """Equidistant points -1 + 2(i-1)/(n-1), i = 1..n."""
    if n < 2:
        raise InvalidDesignError(f"grid needs at least 2 points, got n={n}")
    return -1.0 + 2.0 * np.arange(n) / (n - 1)


def make_grid_design(n1: int, n0: int, lipschitz_c: float) -> ExperimentDesign:
    """One-dimensional design with both arms on an equidistant grid over [-1, 1]."""
    return ExperimentDesign(grid_points(n1), grid_points(n0), lipschitz_c)


@dataclass(frozen=True, eq=False)
class WorstCaseProfiles:
    """Clipped profiles p -/+ C||X_i|| for both arms; entry 0 is the anchor."""

    p1_lo: NDArray[np.float64]
    p1_hi: NDArray[np.float64]
    p0_lo: NDArray[np.float64]
    p0_hi: NDArray[np.float64]

    def minus_config(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Treated pushed down, control pushed up (regret when treatment is better)."""
        return self.p1_lo, self.p0_hi

    def plus_config(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.p1_hi, self.p0_lo


def _check_anchor(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def lower_profile(p: float, norms: NDArray[np.float64], c: float) -> NDArray[np.float64]:
    return np.concatenate(([p], np.maximum(p - c * norms, 0.0)))


def upper_profile(p: float, norms: NDArray[np.float64], c: float) -> NDArray[np.float64]:
    return np.concatenate(([p], np.minimum(p + c * norms, 1.0)))


def worst_case_profiles(design: ExperimentDesign, p1: float, p0: float) -> WorstCaseProfiles:
    p1 = _check_anchor(p1, "p1")
    p0 = _check_anchor(p0, "p0")
    c = design.lipschitz_c
    return WorstCaseProfiles(
        p1_lo=lower_profile(p1, design.norms1, c),
        p1_hi=upper_profile(p1, design.norms1, c),
        p0_lo=lower_profile(p0, design.norms0, c),
        p0_hi=upper_profile(p0, design.norms0, c),
    )


def _arm_ok(p: NDArray[np.float64], x: NDArray[np.float64], c: float) -> bool:
    if np.any(p < 0.0) or np.any(p > 1.0):
        return False
    pts = np.vstack([np.zeros((1, x.shape[1])), x])
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    gaps = np.abs(p[:, None] - p[None, :])
    return bool(np.all(gaps <= c * dist + MEMBERSHIP_TOL))


def membership_check(design: ExperimentDesign, p1_vec: ArrayLike, p0_vec: ArrayLike) -> bool:
    """True iff both full vectors lie in [0,1] and satisfy every pairwise Lipschitz bound."""
    p1 = np.asarray(p1_vec, dtype=np.float64)
    p0 = np.asarray(p0_vec, dtype=np.float64)
    if p1.shape != (design.n1 + 1,):
        raise DimensionError(f"treated vector must have length {design.n1 + 1}, got {p1.shape}")
    if p0.shape != (design.n0 + 1,):
        raise DimensionError(f"control vector must have length {design.n0 + 1}, got {p0.shape}")
    c = design.lipschitz_c
    return _arm_ok(p1, design.x1, c) and _arm_ok(p0, design.x0, c)
