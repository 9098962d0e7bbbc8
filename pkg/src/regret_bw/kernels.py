"""Nonnegative kernels and the kernel-regression plug-in rule.

The rule treats when the difference of the two Nadaraya-Watson fits at the
target is >= 0.  Comparisons use ``TIE_TOL`` so that contrasts that are
exactly zero in real arithmetic (mirror-image outcome patterns under a
symmetric design, say) treat regardless of summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .design_space import ExperimentDesign
from .errors import ConfigurationError, DegenerateBandwidthError, DimensionError, DomainError

KernelFamily = Literal["gaussian", "uniform", "epanechnikov"]
KERNEL_FAMILIES: tuple[str, ...] = ("gaussian", "uniform", "epanechnikov")

# Ties are decided in favour of treatment: statistic >= -TIE_TOL.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, optionally multiplied by a positive constant.

    The Gaussian omits its normalizing constant; any ``scale`` cancels in
    the weights.
    """

    family: KernelFamily = "gaussian"
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in KERNEL_FAMILIES:
            raise ConfigurationError(
                f"unknown kernel {self.family!r}; expected one of {', '.join(KERNEL_FAMILIES)}"
            )
        if not self.scale > 0:
            raise ConfigurationError(f"kernel scale must be positive, got {self.scale!r}")

    def __call__(self, u: ArrayLike) -> NDArray[np.float64]:
        """Evaluate K at the rows of ``u`` (a trailing axis of length d_x)."""
        u = np.asarray(u, dtype=np.float64)
        sq = np.sum(u * u, axis=-1)
        if self.family == "gaussian":
            k = np.exp(-0.5 * sq)
        elif self.family == "uniform":
            k = (sq <= 1.0).astype(np.float64)
        else:
            k = np.maximum(1.0 - sq, 0.0)
        return self.scale * k


@dataclass(frozen=True)
class WeightVectors:
    w1: NDArray[np.float64]
    w0: NDArray[np.float64]
    theta: float


def _arm_weights(kernel: KernelSpec, x: NDArray[np.float64], theta: float, arm: str) -> NDArray[np.float64]:
    if kernel.family == "gaussian":
        # log-domain: raw values underflow once ||x/theta|| exceeds ~38
        logk = -0.5 * np.sum((x / theta) ** 2, axis=1)
        k = np.exp(logk - logk.max())
    else:
        k = kernel(x / theta)
    total = k.sum()
    if not total > 0:
        raise DegenerateBandwidthError(
            f"kernel {kernel.family!r} puts zero mass on the {arm} arm at theta={theta:g}", arm=arm
        )
    return k / total


def weights(design: ExperimentDesign, kernel: KernelSpec, theta: float) -> WeightVectors:
    """Normalized kernel-regression weights of each arm at the target point."""
    theta = float(theta)
    if not (theta > 0 and np.isfinite(theta)):
        raise DomainError(f"bandwidth must be positive and finite, got {theta!r}")
    w1 = _arm_weights(kernel, design.x1, theta, "treated")
    w0 = _arm_weights(kernel, design.x0, theta, "control")
    w1.setflags(write=False)
    w0.setflags(write=False)
    return WeightVectors(w1, w0, theta)


def decision_statistic(w: WeightVectors, y1: ArrayLike, y0: ArrayLike) -> float:
    """Weighted treated mean minus weighted control mean."""
    y1 = np.asarray(y1, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    if y1.shape != w.w1.shape or y0.shape != w.w0.shape:
        raise DimensionError(
            f"outcome lengths ({y1.shape}, {y0.shape}) do not match weights ({w.w1.shape}, {w.w0.shape})"
        )
    if not (np.all((y1 == 0) | (y1 == 1)) and np.all((y0 == 0) | (y0 == 1))):
        raise DomainError("outcomes must be 0/1")
    return float(w.w1 @ y1 - w.w0 @ y0)


def treats(statistic: float | NDArray[np.float64]) -> bool | NDArray[np.bool_]:
    """The plug-in rule: treat iff the statistic is >= 0 (up to ``TIE_TOL``)."""
    return statistic >= -TIE_TOL
