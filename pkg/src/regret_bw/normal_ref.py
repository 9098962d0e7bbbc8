"""Maximum regret of the kernel plug-in rule when outcomes are Gaussian.

With Y ~ N(p, sigma^2) and the same Lipschitz parameter space (without the
[0, 1] box), the contrast estimator is normal with standard deviation
s(theta) = sigma * sqrt(sum w1^2 + sum w0^2) and worst-case bias
b(theta) = C * (sum w1 ||X1|| + sum w0 ||X0||), giving the maximum regret
s * eta(b / s) with eta(a) = max_{t>0} t * Phi(a - t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, linprog, minimize_scalar
from scipy.special import ndtr

from .bandwidth_opt import BandwidthSolution, CurvePoint, ThetaGridSpec
from .design_space import ExperimentDesign
from .errors import ConfigurationError, DomainError, NumericError
from .kernels import KernelSpec, weights

DEFAULT_SIGMA = 0.5
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(z):
    """Standard normal distribution function."""
    return ndtr(z)


def norm_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


@dataclass(frozen=True)
class NormalModelSpec:
    design: ExperimentDesign
    kernel: KernelSpec = field(default_factory=KernelSpec)
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class NormalRegretBreakdown:
    theta: float
    s_theta: float
    b_theta: float
    value: float
    eta_argument: float
    eta_argmax_t: float


def _eta_objective(t: float, a: float) -> float:
    return t * float(ndtr(a - t))


def eta(a: float) -> tuple[float, float]:
    """Return ``(max_t t * Phi(a - t), argmax)`` over t > 0.

    The objective is log-concave, so the maximizer is the unique root of
    Phi(a - t) - t * phi(t - a).  Falls back to a bounded golden-section
    search if the bracket does not straddle the root.
    """
    a = float(a)
    if not (a >= 0 and math.isfinite(a)):
        raise DomainError(f"eta is defined here for finite a >= 0, got {a!r}")

    def foc(t: float) -> float:
        return float(ndtr(a - t)) - t * float(norm_pdf(t - a))

    lo, hi = max(a - 10.0, 1e-8), a + 10.0
    if foc(lo) > 0 > foc(hi):
        t = brentq(foc, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    else:
        res = minimize_scalar(
            lambda t: -_eta_objective(t, a), bounds=(1e-12, a + 40.0), method="bounded",
            options={"xatol": 1e-12},
        )
        if not res.success:
            raise NumericError(f"eta maximization failed at a={a!r}")
        t = float(res.x)
    return _eta_objective(t, a), t


def scale_and_bias(spec: NormalModelSpec, theta: float) -> tuple[float, float]:
    d = spec.design
    w = weights(d, spec.kernel, theta)
    s = spec.sigma * math.sqrt(float(w.w1 @ w.w1 + w.w0 @ w.w0))
    b = d.lipschitz_c * float(w.w1 @ d.norms1 + w.w0 @ d.norms0)
    return s, b


def normal_max_regret(spec: NormalModelSpec, theta: float) -> NormalRegretBreakdown:
    s, b = scale_and_bias(spec, theta)
    value, t = eta(b / s)
    return NormalRegretBreakdown(float(theta), s, b, s * value, b / s, t)


# ---------------------------------------------------------------------------
# direct evaluation (cross-check)


def _worst_bias_lp(x: np.ndarray, w: np.ndarray, c: float) -> tuple[float, np.ndarray]:
    """max sum_i w_i v_i over Lipschitz v with v = 0 at the target, as a linear program."""
    n = x.shape[0]
    pts = np.vstack([np.zeros((1, x.shape[1])), x])
    rows, rhs = [], []
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            bound = c * float(np.linalg.norm(pts[i] - pts[j]))
            for sign in (1.0, -1.0):
                r = np.zeros(n + 1)
                r[i], r[j] = sign, -sign
                rows.append(r)
                rhs.append(bound)
    cost = -np.concatenate(([0.0], w))
    bounds = [(0.0, 0.0)] + [(None, None)] * n
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericError(f"worst-case bias program failed: {res.message}")
    return -float(res.fun), res.x[1:]


def _regret_direct(t: float, v1: np.ndarray, v0: np.ndarray, w1, w0, s: float) -> float:
    """Regret at anchors with gap t and site offsets v (p_i = anchor + v_i)."""
    if t == 0:
        return 0.0
    # anchors are arbitrary under translation invariance of the unbounded space
    p1_0, p0_0 = (t, 0.0) if t > 0 else (0.0, -t)
    mean_diff = float(w1 @ (p1_0 + v1) - w0 @ (p0_0 + v0))
    return abs(t) * float(ndtr(-math.copysign(1.0, t) * mean_diff / s))


def normal_max_regret_direct(spec: NormalModelSpec, theta: float, anchor_grid_resolution: int = 401) -> float:
    """Maximum regret from explicit worst-case parameter vectors, maximized over the gap.

    The worst-case offsets are found by linear programming over the pairwise
    Lipschitz constraints rather than taken from the closed form, both signs
    of the anchor gap are searched, and the best grid gap is polished with a
    bounded scalar search.
    """
    if anchor_grid_resolution < 3:
        raise ConfigurationError("anchor grid resolution must be >= 3")
    d = spec.design
    w = weights(d, spec.kernel, theta)
    s = spec.sigma * math.sqrt(float(w.w1 @ w.w1 + w.w0 @ w.w0))
    b1, v1 = _worst_bias_lp(d.x1, w.w1, d.lipschitz_c)
    b0, v0 = _worst_bias_lp(d.x0, w.w0, d.lipschitz_c)

    t_max = b1 + b0 + 12.0 * s
    best = 0.0
    for sign in (1.0, -1.0):
        # treat-better pushes treated sites down and control sites up; mirrored otherwise
        o1, o0 = (-sign * v1, sign * v0)
        f = lambda t: _regret_direct(sign * t, o1, o0, w.w1, w.w0, s)  # noqa: E731
        grid = np.linspace(0.0, t_max, anchor_grid_resolution)[1:]
        vals = np.array([f(t) for t in grid])
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = max(best, float(vals[k]), -float(res.fun))
    return best


def normal_optimal_bandwidth(
    spec: NormalModelSpec, theta_grid: ThetaGridSpec | Sequence[float], refine_rounds: int = 3, refine_points: int = 21
) -> BandwidthSolution:
    """Minimize the closed-form maximum regret over a bandwidth grid, then refine locally."""
    if not isinstance(theta_grid, ThetaGridSpec):
        theta_grid = ThetaGridSpec.from_points(theta_grid)
    thetas = [float(t) for t in theta_grid.points()]
    evals = {t: normal_max_regret(spec, t) for t in thetas}

    coarse = np.array(thetas)
    k = int(np.argmin([evals[t].value for t in thetas]))
    lo, hi = coarse[max(k - 1, 0)], coarse[min(k + 1, coarse.size - 1)]
    for _ in range(refine_rounds):
        if hi <= lo:
            break
        pts = [float(t) for t in np.geomspace(lo, hi, refine_points)]
        for t in pts:
            if t not in evals:
                evals[t] = normal_max_regret(spec, t)
        vals = np.array([evals[t].value for t in pts])
        j = int(np.argmin(vals))
        lo, hi = pts[max(j - 1, 0)], pts[min(j + 1, len(pts) - 1)]

    ordered = sorted(evals)
    curve = [CurvePoint(t, evals[t].value, 0.0) for t in ordered]
    star = min(ordered, key=lambda t: (evals[t].value, t))
    return BandwidthSolution(
        theta_star=star,
        plateau=(star, star),
        min_regret=evals[star].value,
        curve=curve,
        method="normal-closed-form",
        theta_argmin=star,
        breakdown=[evals[t] for t in ordered],
    )
