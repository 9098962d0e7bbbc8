"""Independent reference computations used only by the tests.

Nothing here imports the engines it checks: enumeration is plain
itertools, the kernel weights are recomputed from scalar exp calls and
the normal distribution function comes from mpmath.
"""

import itertools
import math

import mpmath


def gaussian_weights(xs, theta):
    raw = [math.exp(-0.5 * (x / theta) ** 2) for x in xs]
    tot = sum(raw)
    return [r / tot for r in raw]


def naive_acceptance(w1, w0, p1, p0, tie=1e-12):
    """Sum over all 2^(n1+n0) outcome vectors, one at a time."""
    total = 0.0
    for y1 in itertools.product((0, 1), repeat=len(w1)):
        for y0 in itertools.product((0, 1), repeat=len(w0)):
            stat = sum(a * b for a, b in zip(w1, y1)) - sum(a * b for a, b in zip(w0, y0))
            if stat < -tie:
                continue
            pr = 1.0
            for p, y in zip(p1, y1):
                pr *= p if y else 1 - p
            for p, y in zip(p0, y0):
                pr *= p if y else 1 - p
            total += pr
    return total


def mp_norm_cdf(z):
    with mpmath.workdps(40):
        return float(mpmath.ncdf(z))


def eta_fine_grid(a, t_max=10.0, steps=200_000):
    """Coarse scan of t * Phi(a - t) followed by a local fine scan."""
    best_t, best_v = 0.0, 0.0
    for i in range(1, steps + 1):
        t = t_max * i / steps
        v = t * 0.5 * math.erfc(-(a - t) / math.sqrt(2))
        if v > best_v:
            best_t, best_v = t, v
    h = t_max / steps
    for i in range(-2000, 2001):
        t = best_t + h * i / 1000
        if t <= 0:
            continue
        v = t * 0.5 * math.erfc(-(a - t) / math.sqrt(2))
        if v > best_v:
            best_t, best_v = t, v
    return best_v, best_t
