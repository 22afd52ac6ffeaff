"""Golden-section search for one-dimensional unimodal maximization."""

from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi]; returns (argmax, max).

    Convergence is to an interval of width ``tol`` (or ``max_iter``
    shrink steps, whichever comes first).  Endpoints are compared against
    the interior result, so boundary maxima are returned exactly.
    """
    if hi < lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    a, b = lo, hi
    width = b - a
    if width <= tol:
        x = 0.5 * (a + b)
        return _best((a, f(a)), (b, f(b)), (x, f(x)))

    c = a + INV_PHI2 * width
    d = a + INV_PHI * width
    fc, fd = f(c), f(d)
    it = 0
    while width > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            width = b - a
            c = a + INV_PHI2 * width
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            width = b - a
            d = a + INV_PHI * width
            fd = f(d)
        it += 1

    x = c if fc >= fd else d
    fx = max(fc, fd)
    return _best((lo, f(lo)), (hi, f(hi)), (x, fx))


def _best(*pairs: tuple[float, float]) -> tuple[float, float]:
    best = pairs[0]
    for p in pairs[1:]:
        if p[1] > best[1]:
            best = p
    return best
