"""Bracketed scalar root finding shared by the numeric modules."""
from __future__ import annotations

from typing import Callable

import mpmath

from .errors import BracketError, ConvergenceError


def bracketed_newton(f: Callable, df: Callable, lo, hi, rtol, atol=0, max_iter: int = 10_000,
                     flo=None, fhi=None):
    """Root of ``f`` in ``[lo, hi]`` by Newton steps kept inside a shrinking bracket.

    Any Newton step that leaves the bracket (or a vanishing derivative) is
    replaced by bisection.  Stops when a step is below ``rtol*|x| + atol``.
    """
    flo = f(lo) if flo is None else flo
    fhi = f(hi) if fhi is None else fhi
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise BracketError(f"no sign change on [{mpmath.nstr(lo, 8)}, {mpmath.nstr(hi, 8)}]")
    a, b = (lo, hi) if lo < hi else (hi, lo)
    fa = flo if lo < hi else fhi
    x = (a + b) / 2
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0:
            return x
        if (fx < 0) == (fa < 0):
            a, fa = x, fx
        else:
            b = x
        d = df(x)
        xn = x - fx / d if d else None
        if xn is None or not (a < xn < b):
            xn = (a + b) / 2
        tol = rtol * abs(xn) + atol
        if abs(xn - x) <= tol or (b - a) <= tol:
            return xn
        x = xn
    raise ConvergenceError("bracketed Newton did not converge", bracket=(a, b))


def bisect(f: Callable, lo, hi, width, max_iter: int = 10_000, flo=None):
    """Plain bisection down to ``width``; returns the final bracket."""
    flo = f(lo) if flo is None else flo
    for _ in range(max_iter):
        if hi - lo <= width:
            return lo, hi
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid, mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise ConvergenceError("bisection did not converge", bracket=(lo, hi))
