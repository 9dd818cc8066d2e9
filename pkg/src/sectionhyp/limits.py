"""The limiting ratio equation, the lower ratio bound, and the interval nest."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath

from ._solve import bracketed_newton
from .errors import BracketError, ContractError, DomainError
from .precision import PrecisionContext, default_context, pow2, to_decimal


def _series_tol(ctx: PrecisionContext):
    return pow2(-(ctx.bits + 8))


def _psi_series(lam, tol):
    """sum_{j>=1} lam^j / (1 - lam^(j+1)) and its derivative, truncated at tol."""
    total = mpmath.mpf(0)
    deriv = mpmath.mpf(0)
    one_minus = 1 - lam
    j = 1
    lj = lam  # lam^j
    while True:
        lj1 = lj * lam
        den = 1 - lj1
        total += lj / den
        deriv += (j * (lj / lam) * den + (j + 1) * lj1 * lj / lam) / (den * den)
        if lj1 / (one_minus * one_minus) * (j + 2) <= tol:
            return total, deriv
        lj = lj1
        j += 1


def master_gap(lam, ctx: PrecisionContext | None = None):
    """G(lam) = 1/lam - 2/(1-lam) - sum_{j>=1} lam^j/(1-lam^(j+1))."""
    ctx = ctx or default_context()
    with ctx.workprec():
        lam = mpmath.mpf(lam)
        if not 0 < lam < 1:
            raise DomainError("lam must lie in (0, 1)")
        psi, _ = _psi_series(lam, _series_tol(ctx))
        return 1 / lam - 2 / (1 - lam) - psi


def _master_gap_derivative(lam, ctx):
    _, dpsi = _psi_series(lam, _series_tol(ctx))
    return -1 / lam ** 2 - 2 / (1 - lam) ** 2 - dpsi


class MasterSolution(NamedTuple):
    lam: mpmath.mpf
    gap_residual: mpmath.mpf


def solve_master(ctx: PrecisionContext | None = None) -> MasterSolution:
    """Unique root of G on [0.28, 1/3]: bisection first, Newton only to polish."""
    ctx = ctx or default_context()
    with ctx.workprec():
        lo, hi = mpmath.mpf("0.28"), mpmath.mpf(1) / 3
        glo, ghi = master_gap(lo, ctx), master_gap(hi, ctx)
        if not (glo > 0 > ghi):
            raise BracketError("master gap does not change sign on [0.28, 1/3]")
        while hi - lo > mpmath.mpf(2) ** -40:
            mid = (lo + hi) / 2
            if master_gap(mid, ctx) > 0:
                lo = mid
            else:
                hi = mid
        lam = bracketed_newton(lambda x: master_gap(x, ctx), lambda x: _master_gap_derivative(x, ctx),
                               lo, hi, rtol=ctx.eps_root * pow2(-16), max_iter=ctx.max_iter)
        return MasterSolution(+lam, abs(master_gap(lam, ctx)))


def _l0_equation(xi):
    # -1/xi - 2/(xi+1) - 11/16, increasing in xi on (-1, 0)
    return -1 / xi - 2 / (xi + 1) - mpmath.mpf(11) / 16


def lower_bound_l0(ctx: PrecisionContext | None = None) -> mpmath.mpf:
    """|xi*| where xi* in (-1, 0) solves -1/xi = 2/(xi+1) + 11/16."""
    ctx = ctx or default_context()
    with ctx.workprec():
        xi = bracketed_newton(_l0_equation, lambda x: 1 / x ** 2 + 2 / (x + 1) ** 2,
                              mpmath.mpf("-0.9"), mpmath.mpf("-0.1"),
                              rtol=ctx.eps_root * pow2(-16), max_iter=ctx.max_iter)
        return -xi


def l0_residual(ctx: PrecisionContext | None = None):
    ctx = ctx or default_context()
    with ctx.workprec():
        return abs(_l0_equation(-lower_bound_l0(ctx)))


class SumBound(NamedTuple):
    partial: Fraction
    tail_bound: Fraction
    terms: int
    holds: bool


def reciprocal_power_sum_bound(terms: int = 12) -> SumBound:
    """Exact check that sum_{j>=1} 1/(3^j - 1) < 11/16.

    The tail after ``terms`` terms is at most 3^-terms because
    1/(3^j - 1) <= (3/2) 3^-j.
    """
    partial = sum(Fraction(1, 3 ** j - 1) for j in range(1, terms + 1))
    tail = Fraction(3, 2) * Fraction(1, 3 ** terms) * Fraction(1, 2)
    return SumBound(partial, tail, terms, partial + tail < Fraction(11, 16))


@dataclass(frozen=True)
class IntervalNest:
    l: list
    r: list
    widths: list
    converged_at: int | None = None

    def to_dict(self, bits: int) -> dict:
        return {"l": [to_decimal(x, bits) for x in self.l], "r": [to_decimal(x, bits) for x in self.r]}


def _phi_sum(r, x, tol):
    """sum_{j>=1} 1/(x + r^-j) and its x-derivative, with a geometric tail bound."""
    total = mpmath.mpf(0)
    deriv = mpmath.mpf(0)
    rj = r
    while True:
        d = x * rj + 1  # (x + r^-j) * r^j
        total += rj / d
        deriv -= (rj / d) ** 2
        # remaining terms are at most r^(j+1) / ((1 - r^(j+1)) (1 - r))
        rn = rj * r
        if rn / ((1 - rn) * (1 - r)) <= tol:
            return total, deriv
        rj = rn


def _nest_solve(r, ctx, lo, hi):
    """x in (-1, 0) with Phi(x) = phi(r, x), Phi(x) = -1/x - 2/(x+1)."""
    tol = _series_tol(ctx)

    def h(x):
        return -1 / x - 2 / (x + 1) - _phi_sum(r, x, tol)[0]

    def dh(x):
        return 1 / x ** 2 + 2 / (x + 1) ** 2 - _phi_sum(r, x, tol)[1]

    return bracketed_newton(h, dh, lo, hi, rtol=ctx.eps_root * pow2(-16), max_iter=ctx.max_iter)


def interval_nest(i_max: int, ctx: PrecisionContext | None = None) -> IntervalNest:
    """Nested intervals [l_i, r_i] shrinking onto the limiting ratio.

    Starts from l_0 = lower_bound_l0 and r_0 = 1/3.  Iteration stops early
    once the width drops below eps_root * l_i, because further steps only
    resolve rounding noise.
    """
    if i_max < 1:
        raise DomainError("i_max must be at least 1")
    ctx = ctx or default_context()
    with ctx.workprec():
        l = [lower_bound_l0(ctx)]
        r = [mpmath.mpf(1) / 3]
        widths = [r[0] - l[0]]
        lo, hi = mpmath.mpf("-0.5"), mpmath.mpf("-0.2")
        converged = None
        for i in range(i_max):
            ln = -_nest_solve(r[i], ctx, lo, hi)
            rn = -_nest_solve(l[i], ctx, lo, hi)
            w = rn - ln
            floor = ctx.eps_root * ln
            if w > floor:
                if not (l[i] < ln < rn < r[i]):
                    raise ContractError(f"nest lost its ordering at step {i + 1}")
                if not w < widths[i] / 2:
                    raise ContractError(f"nest failed to halve at step {i + 1}")
            l.append(ln)
            r.append(rn)
            widths.append(w)
            if w <= floor:
                converged = i + 1
                break
        return IntervalNest(l, r, widths, converged)


def limits_report(i_max: int = 20, ctx: PrecisionContext | None = None) -> dict:
    ctx = ctx or default_context()
    sol = solve_master(ctx)
    nest = interval_nest(i_max, ctx)
    return {
        "lambda": to_decimal(sol.lam, ctx.bits),
        "gap_residual": to_decimal(sol.gap_residual, ctx.bits),
        "nest": nest.to_dict(ctx.bits),
        "l0": to_decimal(lower_bound_l0(ctx), ctx.bits),
    }


def limits_report_json(i_max: int = 20, ctx: PrecisionContext | None = None) -> str:
    return json.dumps(limits_report(i_max, ctx), indent=2)
