"""Sturm-chain root counting, isolation, refinement and hyperbolicity verdicts.

Exact polynomials use integer pseudo-remainder chains, so every sign is
certified.  Float polynomials use remainder chains in which a coefficient
smaller than ``eps_sign`` times the magnitude of the terms that produced it
is treated as zero; a leading coefficient lost that way makes the count
undecidable and raises :class:`IndeterminateError`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath

from ._solve import bracketed_newton
from .errors import DomainError, IndeterminateError
from .poly import EXACT, Poly
from .precision import PrecisionContext, default_context


class Status(str, enum.Enum):
    HYPERBOLIC = "Hyperbolic"
    NOT_HYPERBOLIC = "NotHyperbolic"
    BOUNDARY = "Boundary"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RootInterval:
    lo: object
    hi: object
    multiplicity_hint: int = 1
    certified: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError("RootInterval needs lo <= hi")

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class HyperbolicityVerdict:
    status: Status
    distinct_real_roots: int
    real_roots_with_multiplicity: int | None = None
    witness: RootInterval | None = None
    section: int | None = None
    indeterminate_index: int | None = None

    @property
    def is_real_rooted(self) -> bool:
        return self.status in (Status.HYPERBOLIC, Status.BOUNDARY)


class RefinedRoot(NamedTuple):
    root: object
    residual: object


# ---------------------------------------------------------------------------
# chain construction

def _integer_primitive(coeffs) -> list[int]:
    """Scale rational coefficients to coprime integers, keeping the sign."""
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return [v // g for v in ints] if g > 1 else ints


def _int_rem(a: list[int], b: list[int]) -> list[int]:
    """Positive multiple of rem(a, b) with integer coefficients."""
    r = list(a)
    db, lb = len(b) - 1, b[-1]
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k]
        if c == 0:
            continue
        # r <- |lb| * r - sign(lb) * c * x^(k-db) * b, which cancels r[k]
        sl = 1 if lb > 0 else -1
        r = [v * abs(lb) for v in r]
        for i in range(db + 1):
            r[k - db + i] -= sl * c * b[i]
    r = r[:db]
    while r and r[-1] == 0:
        r.pop()
    g = 0
    for v in r:
        g = math.gcd(g, v)
    return [v // g for v in r] if g > 1 else r


def _exact_chain(p: Poly) -> list[Poly]:
    cur = _integer_primitive(p.coeffs)
    nxt = _integer_primitive(p.derivative().coeffs) if p.degree > 0 else []
    chain = [cur]
    while nxt:
        chain.append(nxt)
        r = _int_rem(cur, nxt)
        cur, nxt = nxt, [-v for v in r]
    return [Poly.exact(c) for c in chain]


def _normalize(coeffs: list) -> list:
    m = max(abs(c) for c in coeffs)
    return [c / m for c in coeffs]


def _float_rem(a: list, b: list, eps) -> tuple[list, bool]:
    """Remainder of a by b with cancellation scrubbing.

    Returns the trimmed remainder and whether its nominal leading
    coefficient was scrubbed while lower ones survived.
    """
    r = list(a)
    scale = [abs(c) for c in a]
    db, lb = len(b) - 1, b[-1]
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k] / lb
        if c == 0:
            continue
        for i in range(db):
            t = c * b[i]
            r[k - db + i] -= t
            scale[k - db + i] += abs(t)
        r[k] = 0
    rem = r[:db]
    for i in range(db):
        if abs(rem[i]) <= eps * scale[i]:
            rem[i] = mpmath.mpf(0)
    lost_lead = bool(rem) and rem[-1] == 0 and any(v != 0 for v in rem)
    while rem and rem[-1] == 0:
        rem.pop()
    return rem, lost_lead


def _float_chain(p: Poly, eps) -> list[Poly]:
    bits = p.bits
    with mpmath.workprec(bits):
        cur = _normalize(list(p.coeffs))
        d = p.derivative().coeffs
        nxt = _normalize(list(d)) if d else []
        chain = [cur]
        while nxt:
            chain.append(nxt)
            if len(nxt) == 1:
                break
            r, lost = _float_rem(cur, nxt, eps)
            if lost:
                raise IndeterminateError(
                    f"leading coefficient of chain element {len(chain)} is below the sign threshold",
                    index=len(chain))
            cur, nxt = nxt, (_normalize([-v for v in r]) if r else [])
    return [Poly.floating(c, bits) for c in chain]


def sturm_chain(p: Poly, ctx: PrecisionContext | None = None) -> list[Poly]:
    """Sturm chain p, p', -rem, ...; the last element is gcd(p, p') up to scale."""
    if p.is_zero:
        raise DomainError("zero polynomial has no Sturm chain")
    if p.mode == EXACT:
        return _exact_chain(p)
    ctx = ctx or default_context(p.bits)
    return _float_chain(p, ctx.eps_sign)


def _exact_quotient(p: Poly, g: Poly) -> Poly:
    """Quotient of p by g (the remainder is discarded)."""
    if g.degree <= 0:
        return p
    with p._prec():
        r = list(p.coeffs)
        q = [p._zero()] * (len(r) - g.degree)
        lead = g.leading
        for k in range(len(r) - 1, g.degree - 1, -1):
            c = r[k] / lead
            q[k - g.degree] = c
            for i in range(g.degree + 1):
                r[k - g.degree + i] -= c * g.coeffs[i]
        return p._like(q)


@dataclass
class _Analysis:
    """Square-free part, its chain, and gcd(p, p') for a polynomial."""

    p: Poly
    sqf: Poly
    chain: list
    gcd: Poly
    eps: object

    @property
    def exact(self) -> bool:
        return self.p.mode == EXACT

    def is_zero_at(self, poly: Poly, x) -> bool:
        if self.exact:
            return poly(x) == 0
        v, s = poly.evaluate_with_scale(x)
        return abs(v) <= self.eps * s

    def variations(self, x) -> int:
        signs = []
        for poly in self.chain:
            if self.is_zero_at(poly, x):
                continue
            signs.append(poly(x) > 0)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def variations_at_infinity(self, direction: int) -> int:
        signs = []
        for poly in self.chain:
            s = poly.leading > 0
            if direction < 0 and poly.degree % 2 == 1:
                s = not s
            signs.append(s)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _analyze(p: Poly, ctx: PrecisionContext) -> _Analysis:
    chain = sturm_chain(p, ctx)
    g = chain[-1]
    if g.degree <= 0:
        return _Analysis(p, p, chain, g, ctx.eps_sign)
    sqf = _exact_quotient(p, g)
    sqf_chain = sturm_chain(sqf, ctx)
    if sqf_chain[-1].degree > 0:
        raise IndeterminateError("square-free part still shares a factor with its derivative",
                                 index=len(sqf_chain) - 1)
    return _Analysis(p, sqf, sqf_chain, g, ctx.eps_sign)


def _ctx_for(p: Poly, ctx: PrecisionContext | None) -> PrecisionContext:
    if ctx is not None:
        return ctx
    return default_context(p.bits if p.mode != EXACT else None)


def _is_infinite(x) -> bool:
    return x is None or (not isinstance(x, (int, Fraction)) and mpmath.isinf(x))


def cauchy_bound(p: Poly):
    """1 + max|a_i|/|a_n|: every root satisfies |x| < bound."""
    lead = abs(p.leading)
    with p._prec():
        return 1 + max(abs(c) for c in p.coeffs[:-1]) / lead if p.degree > 0 else 1


def _inward(an: _Analysis, x, toward, ctx):
    """Move a float endpoint off a numerical root of the square-free part."""
    step = ctx.eps_root * max(1, abs(x))
    for _ in range(64):
        if not an.is_zero_at(an.sqf, x):
            return x
        x = x + step if toward > x else x - step
        step *= 2
    raise IndeterminateError("could not move endpoint off a root")


def _count(an: _Analysis, lo, hi, ctx) -> int:
    if _is_infinite(lo):
        vlo = an.variations_at_infinity(-1)
    else:
        if not an.exact:
            lo = _inward(an, lo, hi if not _is_infinite(hi) else lo + 1, ctx)
        vlo = an.variations(lo)
    if _is_infinite(hi):
        vhi = an.variations_at_infinity(1)
        at_hi = 0
    else:
        if not an.exact:
            hi = _inward(an, hi, lo if not _is_infinite(lo) else hi - 1, ctx)
        vhi = an.variations(hi)
        at_hi = 1 if (an.exact and an.sqf(hi) == 0) else 0
    return vlo - vhi - at_hi


def _coerce_endpoint(p: Poly, x):
    if _is_infinite(x):
        return x
    if p.mode == EXACT:
        return Fraction(x)
    with p._prec():
        return mpmath.mpf(x)


def sturm_count(p: Poly, lo=None, hi=None, ctx: PrecisionContext | None = None) -> int:
    """Number of distinct real roots in the open interval (lo, hi).

    ``None`` or an infinite value stands for an unbounded end.
    """
    ctx = _ctx_for(p, ctx)
    an = _analyze(p, ctx)
    lo, hi = _coerce_endpoint(p, lo), _coerce_endpoint(p, hi)
    return _count(an, lo, hi, ctx)


def _root_multiplicity(g: Poly, lo, hi, ctx) -> int:
    """1 + multiplicity of the (unique) root of g in (lo, hi), zero if absent."""
    if g.degree <= 0:
        return 1
    an = _analyze(g, ctx)
    if _count(an, lo, hi, ctx) == 0:
        return 1
    return 1 + _root_multiplicity(an.gcd, lo, hi, ctx)


def _split_point(an: _Analysis, a, b, ctx):
    for shift in (Fraction(0), Fraction(1, 7), Fraction(-1, 9), Fraction(1, 5), Fraction(-1, 4)):
        if an.exact:
            m = a + (b - a) * (Fraction(1, 2) + shift)
        else:
            m = a + (b - a) * (mpmath.mpf(0.5) + mpmath.mpf(shift.numerator) / shift.denominator)
        if not an.is_zero_at(an.sqf, m):
            return m
    if an.exact:
        return a + (b - a) * Fraction(1, 2) + (b - a) / 1013
    raise IndeterminateError("no clean split point found")


def isolate_roots(p: Poly, lo=None, hi=None, ctx: PrecisionContext | None = None) -> list[RootInterval]:
    """Disjoint intervals, one per distinct real root in (lo, hi), in increasing order."""
    ctx = _ctx_for(p, ctx)
    if p.degree < 1:
        return []
    an = _analyze(p, ctx)
    bound = cauchy_bound(p)
    lo = -bound if _is_infinite(lo) else _coerce_endpoint(p, lo)
    hi = bound if _is_infinite(hi) else _coerce_endpoint(p, hi)
    if not an.exact:
        lo = _inward(an, lo, hi, ctx)
        hi = _inward(an, hi, lo, ctx)
    out: list[RootInterval] = []
    stack = [(lo, hi, an.variations(lo), an.variations(hi) + (1 if an.exact and an.sqf(hi) == 0 else 0))]
    while stack:
        a, b, va, vb = stack.pop()
        n = va - vb
        if n == 0:
            continue
        if n == 1:
            mult = _root_multiplicity(an.gcd, a, b, ctx)
            out.append(RootInterval(a, b, mult, True))
            continue
        if not an.exact and (b - a) <= ctx.eps_root * max(1, abs(a)):
            raise IndeterminateError("roots closer than the root tolerance")
        m = _split_point(an, a, b, ctx)
        vm = an.variations(m)
        stack.append((m, b, vm, vb))
        stack.append((a, m, va, vm))
    out.sort(key=lambda iv: iv.lo)
    return out


def refine_root(p: Poly, iv: RootInterval, ctx: PrecisionContext | None = None) -> RefinedRoot:
    """Root inside a certified interval to relative width eps_root, with |p(root)|."""
    ctx = _ctx_for(p, ctx)
    f = p
    if iv.multiplicity_hint > 1:
        f = _analyze(p, ctx).sqf
    with ctx.workprec():
        fl = f if f.mode != EXACT else f.to_float(ctx.bits)
        if fl.mode != EXACT and fl.bits != ctx.bits:
            fl = Poly.floating(fl.coeffs, ctx.bits)
        dfl = fl.derivative()
        lo, hi = mpmath.mpf(iv.lo) if not isinstance(iv.lo, Fraction) else _frac_mpf(iv.lo), \
            mpmath.mpf(iv.hi) if not isinstance(iv.hi, Fraction) else _frac_mpf(iv.hi)
        if lo == hi:
            x = lo
        else:
            x = bracketed_newton(fl.evaluate, dfl.evaluate, lo, hi, rtol=ctx.eps_root,
                                 atol=ctx.eps_root ** 2, max_iter=ctx.max_iter)
        residual = abs(p.evaluate(x)) if p.mode != EXACT else abs(p.to_float(ctx.bits).evaluate(x))
        return RefinedRoot(+x, residual)


def _frac_mpf(f: Fraction):
    return mpmath.mpf(f.numerator) / f.denominator


def real_root_count_with_multiplicity(p: Poly, ctx: PrecisionContext | None = None) -> int:
    ctx = _ctx_for(p, ctx)
    if p.degree <= 0:
        return 0
    an = _analyze(p, ctx)
    return _count(an, None, None, ctx) + real_root_count_with_multiplicity(an.gcd, ctx)


def is_hyperbolic(p: Poly, ctx: PrecisionContext | None = None) -> HyperbolicityVerdict:
    if p.degree < 1:
        raise DomainError("hyperbolicity needs degree >= 1")
    ctx = _ctx_for(p, ctx)
    try:
        an = _analyze(p, ctx)
        distinct = _count(an, None, None, ctx)
        total = distinct + real_root_count_with_multiplicity(an.gcd, ctx)
        if total < p.degree:
            return HyperbolicityVerdict(Status.NOT_HYPERBOLIC, distinct, total)
        if an.gcd.degree <= 0:
            return HyperbolicityVerdict(Status.HYPERBOLIC, distinct, total)
        witness = _multiple_root_witness(p, an, ctx)
        if witness is None:
            return HyperbolicityVerdict(Status.INDETERMINATE, distinct, total)
        return HyperbolicityVerdict(Status.BOUNDARY, distinct, total, witness)
    except IndeterminateError as exc:
        return HyperbolicityVerdict(Status.INDETERMINATE, -1, None, indeterminate_index=exc.index)


def _multiple_root_witness(p: Poly, an: _Analysis, ctx) -> RootInterval | None:
    """Interval around a multiple root; in float mode the root is checked directly."""
    for iv in isolate_roots(p, None, None, ctx):
        if iv.multiplicity_hint < 2:
            continue
        if an.exact:
            return iv
        x = refine_root(p, iv, ctx).root
        with ctx.workprec():
            v, s = p.evaluate_with_scale(x)
            dv, ds = p.derivative().evaluate_with_scale(x)
            if abs(v) <= ctx.eps_residual * s and abs(dv) <= ctx.eps_residual * ds:
                return iv
        return None
    return None


def is_section_hyperbolic(p: Poly, ctx: PrecisionContext | None = None) -> list[HyperbolicityVerdict]:
    """One verdict per section of degree 1 .. degree(p)."""
    if any(c <= 0 for c in p.coeffs):
        raise DomainError("section verdicts need positive coefficients")
    out = []
    for i in range(1, p.degree + 1):
        v = is_hyperbolic(p.section(i), ctx)
        out.append(HyperbolicityVerdict(v.status, v.distinct_real_roots, v.real_roots_with_multiplicity,
                                        v.witness, i, v.indeterminate_index))
    return out


def section_hyperbolic(p: Poly, ctx: PrecisionContext | None = None) -> bool:
    """True when no section is NotHyperbolic."""
    return all(v.status != Status.NOT_HYPERBOLIC for v in is_section_hyperbolic(p, ctx))
