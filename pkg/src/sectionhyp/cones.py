"""Coefficient-ratio tests: Hutchinson, Newton and Petrovitch bounds, delta margins,
and a generator of near-Hutchinson polynomials with non-real roots."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import mpmath

from . import rootkit
from .errors import ConstructionError, DomainError
from .poly import EXACT, Poly
from .precision import PrecisionContext, pow2, to_decimal

HUTCHINSON_BOUND = 4


def newton_bound(n: int, i: int) -> Fraction:
    """(n-i+1)(i+1) / ((n-i) i): the ratio bound at index i for degree-n real-rooted polynomials."""
    return Fraction((n - i + 1) * (i + 1), (n - i) * i)


def _tolerance(p: Poly):
    return Fraction(0) if p.mode == EXACT else pow2(-(p.bits // 2))


def _geq(value, bound, rel_tol) -> bool:
    """value >= bound, with relative slack rel_tol for float data."""
    if rel_tol == 0 and not isinstance(bound, mpmath.mpf) and not isinstance(value, mpmath.mpf):
        return value >= bound
    v, b = _mp(value), _mp(bound)
    return v >= b - abs(b) * (rel_tol if rel_tol else pow2(-(mpmath.mp.prec // 2)))


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass
class ConeReport:
    ratios: list
    gamma: list
    delta: list
    hutchinson_ok: bool
    newton_ok: bool
    petrovitch_ok: bool | None
    log_image: list
    hutchinson_margins: list
    newton_margins: list
    petrovitch_margins: list

    def to_dict(self, bits: int = 256) -> dict:
        dec = lambda xs: [to_decimal(x, bits) if x is not None else None for x in xs]
        return {
            "ratios": dec(self.ratios),
            "gamma": dec(self.gamma),
            "delta": dec(self.delta),
            "hutchinson_ok": self.hutchinson_ok,
            "newton_ok": self.newton_ok,
            "petrovitch_ok": self.petrovitch_ok,
            "log_image": dec(self.log_image),
        }

    def log_image_csv(self, digits: int = 30) -> str:
        lines = ["i,log_a"]
        for i, v in enumerate(self.log_image):
            lines.append(f"{i},{mpmath.nstr(v, digits)}")
        return "\n".join(lines) + "\n"


def cone_report(p: Poly, n: int | None = None, m_table: Sequence | None = None) -> ConeReport:
    """Ratio sequences of p and its membership in the three inequality regions.

    ``n`` is the degree used for the Newton bounds (default: degree of p);
    ``m_table[i-1]`` is the Petrovitch bound at index i.  Float data is compared
    with a relative slack of 2^-(bits/2) so that equality cases pass.
    """
    ratios = p.consecutive_ratios()
    deg = p.degree
    n = deg if n is None else n
    bits = p.bits or 256
    tol = _tolerance(p)
    with mpmath.workprec(bits):
        a = p.coeffs
        gamma = [a[k - 1] / a[k] for k in range(1, deg + 1)]
        delta = [gamma[k - 1] / gamma[k - 2] for k in range(2, deg + 1)]
        h_margins = [r - HUTCHINSON_BOUND for r in ratios]
        hutch = all(_geq(r, HUTCHINSON_BOUND, tol) for r in ratios)
        n_margins, newton = [], True
        for i, r in enumerate(ratios, start=1):
            if i >= n:
                break
            b = newton_bound(n, i)
            n_margins.append(r - b if p.mode == EXACT else r - _mp(b))
            newton = newton and _geq(r, b, tol)
        petro, p_margins = None, []
        if m_table is not None:
            petro = True
            for i, r in enumerate(ratios, start=1):
                if i > len(m_table):
                    break
                mi = m_table[i - 1]
                p_margins.append(_mp(r) - _mp(mi))
                petro = petro and _geq(r, mi, tol if tol else pow2(-(bits // 2)))
        log_image = [mpmath.log(_mp(c)) for c in a]
    return ConeReport(ratios, gamma, delta, hutch, newton, petro, log_image, h_margins, n_margins, p_margins)


class DeltaReport(NamedTuple):
    margins: list
    min_delta: object
    all_margins_ok: bool
    falsified: bool


def delta_inequality_check(p: Poly) -> DeltaReport:
    """Margins delta_k delta_{k-1} - 4 delta_{k-1} + 3 for k >= 3 and the smallest delta.

    ``falsified`` marks a delta below 3, which no section-hyperbolic
    polynomial can produce.
    """
    rep = cone_report(p)
    d = rep.delta
    tol = _tolerance(p)
    with mpmath.workprec(p.bits or 256):
        margins = [d[k] * d[k - 1] - 4 * d[k - 1] + 3 for k in range(1, len(d))]
        ok = all(_geq(m, 0, 0) if tol == 0 else m >= -tol * 16 for m in margins)
        min_delta = min(d) if d else None
        falsified = min_delta is not None and not _geq(min_delta, 3, tol)
    return DeltaReport(margins, min_delta, ok, falsified)


# ---------------------------------------------------------------------------

class Counterexample(NamedTuple):
    poly: Poly
    eps: Fraction
    violating_index: int
    real_roots: int
    halvings: int


def _counterexample_coeffs(n: int, k: int, eps: Fraction, triple) -> list:
    a = [Fraction(0)] * (n + 1)
    a[k - 1], a[k], a[k + 1] = (Fraction(t) for t in triple)
    b = {k - 1: a[k - 1], k: a[k], k + 1: a[k + 1]}
    for i in range(k + 1, n):
        b[i + 1] = b[i] ** 2 / (8 * b[i - 1])
    for i in range(k - 1, 0, -1):
        b[i - 1] = b[i] ** 2 / (8 * b[i + 1])
    for i in range(n + 1):
        if i > k + 1:
            a[i] = b[i] * eps ** (i - k - 1)
        elif i < k - 1:
            a[i] = b[i] * eps ** (k - 1 - i)
    return a


def hutchinson_counterexample_report(n: int, k: int, eps, ctx: PrecisionContext | None = None,
                                     triple=(1, 1, 1), max_halvings: int = 64) -> Counterexample:
    """Positive polynomial violating the ratio-4 bound only at index k, with non-real roots.

    The middle triple sits at indices k-1, k, k+1; outward coefficients keep
    every other ratio at 8 (or 8/eps next to the triple).  eps is halved until
    an exact root count shows fewer than n real roots.
    """
    if not 1 <= k <= n - 1:
        raise DomainError("k must satisfy 1 <= k <= n-1")
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    t = [Fraction(x) for x in triple]
    if min(t) <= 0 or t[1] ** 2 >= 4 * t[0] * t[2]:
        raise DomainError("the middle triple must be positive and violate a_k^2 >= 4 a_{k-1} a_{k+1}")
    for halvings in range(max_halvings + 1):
        p = Poly.exact(_counterexample_coeffs(n, k, eps, t))
        real = rootkit.real_root_count_with_multiplicity(p, ctx)
        if real < n:
            return Counterexample(p, eps, k, real, halvings)
        eps /= 2
    raise ConstructionError("no conjugate pair certified; retry with a smaller eps")


def hutchinson_counterexample(n: int, k: int, eps, ctx: PrecisionContext | None = None,
                              triple=(1, 1, 1)) -> Poly:
    return hutchinson_counterexample_report(n, k, eps, ctx, triple).poly


# ---------------------------------------------------------------------------
# seeded random draws for property checks

def _rand_fraction(rng: random.Random, lo: Fraction, hi: Fraction, den: int = 16) -> Fraction:
    steps = int((hi - lo) * den)
    return lo + Fraction(rng.randint(0, steps), den)


def random_hutchinson_poly(rng: random.Random, degree: int) -> Poly:
    """Positive rational coefficients with every ratio a_i^2/(a_{i-1}a_{i+1}) in [4, 8]."""
    a = [Fraction(1), _rand_fraction(rng, Fraction(1, 4), Fraction(4))]
    for _ in range(2, degree + 1):
        ratio = _rand_fraction(rng, Fraction(4), Fraction(8))
        a.append(a[-1] ** 2 / (ratio * a[-2]))
    return Poly.exact(a[: degree + 1])


def random_negative_root_poly(rng: random.Random, degree: int) -> Poly:
    """Product of (x + r) over random positive rationals r, with occasional repeats."""
    roots = []
    for _ in range(degree):
        if roots and rng.random() < 0.15:
            roots.append(rng.choice(roots))
        else:
            roots.append(_rand_fraction(rng, Fraction(1, 16), Fraction(10)) or Fraction(1, 16))
    return Poly.from_roots([-r for r in roots])
