"""The partial theta function Psi(q, u) = sum_j q^(j(j+1)/2) u^j.

Sums are taken in extra working precision sized to the largest term, so
heavy cancellation near the roots costs bits rather than accuracy.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import mpmath

from ._solve import bracketed_newton
from .errors import DegenerateError, DomainError, TrackingError
from .poly import Poly
from .precision import PrecisionContext, default_context, pow2, to_decimal

PSI = "psi"
G_FORM = "g"
VALIDATED_SPECTRUM_LENGTH = 25


class Jet(NamedTuple):
    """Psi and the partial derivatives used by the solvers, plus error data."""

    value: mpmath.mpf
    du: mpmath.mpf
    duu: mpmath.mpf
    dq: mpmath.mpf
    dqu: mpmath.mpf
    bound: mpmath.mpf
    du_bound: mpmath.mpf
    terms: int


class SeriesValue(NamedTuple):
    value: mpmath.mpf
    bound: mpmath.mpf
    terms: int


def _log2_peak(base_log2: float, x_log2: float, quad: float, lin: float) -> float:
    """max_j (quad*j^2 + lin*j) * base_log2 + j * x_log2 over integers j >= 0."""
    a = quad * base_log2
    b = lin * base_log2 + x_log2
    if a >= 0:
        return float("inf")
    j_star = -b / (2 * a)
    best = 0.0
    for j in (math.floor(j_star), math.ceil(j_star)):
        if j >= 0:
            best = max(best, a * j * j + b * j)
    return best


def _guard_bits(q, u) -> int:
    aq, au = abs(float(q)), abs(float(u))
    if aq == 0 or au == 0 or math.isinf(au):
        return 16
    peak = _log2_peak(math.log2(aq), math.log2(au) if au > 0 else -1e9, 0.5, 0.5)
    return max(0, math.ceil(peak)) + 16


def _check_q(q):
    if not abs(q) < 1:
        raise DomainError("partial theta needs |q| < 1")


def psi_jet(q, u, bits: int) -> Jet:
    """Psi, dPsi/du, d2Psi/du2, dPsi/dq, d2Psi/dqdu at (q, u), accurate to about 2^-bits."""
    q = mpmath.mpf(q) if not isinstance(q, mpmath.mpf) else q
    u = mpmath.mpf(u) if not isinstance(u, mpmath.mpf) else u
    _check_q(q)
    guard = _guard_bits(q, u)
    wp = bits + guard
    with mpmath.workprec(wp):
        q, u = +q, +u
        tol = pow2(-(bits + 8))
        # t = q^T u^j, w = q^T u^(j-1), z = q^T u^(j-2), y = q^(T-1) u^j, x = q^(T-1) u^(j-1)
        one = mpmath.mpf(1)
        s0, s1, s2, sq, squ = one, mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(0)
        qpow = q  # q^j for the ratio q^(j) u between consecutive terms (j >= 1)
        t = q * u
        w = q
        z = None
        y = u
        x = one
        j = 1
        while True:
            tri = j * (j + 1) // 2
            s0 += t
            s1 += j * w
            sq += tri * y
            squ += j * tri * x
            if j >= 2:
                s2 += j * (j - 1) * z
            qpow = qpow * q  # q^(j+1)
            f = qpow * u
            r = abs(f)
            if j >= 3 and r <= 0.125:
                lead = max(abs(t), abs(w), abs(y), abs(x), abs(z))
                if lead * (j + 1) ** 3 <= tol:
                    break
            z = w * qpow  # q^T(j+1) u^(j-1) = w_j * q^(j+1)
            t, w, y, x = t * f, w * f, y * f, x * f
            j += 1
        rounding = (j + 1) * pow2(guard - 16 - wp + 4)
        bound = abs(t) / 7 + rounding
        du_bound = abs(w) * (j + 1) / 3 + rounding
    with mpmath.workprec(bits):
        return Jet(+s0, +s1, +s2, +sq, +squ, +bound, +du_bound, j + 1)


def _ctx(ctx):
    return ctx or default_context()


def theta_eval(q, u, ctx: PrecisionContext | None = None) -> SeriesValue:
    """Psi(q, u) with an upper bound on truncation plus rounding error."""
    ctx = _ctx(ctx)
    with ctx.workprec():
        jet = psi_jet(mpmath.mpf(q), mpmath.mpf(u), ctx.bits)
    return SeriesValue(jet.value, jet.bound, jet.terms)


def theta_du(q, u, ctx: PrecisionContext | None = None) -> SeriesValue:
    """dPsi/du(q, u) with its error bound."""
    ctx = _ctx(ctx)
    with ctx.workprec():
        jet = psi_jet(mpmath.mpf(q), mpmath.mpf(u), ctx.bits)
    return SeriesValue(jet.du, jet.du_bound, jet.terms)


def psi_partial_sum(q, u, terms: int, bits: int):
    """Plain sum of the first ``terms`` terms (used to audit the error bound)."""
    with mpmath.workprec(bits + _guard_bits(q, u)):
        q, u = mpmath.mpf(q), mpmath.mpf(u)
        total, t, qpow = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(1)
        for _ in range(terms):
            total += t
            qpow *= q
            t *= qpow * u
        return +total


# ---------------------------------------------------------------------------
# related normalizations

def theta_classic(q, v, ctx: PrecisionContext | None = None):
    """Theta(q, v) = sum_j (-1)^j q^(j(j-1)/2) v^j, summed directly."""
    ctx = _ctx(ctx)
    q, v = mpmath.mpf(q), mpmath.mpf(v)
    _check_q(q)
    guard = _guard_bits(q, v / q) if q != 0 else 16
    with mpmath.workprec(ctx.bits + guard):
        q, v = +q, +v
        tol = pow2(-(ctx.bits + 8))
        total, t, qpow, j = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(1), 0
        while True:
            total += t
            # next term ratio: -q^j v
            f = -qpow * v
            if j >= 2 and abs(f) <= 0.125 and abs(t) <= tol:
                break
            t *= f
            qpow *= q
            j += 1
    with ctx.workprec():
        return +total


def g_series(a, x, ctx: PrecisionContext | None = None):
    """g_a(x) = sum_k a^(k^2) x^k."""
    ctx = _ctx(ctx)
    a, x = mpmath.mpf(a), mpmath.mpf(x)
    if not abs(a) < 1:
        raise DomainError("g-series needs |a| < 1")
    guard = 16
    if a != 0 and x != 0:
        guard += max(0, math.ceil(_log2_peak(math.log2(abs(float(a))), math.log2(abs(float(x))), 1, 0)))
    with mpmath.workprec(ctx.bits + guard):
        a, x = +a, +x
        tol = pow2(-(ctx.bits + 8))
        total, t, k = mpmath.mpf(0), mpmath.mpf(1), 0
        a2 = a * a
        apow = a  # a^(2k+1)
        while True:
            total += t
            f = apow * x
            if k >= 2 and abs(f) <= 0.125 and abs(t) <= tol:
                break
            t *= f
            apow *= a2
            k += 1
    with ctx.workprec():
        return +total


class FormValues(NamedTuple):
    psi: mpmath.mpf
    theta_classic: mpmath.mpf
    g_form: mpmath.mpf
    psi_gap: mpmath.mpf
    g_gap: mpmath.mpf
    consistent: bool


def convert_forms(q, u, ctx: PrecisionContext | None = None) -> FormValues:
    """Psi(q,u), Theta(q,-q u) and g_{sqrt q}(u), with the identities

    Psi(q, u) = Theta(q, -q u) and g_{sqrt q}(u) = Theta(q, -sqrt(q) u)

    checked to eps_residual.
    """
    ctx = _ctx(ctx)
    with ctx.workprec():
        q, u = mpmath.mpf(q), mpmath.mpf(u)
        psi = theta_eval(q, u, ctx).value
        th = theta_classic(q, -q * u, ctx)
        if q >= 0:
            rq = mpmath.sqrt(q)
            g = g_series(rq, u, ctx)
            g_gap = abs(g - theta_classic(q, -rq * u, ctx))
        else:
            g, g_gap = mpmath.nan, mpmath.mpf(0)
        psi_gap = abs(psi - th)
        ok = psi_gap <= ctx.eps_residual * max(1, abs(psi)) and g_gap <= ctx.eps_residual * max(1, abs(g) if q >= 0 else 1)
        return FormValues(psi, th, g, psi_gap, g_gap, bool(ok))


@dataclass(frozen=True)
class ThetaSection:
    q: mpmath.mpf
    n: int
    poly: Poly
    normalization: str


def theta_section(q, n: int, normalization: str = PSI, ctx: PrecisionContext | None = None) -> ThetaSection:
    """Degree-n Taylor section in the Psi normalization (q^(k(k+1)/2)) or the g one (q^(k^2))."""
    ctx = _ctx(ctx)
    if normalization not in (PSI, G_FORM):
        raise DomainError(f"unknown normalization {normalization!r}")
    with ctx.workprec():
        q = mpmath.mpf(q)
        if not 0 < q < 1:
            raise DomainError("sections need q in (0, 1)")
        if normalization == PSI:
            coeffs = [q ** (k * (k + 1) // 2) for k in range(n + 1)]
        else:
            coeffs = [q ** (k * k) for k in range(n + 1)]
        return ThetaSection(q, n, Poly.floating(coeffs, ctx.bits), normalization)


class Certificate(NamedTuple):
    m: int
    ok: bool
    certified_real_roots: int


def sign_certificate(q, n: int, ctx: PrecisionContext | None = None) -> Certificate:
    """Sign-alternation certificate for the g-normalized section S_n(q, x).

    m is the least odd integer with 1 + 2 sum_{k<=m} (-1)^k q^(k^2) > 0; the
    certificate holds when (-1)^k S_n(q, -q^(-2k)) > 0 for m+1 <= k <= n-m-1,
    which forces at least n - 2m - 2 real roots.
    """
    ctx = _ctx(ctx)
    if n < 2:
        raise DomainError("n must be at least 2")
    with ctx.workprec():
        q = mpmath.mpf(q)
        if not 0 < q < 1:
            raise DomainError("q must lie in (0, 1)")
        partial = mpmath.mpf(1)
        m = 0
        while True:
            m += 1
            partial += 2 * (-1) ** m * q ** (m * m)
            if m % 2 == 1 and partial > 0:
                break
            if m > 100_000:
                raise DomainError("certificate index did not settle")
        ok = True
        lq = -math.log2(float(q))
        for k in range(m + 1, n - m):
            with mpmath.workprec(ctx.bits + int(k * k * lq) + 32):
                x = -q ** (-2 * k)
                val = mpmath.mpf(0)
                for j in range(n + 1):
                    val += q ** (j * j) * x ** j
                if (-1) ** k * val <= 0:
                    ok = False
                    break
        return Certificate(m, ok, max(0, n - 2 * m - 2))


# ---------------------------------------------------------------------------
# critical points and roots

def _crit_newton(q, u0, bits: int, max_iter: int = 60):
    """Zero of dPsi/du near u0 by Newton, or None when it fails to settle."""
    u = mpmath.mpf(u0)
    tol = pow2(-(bits - 8))
    for _ in range(max_iter):
        jet = psi_jet(q, u, bits)
        if jet.duu == 0:
            return None
        step = jet.du / jet.duu
        u -= step
        if u >= 0:
            return None
        if abs(step) <= tol * abs(u):
            return u
    return None


def _refine_crit(q, a, b, bits: int, max_iter: int):
    du = lambda x: psi_jet(q, x, bits).du
    duu = lambda x: psi_jet(q, x, bits).duu
    return bracketed_newton(du, duu, a, b, rtol=pow2(-(bits - 8)), max_iter=max_iter)


def _scan_ratio(q):
    return abs(q) ** (-mpmath.mpf(1) / 16)


def _iter_critical(q, bits: int, max_abs_u, start=None, max_iter: int = 10_000):
    """Negative critical points in order of increasing |u| (grid scan of dPsi/du)."""
    ratio = _scan_ratio(q)
    u = -(mpmath.mpf(start) if start is not None else mpmath.mpf(1) / 2)
    prev = psi_jet(q, u, bits).du
    while abs(u) < max_abs_u:
        un = u * ratio
        cur = psi_jet(q, un, bits).du
        if (cur < 0) != (prev < 0):
            yield _refine_crit(q, un, u, bits, max_iter)
        u, prev = un, cur


class CriticalPoint(NamedTuple):
    u: mpmath.mpf
    value: mpmath.mpf
    is_minimum: bool


class CriticalEnumeration(NamedTuple):
    points: list
    complete: bool
    alternating: bool


def _search_window(q, count: int):
    return abs(mpmath.mpf(q)) ** (-2 * (count + 2))


def critical_points(q, count: int, ctx: PrecisionContext | None = None) -> CriticalEnumeration:
    """First ``count`` negative zeros of dPsi/du by increasing |u|, with Psi values."""
    ctx = _ctx(ctx)
    with ctx.workprec():
        q = mpmath.mpf(q)
        if not 0 < q < 1:
            raise DomainError("q must lie in (0, 1)")
        pts = []
        for c in _iter_critical(q, ctx.bits, _search_window(q, count), max_iter=ctx.max_iter):
            jet = psi_jet(q, c, ctx.bits)
            pts.append(CriticalPoint(c, jet.value, jet.duu > 0))
            if len(pts) == count:
                break
        values = [p.value for p in pts]
        alternating = all((a < 0) != (b < 0) for a, b in zip(values, values[1:]))
        return CriticalEnumeration(pts, len(pts) == count, alternating)


class RootEnumeration(NamedTuple):
    roots: list
    complete: bool
    certificate: Certificate | None


def real_roots(q, count: int, ctx: PrecisionContext | None = None) -> RootEnumeration:
    """First ``count`` negative roots of Psi(q, .) by increasing |u|.

    Psi is monotone between consecutive critical points, so each piece holds
    at most one root.  A critical value within eps_residual of zero is a
    double root and is listed twice.
    """
    ctx = _ctx(ctx)
    with ctx.workprec():
        q = mpmath.mpf(q)
        crit = critical_points(q, count + 2, ctx).points
        roots = []
        right, vright = mpmath.mpf(0), mpmath.mpf(1)
        f = lambda x: psi_jet(q, x, ctx.bits).value
        df = lambda x: psi_jet(q, x, ctx.bits).du
        for cp in crit:
            if len(roots) >= count:
                break
            if abs(cp.value) <= ctx.eps_residual:
                roots.extend([cp.u, cp.u])
                right, vright = cp.u, cp.value
                continue
            if vright != 0 and (cp.value < 0) != (vright < 0) and abs(vright) > ctx.eps_residual:
                roots.append(bracketed_newton(f, df, cp.u, right, rtol=ctx.eps_root,
                                              max_iter=ctx.max_iter, flo=cp.value, fhi=vright))
            right, vright = cp.u, cp.value
        roots = roots[:count]
        cert = sign_certificate(q, 2 * count + 8, ctx) if q > 0 else None
        return RootEnumeration(roots, len(roots) == count, cert)


def probe_ratios(q, count: int, ctx: PrecisionContext | None = None) -> dict:
    """Consecutive ratios of roots, critical points and critical values (report only)."""
    ctx = _ctx(ctx)
    with ctx.workprec():
        rts = real_roots(q, count, ctx).roots
        cps = critical_points(q, count, ctx).points
        ratio = lambda xs: [xs[i + 1] / xs[i] for i in range(len(xs) - 1) if xs[i] != 0]
        return {
            "root_ratios": ratio(rts),
            "critical_point_ratios": ratio([c.u for c in cps]),
            "critical_value_ratios": ratio([c.value for c in cps]),
            "reference": {"roots": 1 / mpmath.mpf(q), "critical_points": 1 / mpmath.mpf(q),
                          "critical_values": mpmath.mpf(q)},
        }


# ---------------------------------------------------------------------------
# spectrum

@dataclass(frozen=True)
class CriticalPair:
    q_hat: mpmath.mpf
    u_hat: mpmath.mpf
    index: int
    residual_psi: mpmath.mpf
    residual_dpsi: mpmath.mpf
    extrapolated: bool = False

    def to_dict(self, bits: int) -> dict:
        return {"k": self.index, "q_hat": to_decimal(self.q_hat, bits), "u_hat": to_decimal(self.u_hat, bits),
                "residual_psi": to_decimal(self.residual_psi, bits),
                "residual_dpsi": to_decimal(self.residual_dpsi, bits)}


def _first_negative_minimum(q, bits: int, max_abs_u, max_iter: int):
    for c in _iter_critical(q, bits, max_abs_u, max_iter=max_iter):
        jet = psi_jet(q, c, bits)
        if jet.duu > 0 and jet.value < 0:
            return c
    return None


def _track(q, c, bits: int):
    """Follow the negative minimum (q, c) in q until its value turns nonnegative.

    Returns (q_lo, c_lo, q_hi) with Psi(q_lo, c_lo) < 0 <= min value at q_hi.
    """
    h = (1 - q) / 64
    hmin = pow2(-80)
    while True:
        jet = psi_jet(q, c, bits)
        slope = -jet.dqu / jet.duu
        spacing = abs(c) * (1 / q - 1)
        if abs(h * slope) > spacing / 4:
            h = spacing / (4 * abs(slope))
        qn = q + h
        if qn >= 1:
            raise TrackingError("extremum track ran into q = 1", last_good_q=q)
        pred = c + h * slope
        un = _crit_newton(qn, pred, bits)
        ok = un is not None and abs(un - pred) <= spacing / 10
        if ok:
            jn = psi_jet(qn, un, bits)
            ok = jn.duu > 0
        if not ok:
            h /= 2
            if h < hmin:
                raise TrackingError("lost the extremum track", last_good_q=q)
            continue
        if jn.value >= 0:
            return q, c, qn
        q, c = qn, un
        h = min(2 * h, (1 - q) / 16)


def _locate_merge(q_lo, c_lo, q_hi, ctx: PrecisionContext):
    """q in (q_lo, q_hi] where the tracked minimum value vanishes, and its location."""
    bits = ctx.bits
    state = {"c": c_lo}

    def value(qq):
        c = _crit_newton(qq, state["c"], bits)
        if c is None:
            raise TrackingError("critical point lost during refinement", last_good_q=q_lo)
        state["c"] = c
        return psi_jet(qq, c, bits).value

    def slope(qq):
        return psi_jet(qq, state["c"], bits).dq

    Q = bracketed_newton(value, slope, q_lo, q_hi, rtol=ctx.eps_root * pow2(-16),
                         max_iter=ctx.max_iter)
    U = _crit_newton(Q, state["c"], bits)
    return Q, U


def spectrum(k_max: int, ctx: PrecisionContext | None = None, progress=None) -> list[CriticalPair]:
    """The first ``k_max`` values q at which Psi(q, .) acquires a double root.

    The k-th value is found by following the k-th negative local minimum of
    Psi(q, .) as q grows from just above the previous value, then solving
    for the q where that minimum touches zero.
    """
    ctx = _ctx(ctx)
    if k_max < 1:
        raise DomainError("k_max must be positive")
    pairs: list[CriticalPair] = []
    with ctx.workprec():
        q_start = mpmath.mpf("0.1")
        for k in range(1, k_max + 1):
            c = _first_negative_minimum(q_start, ctx.bits, q_start ** (-(4 * k + 8)), ctx.max_iter)
            if c is None:
                raise TrackingError(f"no negative minimum to track for index {k}", last_good_q=q_start)
            q_lo, c_lo, q_hi = _track(q_start, c, ctx.bits)
            Q, U = _locate_merge(q_lo, c_lo, q_hi, ctx)
            jet = psi_jet(Q, U, ctx.bits)
            pair = CriticalPair(Q, U, k, abs(jet.value), abs(jet.du), k > VALIDATED_SPECTRUM_LENGTH)
            pairs.append(pair)
            if progress is not None:
                progress(pair)
            q_start = Q + (1 - Q) / 128
    return pairs


def spectrum_json(pairs: list[CriticalPair], bits: int) -> str:
    return json.dumps([p.to_dict(bits) for p in pairs], indent=1)


def critical_pair_first(ctx: PrecisionContext | None = None) -> CriticalPair:
    """Smallest spectrum point and its double root."""
    return spectrum(1, ctx)[0]


# ---------------------------------------------------------------------------

def functional_residual(q, u_hat, grid, ctx: PrecisionContext | None = None):
    """sup over grid of |F(x) - 1 - x F(q x)/F(-q)| with F(x) = Psi(q, -u_hat x)."""
    ctx = _ctx(ctx)
    with ctx.workprec():
        q, u_hat = mpmath.mpf(q), mpmath.mpf(u_hat)
        F = lambda x: psi_jet(q, -u_hat * x, ctx.bits).value
        pivot = F(-q)
        if abs(pivot) < ctx.eps_sign:
            raise DegenerateError("-q is a root of the candidate fixed point")
        worst = mpmath.mpf(0)
        for x in grid:
            x = mpmath.mpf(x)
            worst = max(worst, abs(F(x) - 1 - x * F(q * x) / pivot))
        return worst


def uniform_grid(size: int, lo=-1, hi=0) -> list:
    """``size`` equally spaced points from lo to hi inclusive."""
    if size < 2:
        raise DomainError("grid needs at least two points")
    lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
    return [lo + (hi - lo) * i / (size - 1) for i in range(size)]


def sample(q, lo, hi, samples: int, ctx: PrecisionContext | None = None) -> list:
    """(u, Psi(q, u)) on samples+1 equally spaced points of [lo, hi]."""
    ctx = _ctx(ctx)
    if samples < 1:
        raise DomainError("samples must be positive")
    with ctx.workprec():
        q = mpmath.mpf(q)
        _check_q(q)
        return [(u, psi_jet(q, u, ctx.bits).value) for u in uniform_grid(samples + 1, lo, hi)]


def sample_csv(rows: list, digits: int = 20) -> str:
    lines = ["u,psi"]
    for u, v in rows:
        lines.append(f"{mpmath.nstr(u, digits)},{mpmath.nstr(v, digits)}")
    return "\n".join(lines) + "\n"
