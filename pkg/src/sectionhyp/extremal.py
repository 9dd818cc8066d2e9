"""The extremal sequence T_1 = x+1, T_{j+1} = x T_j + A_{j+1} and its diagnostics.

Each new constant A_{j+1} is minus the value of S = x T_j at its rightmost
critical point xi_j, so T_{j+1} acquires a double root at xi_j.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath

from ._solve import bracketed_newton
from .errors import BracketError, ConstructionError, DomainError, PrecisionError, SeedError
from .limits import lower_bound_l0
from .poly import EXACT, Poly
from .precision import PrecisionContext, default_context, to_decimal, to_mpf
from . import rootkit

CACHE_VERSION = 1
MAX_ESCALATIONS = 3


class StepResult(NamedTuple):
    A: mpmath.mpf
    xi: mpmath.mpf
    T: Poly
    residual: mpmath.mpf


@dataclass(frozen=True)
class CheckEntry:
    name: str
    index: tuple
    passed: bool
    margin: object


@dataclass
class InvariantReport:
    entries: list = field(default_factory=list)

    def add(self, name, index, passed, margin):
        self.entries.append(CheckEntry(name, index, bool(passed), margin))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def by_name(self, name: str) -> list:
        return [e for e in self.entries if e.name == name]

    def summary(self) -> dict:
        """name -> (all passed, smallest margin)."""
        out = {}
        for e in self.entries:
            ok, worst = out.get(e.name, (True, None))
            m = e.margin
            out[e.name] = (ok and e.passed, m if worst is None or (m is not None and m < worst) else worst)
        return out


@dataclass
class ExtremalSequence:
    """Constants A_i, critical points xi_j, ratios m_i and per-step residuals.

    ``A[i]`` is A_{first_index + i}.  For the canonical run first_index is 0
    and A_0 = A_1 = 1; ``xi[j]`` is the critical point used to produce
    A[j + 2], and ``m[i]`` is A[i+1]**2 / (A[i] A[i+2]).
    """

    degree: int
    A: list
    xi: list
    m: list
    residuals: list
    ctx: PrecisionContext
    first_index: int = 0
    seed: Poly | None = None
    report: InvariantReport | None = None

    def T(self, k: int) -> Poly:
        """Monic T_k(x) = x^k + x^(k-1) + A_2 x^(k-2) + ... + A_k (canonical runs)."""
        if self.first_index != 0:
            raise DomainError("T(k) is defined for the canonical sequence only")
        if not 1 <= k <= self.degree:
            raise DomainError(f"k must lie in 1..{self.degree}")
        return Poly.floating(list(reversed(self.A[: k + 1])), self.ctx.bits)

    def p(self, k: int) -> Poly:
        """p_k(x) = 1 + x + A_2 x^2 + ... + A_k x^k."""
        return self.T(k).reverse()

    def xi_ratios(self) -> list:
        with self.ctx.workprec():
            return [self.xi[k] / self.xi[k - 1] for k in range(1, len(self.xi))]

    def to_dict(self) -> dict:
        b = self.ctx.bits
        return {
            "version": CACHE_VERSION,
            "precision_bits": b,
            "degree": self.degree,
            "A": [to_decimal(x, b) for x in self.A],
            "xi": [to_decimal(x, b) for x in self.xi],
            "m": [to_decimal(x, b) for x in self.m],
            "residuals": [to_decimal(x, b) for x in self.residuals],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict, ctx: PrecisionContext | None = None) -> "ExtremalSequence":
        if d.get("version") != CACHE_VERSION:
            raise DomainError("unsupported cache version")
        bits = int(d["precision_bits"])
        ctx = ctx if ctx is not None and ctx.bits == bits else PrecisionContext(bits=bits)
        conv = lambda xs: [to_mpf(x, bits) for x in xs]
        return cls(int(d["degree"]), conv(d["A"]), conv(d["xi"]), conv(d["m"]), conv(d["residuals"]), ctx)

    @classmethod
    def from_json(cls, text: str, ctx: PrecisionContext | None = None) -> "ExtremalSequence":
        return cls.from_dict(json.loads(text), ctx)

    def truncated(self, degree: int) -> "ExtremalSequence":
        """Canonical prefix through ``degree``."""
        if self.first_index != 0 or degree > self.degree:
            raise DomainError("cannot truncate beyond the computed degree")
        return ExtremalSequence(degree, self.A[: degree + 1], self.xi[: degree - 1], self.m[: degree - 1],
                                self.residuals[: degree - 1], self.ctx)


# ---------------------------------------------------------------------------

def _relative_residual(poly: Poly, x):
    v, s = poly.evaluate_with_scale(x)
    return abs(v) / s if s else abs(v)


def _critical_scan(dS: Poly, lo, hi, ctx):
    """Rightmost sign change of S' on (lo, hi) found on a fine grid."""
    n = 512
    xs = [lo + (hi - lo) * k / n for k in range(1, n)]
    vals = [dS(x) for x in xs]
    for k in range(len(xs) - 1, 0, -1):
        if (vals[k] < 0) != (vals[k - 1] < 0):
            return xs[k - 1], xs[k]
    raise ConstructionError("no critical point of x*T found between its rightmost root and 0")


def _step_from_S(S: Poly, lo_root, xi_prev, ctx: PrecisionContext):
    """Rightmost local minimum of S on (lo_root, 0) and the value there."""
    dS = S.derivative()
    ddS = dS.derivative()
    bracket = None
    if xi_prev is not None:
        cand = (xi_prev * mpmath.mpf("0.5"), xi_prev * mpmath.mpf("0.2"))
        if (dS(cand[0]) < 0) != (dS(cand[1]) < 0):
            bracket = cand
    if bracket is None:
        bracket = _critical_scan(dS, lo_root, mpmath.mpf(0), ctx)
    xi = bracketed_newton(dS.evaluate, ddS.evaluate, bracket[0], bracket[1],
                          rtol=ctx.eps_root, atol=ctx.eps_root ** 2, max_iter=ctx.max_iter)
    if ddS(xi) <= 0:
        raise ConstructionError("critical point found is not a local minimum")
    return xi, -S(xi)


def next_step(T: Poly, xi_prev=None, ctx: PrecisionContext | None = None) -> StepResult:
    """One extremal step: A = -S(xi) with xi the rightmost minimum of S = x T."""
    ctx = ctx or default_context()
    with ctx.workprec():
        Tf = T.to_float(ctx.bits) if T.mode == EXACT else Poly.floating(T.coeffs, ctx.bits)
        if Tf.leading <= 0 or any(c <= 0 for c in Tf.coeffs):
            raise DomainError("T must have positive coefficients")
        S = Tf.shift_up(1)
        # rightmost root of T bounds the search from the left
        lo_root = xi_prev * 3 if xi_prev is not None else -rootkit.cauchy_bound(Tf)
        if xi_prev is None:
            ivs = rootkit.isolate_roots(Tf, None, 0, ctx)
            if not ivs:
                raise ConstructionError("T has no negative root")
            lo_root = rootkit.refine_root(Tf, ivs[-1], ctx).root
        try:
            xi, A = _step_from_S(S, lo_root, xi_prev, ctx)
        except BracketError as exc:
            raise ConstructionError(str(exc)) from exc
        if A <= 0:
            raise ConstructionError("the extremal constant must be positive")
        T_next = Poly.floating((A,) + S.coeffs[1:], ctx.bits)
        residual = max(_relative_residual(T_next, xi), _relative_residual(T_next.derivative(), xi))
        if residual > ctx.eps_residual:
            raise PrecisionError(f"double-root residual {mpmath.nstr(residual, 5)} above tolerance",
                                 suggested_bits=2 * ctx.bits)
        return StepResult(A, xi, T_next, residual)


def _build(n: int, ctx: PrecisionContext) -> ExtremalSequence:
    with ctx.workprec():
        one = mpmath.mpf(1)
        T = Poly.floating([one, one], ctx.bits)
        A, xis, res = [one, one], [], []
        xi_prev = None
        for _ in range(2, n + 1):
            step = next_step(T, xi_prev, ctx)
            A.append(step.A)
            xis.append(step.xi)
            res.append(step.residual)
            T, xi_prev = step.T, step.xi
        m = [A[i] ** 2 / (A[i - 1] * A[i + 1]) for i in range(1, n)]
        return ExtremalSequence(n, A, xis, m, res, ctx)


def build_sequence(n: int, ctx: PrecisionContext | None = None, verify: bool = True) -> ExtremalSequence:
    """Canonical sequence through degree ``n``; precision doubles on a residual failure."""
    if n < 2:
        raise DomainError("degree must be at least 2")
    ctx = ctx or default_context()
    for attempt in range(MAX_ESCALATIONS + 1):
        try:
            seq = _build(n, ctx)
            break
        except PrecisionError:
            if attempt == MAX_ESCALATIONS:
                raise
            ctx = ctx.doubled()
    if verify:
        seq.report = verify_step_invariants(seq)
    return seq


# ---------------------------------------------------------------------------
# general seeds

@dataclass(frozen=True)
class GeneralSeed:
    S1: Poly
    rightmost_min_ok: bool

    @classmethod
    def from_poly(cls, S1: Poly, ctx: PrecisionContext | None = None) -> "GeneralSeed":
        """Validate S1 (real, simple, negative roots; positive leading term) and its minima."""
        ctx = ctx or default_context()
        if S1.degree < 1 or S1.leading <= 0:
            raise SeedError("seed needs degree >= 1 and a positive leading coefficient")
        v = rootkit.is_hyperbolic(S1, ctx)
        if v.status != rootkit.Status.HYPERBOLIC:
            raise SeedError(f"seed is not hyperbolic with simple roots ({v.status.value})")
        if rootkit.sturm_count(S1, 0, None, ctx) or S1(0) == 0:
            raise SeedError("seed roots must all be negative")
        return cls(S1, _rightmost_min_dominates(S1, ctx))


def _local_minima(S: Poly, ctx) -> list:
    """(x, S(x)) for the local minima of S, left to right."""
    dS = S.derivative()
    out = []
    with ctx.workprec():
        for iv in rootkit.isolate_roots(dS, None, None, ctx):
            x = rootkit.refine_root(dS, iv, ctx).root
            Sf = S if S.mode != EXACT else S.to_float(ctx.bits)
            if Sf.derivative().derivative()(x) > 0:
                out.append((x, Sf(x)))
    return out


def _rightmost_min_dominates(S: Poly, ctx) -> bool:
    minima = _local_minima(S, ctx)
    if len(minima) <= 1:
        return True
    tol = ctx.eps_residual * max(1, max(abs(v) for _, v in minima))
    right = minima[-1][1]
    return all(right >= v - tol for _, v in minima[:-1])


def build_from_seed(seed: GeneralSeed, steps: int, ctx: PrecisionContext | None = None) -> ExtremalSequence:
    """S_{j+1} = x (S_j - S_j(xi_j)) started from ``seed.S1``.

    A degree-one seed first passes through S_2 = x S_1.  The returned
    sequence stores A_m = -S_{m-1}(xi_{m-1}) from the first genuine step on,
    with ``first_index`` set accordingly.
    """
    if not seed.rightmost_min_ok:
        raise SeedError("the rightmost local minimum of the seed is not its largest")
    ctx = ctx or default_context()
    with ctx.workprec():
        S = seed.S1 if seed.S1.mode != EXACT else seed.S1.to_float(ctx.bits)
        S = Poly.floating(S.coeffs, ctx.bits)
        index = 1
        if S.degree == 1:
            S = S.shift_up(1)
            index = 2
        A, xis, res = [], [], []
        xi_prev = None
        first = index + 1
        for _ in range(steps):
            if xi_prev is None:
                minima = _local_minima(S, ctx)
                if not minima:
                    raise ConstructionError("seed polynomial has no local minimum")
                xi = minima[-1][0]
                dS = S.derivative()
                xi = bracketed_newton(dS.evaluate, dS.derivative().evaluate,
                                      xi - abs(xi) / 8 - ctx.eps_root, xi + abs(xi) / 8 + ctx.eps_root,
                                      rtol=ctx.eps_root, atol=ctx.eps_root ** 2, max_iter=ctx.max_iter) \
                    if xi != 0 else xi
                a = -S(xi)
            else:
                xi, a = _step_from_S(S, xi_prev * 3, xi_prev, ctx)
            if a <= 0:
                raise ConstructionError("subtracted minimum must be negative")
            nxt = S + Poly.floating([a], ctx.bits)
            res.append(max(_relative_residual(nxt, xi), _relative_residual(nxt.derivative(), xi)))
            A.append(a)
            xis.append(xi)
            S = nxt.shift_up(1)
            xi_prev = xi
        m = [A[i] ** 2 / (A[i - 1] * A[i + 1]) for i in range(1, len(A) - 1)]
        return ExtremalSequence(index + steps, A, xis, m, res, ctx, first_index=first, seed=seed.S1)


# ---------------------------------------------------------------------------

def scaled_reverted(seq: ExtremalSequence, i: int) -> Poly:
    """P_i(-zeta_i x) / P_i(0): double root moved to -1, constant term 1."""
    if not 2 <= i <= seq.degree:
        raise DomainError(f"i must lie in 2..{seq.degree}")
    with seq.ctx.workprec():
        P = seq.T(i)
        zeta = seq.xi[i - 2]
        return P.scale_var(-zeta) * (1 / seq.A[i])


def verify_step_invariants(seq: ExtremalSequence, tolerance=None) -> InvariantReport:
    """Check the ratio, decay, sign-pattern and monotonicity inequalities per index.

    Every failed inequality becomes a report entry; nothing is raised.
    """
    rep = InvariantReport()
    ctx = seq.ctx
    with ctx.workprec():
        tol = tolerance if tolerance is not None else ctx.eps_residual
        l0 = lower_bound_l0(ctx)
        third = mpmath.mpf(1) / 3
        A, xi, m = seq.A, seq.xi, seq.m

        for k, ratio in enumerate(seq.xi_ratios(), start=1):
            rep.add("xi_ratio_upper", (k,), ratio <= third + tol, third - ratio)
            rep.add("xi_ratio_lower", (k,), ratio > l0, ratio - l0)
            if k >= 2:
                rep.add("xi_ratio_interior", (k,), ratio < third - tol, third - ratio)

        for j, r in enumerate(seq.residuals):
            rep.add("double_root", (j,), r <= ctx.eps_residual, ctx.eps_residual - r)

        for i in range(len(m) - 1):
            rep.add("m_decreasing", (i + 1,), m[i] > m[i + 1], m[i] - m[i + 1])
        for i, v in enumerate(m, start=1):
            rep.add("m_bounds", (i,), 3 < v <= 4 + tol, min(v - 3, 4 - v))

        for j in range(len(xi) - 1):
            rep.add("xi_increasing", (j,), xi[j] < xi[j + 1] < 0, xi[j + 1] - xi[j])
        for j in range(len(A) - 1):
            if j >= 2:
                rep.add("A_decreasing", (j,), A[j] > A[j + 1] > 0, A[j] - A[j + 1])

        if seq.first_index == 0:
            _check_estimate(seq, rep)
            _check_signchange(seq, rep)
    return rep


def _check_estimate(seq: ExtremalSequence, rep: InvariantReport):
    """A_l <= A_m (4|xi_{m-1}|)^(l-m) / 3^((l-m)(l-m+5)/2) for 1 < m < l."""
    A, xi = seq.A, seq.xi
    n = seq.degree
    for mm in range(2, n + 1):
        # xi_{m-1} in the one-based labelling is seq.xi[m-2]
        base = 4 * abs(xi[mm - 2])
        for ll in range(mm + 1, n + 1):
            d = ll - mm
            bound = A[mm] * base ** d / mpmath.mpf(3) ** (d * (d + 5) // 2)
            margin = 1 - A[ll] / bound
            rep.add("estimate", (mm, ll), margin >= -seq.ctx.eps_residual, margin)


def _check_signchange(seq: ExtremalSequence, rep: InvariantReport):
    """sgn S_k(xi_s) = (-1)^(k-s+1) for 1 <= s <= k-2, with S_k = x T_k."""
    n = seq.degree
    for k in range(3, n + 1):
        S = seq.T(k).shift_up(1)
        for s in range(1, k - 1):
            v = S(seq.xi[s - 1])
            expected = 1 if (k - s + 1) % 2 == 0 else -1
            rep.add("signchange", (k, s), v * expected > 0, v * expected)


def root_structure(seq: ExtremalSequence, k: int) -> rootkit.HyperbolicityVerdict:
    """Verdict for T_k: expected Boundary with the double root at xi_{k-1}."""
    return rootkit.is_hyperbolic(seq.T(k), seq.ctx)


def m_limit_gap(seq: ExtremalSequence, q_limit) -> list:
    """|m_i - 1/q_limit| for every computed i."""
    with seq.ctx.workprec():
        target = 1 / mpmath.mpf(q_limit)
        return [abs(v - target) for v in seq.m]
