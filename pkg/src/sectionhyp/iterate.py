"""The polynomial iteration f_j(x) = 1 + x f_{j-1}(q x) / f_{j-1}(-q)."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath

from . import rootkit
from .errors import DegenerateError, DomainError, IncompleteEnumeration
from .poly import EXACT, Poly
from .precision import PrecisionContext, default_context, pow2, to_decimal
from .theta import psi_jet, real_roots, uniform_grid

DIVERGENCE_THRESHOLD = 1000
MONOTONE_WINDOW = 1 / 3


class Verdict(str, enum.Enum):
    CONVERGING = "Converging"
    DIVERGING = "Diverging"
    INDETERMINATE = "Indeterminate"


def _as_float(f: Poly, ctx: PrecisionContext) -> Poly:
    if f.mode == EXACT:
        return f.to_float(ctx.bits)
    return f if f.bits == ctx.bits else Poly.floating(f.coeffs, ctx.bits)


def iterate_step(f: Poly, q, ctx: PrecisionContext | None = None) -> Poly:
    """1 + x f(q x) / f(-q)."""
    ctx = ctx or default_context()
    with ctx.workprec():
        f = _as_float(f, ctx)
        q = mpmath.mpf(q)
        pivot = f(-q)
        if abs(pivot) < ctx.eps_sign:
            raise DegenerateError("-q is (numerically) a root of the previous iterate")
        scaled = f.scale_var(q) * (1 / pivot)
        return Poly.floating((mpmath.mpf(1),) + scaled.coeffs, ctx.bits)


class FixedPoint(NamedTuple):
    poly: Poly
    u_hat: mpmath.mpf
    truncation_bound: mpmath.mpf


def fixed_point(q, branch: int = 1, ctx: PrecisionContext | None = None) -> FixedPoint:
    """Taylor polynomial of Psi(q, -u_hat x), u_hat the branch-th real root by |u|.

    The degree is the first one whose dropped tail is below 2^-(bits+8) on [-1, 1].
    """
    ctx = ctx or default_context()
    if branch < 1:
        raise DomainError("branch numbering starts at 1")
    with ctx.workprec():
        q = mpmath.mpf(q)
        if not 0 < q < 1:
            raise DomainError("q must lie in (0, 1)")
        enum_ = real_roots(q, branch, ctx)
        if len(enum_.roots) < branch:
            raise IncompleteEnumeration(f"only {len(enum_.roots)} real roots found")
        u_hat = enum_.roots[branch - 1]
        tol = pow2(-(ctx.bits + 8))
        coeffs = [mpmath.mpf(1)]
        c, j, qpow = mpmath.mpf(1), 0, mpmath.mpf(1)
        x = -u_hat
        while True:
            qpow *= q
            ratio = qpow * abs(x)
            if j >= 2 and ratio <= 0.5 and abs(c) <= tol:
                break
            c = c * qpow * x
            coeffs.append(c)
            j += 1
        return FixedPoint(Poly.floating(coeffs, ctx.bits), u_hat, 2 * abs(c))


def in_hypothesis(f1: Poly, ctx: PrecisionContext | None = None) -> bool:
    """True for f1 = (x+1) Q with Q hyperbolic and every root of Q below -1."""
    ctx = ctx or default_context()
    if f1.degree < 1:
        return False
    if f1.mode == EXACT and f1(-1) != 0:
        return False
    one = Poly((1, 1), f1.mode, f1.bits)
    Q = rootkit._exact_quotient(f1, one)
    if f1.mode != EXACT:
        v, s = f1.evaluate_with_scale(-1)
        if abs(v) > ctx.eps_residual * s:
            return False
    if Q.degree == 0:
        return True
    verdict = rootkit.is_hyperbolic(Q, ctx)
    if not verdict.is_real_rooted:
        return False
    return rootkit.sturm_count(Q, -1, None, ctx) == 0 and Q(-1) != 0


@dataclass
class IterationTrace:
    q: mpmath.mpf
    f1: Poly
    steps: int
    grid: list
    sup_dist: list
    sup_norm: list
    verdict: Verdict
    in_hypothesis: bool
    normalization_error: mpmath.mpf
    halted_at: int | None = None
    halt_reason: str | None = None
    snapshots: dict = field(default_factory=dict)

    def trace_csv(self, digits: int = 20) -> str:
        lines = ["step,sup_norm,sup_dist"]
        for j, (n, d) in enumerate(zip(self.sup_norm, self.sup_dist), start=1):
            lines.append(f"{j},{mpmath.nstr(n, digits)},{mpmath.nstr(d, digits)}")
        return "\n".join(lines) + "\n"

    def snapshot_csv(self, digits: int = 20) -> str:
        steps = sorted(self.snapshots)
        lines = ["x," + ",".join(f"f{j}" for j in steps)]
        for i, x in enumerate(self.grid):
            row = [mpmath.nstr(x, digits)] + [mpmath.nstr(self.snapshots[j][i], digits) for j in steps]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_dict(self, bits: int) -> dict:
        return {
            "q": to_decimal(self.q, bits),
            "f1": self.f1.to_dict(),
            "steps": self.steps,
            "grid_size": len(self.grid),
            "verdict": self.verdict.value,
            "in_hypothesis": self.in_hypothesis,
            "halted_at": self.halted_at,
            "halt_reason": self.halt_reason,
            "normalization_error": to_decimal(self.normalization_error, 53),
            "sup_norm": [to_decimal(x, 53) for x in self.sup_norm],
            "sup_dist": [to_decimal(x, 53) for x in self.sup_dist],
        }


def classify(sup_dist: list, sup_norm: list, noise_floor, divergence_threshold=DIVERGENCE_THRESHOLD,
             window=MONOTONE_WINDOW) -> Verdict:
    """Diverging once a sup norm exceeds the threshold; Converging when the distance
    never rises over the final ``window`` of steps (rises inside the noise floor are
    ignored) and ends below where the window started or at the noise floor."""
    if any(n > divergence_threshold for n in sup_norm):
        return Verdict.DIVERGING
    n = len(sup_dist)
    if n < 3:
        return Verdict.INDETERMINATE
    start = n - max(2, int(round(n * window)))
    tail = sup_dist[start:]
    for a, b in zip(tail, tail[1:]):
        if b > a and b > noise_floor:
            return Verdict.INDETERMINATE
    if tail[-1] < tail[0] or tail[-1] <= noise_floor:
        return Verdict.CONVERGING
    return Verdict.INDETERMINATE


def run(q, f1: Poly, steps: int, grid_size: int = 101, ctx: PrecisionContext | None = None,
        divergence_threshold=DIVERGENCE_THRESHOLD, snapshot_steps=(), window=MONOTONE_WINDOW) -> IterationTrace:
    """Iterate from f1 for ``steps`` steps, measuring sup norms and the distance
    to the branch-1 fixed point on an equally spaced grid of [-1, 0]."""
    ctx = ctx or default_context()
    if steps < 1:
        raise DomainError("steps must be positive")
    with ctx.workprec():
        q = mpmath.mpf(q)
        grid = uniform_grid(grid_size)
        u_hat = real_roots(q, 1, ctx).roots
        if not u_hat:
            raise IncompleteEnumeration("Psi(q, .) has no real root in the search window")
        target = [psi_jet(q, -u_hat[0] * x, ctx.bits).value for x in grid]
        f = _as_float(f1, ctx)
        if abs(f(-q)) < ctx.eps_sign:
            raise DegenerateError("f1(-q) vanishes")
        hyp = in_hypothesis(f1, ctx)
        dists, norms, snaps = [], [], {}
        norm_err = mpmath.mpf(0)
        halted, reason = None, None
        for j in range(1, steps + 1):
            if j > 1:
                try:
                    f = iterate_step(f, q, ctx)
                except DegenerateError as exc:
                    halted, reason = j, str(exc)
                    break
                norm_err = max(norm_err, abs(f(0) - 1), abs(f(-1)))
            vals = [f(x) for x in grid]
            norms.append(max(abs(v) for v in vals))
            dists.append(max(abs(v - t) for v, t in zip(vals, target)))
            if j in snapshot_steps:
                snaps[j] = vals
        verdict = classify(dists, norms, 10 * ctx.eps_residual, divergence_threshold, window)
        return IterationTrace(q, f1, steps, grid, dists, norms, verdict, hyp, norm_err, halted, reason, snaps)
