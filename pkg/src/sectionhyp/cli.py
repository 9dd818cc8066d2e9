"""Command-line entry point: one subcommand per computation, JSON envelopes out."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath

from . import __version__, cones, extremal, iterate, limits, rootkit, theta
from .cache import CACHE_ENV, Cache, default_cache_dir
from .errors import SectionHypError
from .poly import Poly
from .precision import DEFAULT_BITS, PrecisionContext, reported_digits, to_decimal

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_CHECKS = 0, 1, 2, 3
FORMATS = ("json", "csv", "text")
DEFAULT_CONFIG = Path.home() / ".config" / "sectionhyp" / "config"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _common(parser: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    parser.add_argument("--precision-bits", type=int, default=s, help="mantissa bits (>= 64)")
    parser.add_argument("--config", default=s, help="key = value file with precision_bits / cache_dir")
    parser.add_argument("--cache-dir", default=s, help="directory for cached sequences and spectra")
    parser.add_argument("--no-cache", action="store_true", default=s, help="bypass the cache")
    parser.add_argument("--format", choices=FORMATS, default=s)
    parser.add_argument("--output", default=s, help="write the main output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sectionhyp", description=__doc__)
    _common(parser)
    sub = parser.add_subparsers(dest="name", parser_class=_Parser)
    sub.required = True

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        return p

    p = cmd("minima", "table of the ratio minima m_1 .. m_N")
    p.add_argument("--count", type=int, required=True)
    p = cmd("sequence", "extremal constants, critical points and invariant checks")
    p.add_argument("--degree", type=int, required=True)
    p = cmd("solve-lambda", "root of the limiting ratio equation, with the interval nest")
    p.add_argument("--iters", type=int, default=20)
    p = cmd("interval-nest", "nested intervals for the limiting ratio")
    p.add_argument("--iters", type=int, required=True)
    p = cmd("spectrum", "values of q where Psi(q, .) has a double root")
    p.add_argument("--count", type=int, required=True)
    p = cmd("theta-eval", "sample Psi(q, u) on an interval")
    p.add_argument("--q", required=True)
    p.add_argument("--from", dest="lo", required=True)
    p.add_argument("--to", dest="hi", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--csv", help="also write the samples to this CSV file")
    p = cmd("theta-roots", "first real roots of Psi(q, .)")
    p.add_argument("--q", required=True)
    p.add_argument("--count", type=int, required=True)
    p = cmd("iterate", "run the polynomial iteration")
    p.add_argument("--q", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed-file", help="polynomial JSON for f_1 (default x+1)")
    p.add_argument("--grid-size", type=int, default=101)
    p.add_argument("--snapshot-steps", default="", help="comma-separated steps to sample on the grid")
    p.add_argument("--csv", help="also write the step,sup_norm,sup_dist trace here")
    p.add_argument("--snapshot-csv", help="write sampled iterates here")
    p = cmd("certify", "hyperbolicity verdicts and ratio checks for a polynomial")
    p.add_argument("--poly-file", required=True)
    p.add_argument("--csv", help="also write the log-coefficient image here")
    p = cmd("counterexample", "polynomial violating one ratio bound with a non-real root pair")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", default="1")
    return parser


# ---------------------------------------------------------------------------
# configuration

def read_config(path: str | os.PathLike) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line without '=': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ("precision_bits", "cache_dir"):
            raise UsageError(f"unknown config key {key!r}")
        out[key] = value
    return out


def resolve(ns: argparse.Namespace) -> dict:
    """Merge flags, config file and environment into one configuration."""
    opts = vars(ns)
    config_path = opts.get("config")
    cfg = {}
    if config_path:
        cfg = read_config(config_path)
    elif DEFAULT_CONFIG.exists():
        cfg = read_config(DEFAULT_CONFIG)
    bits = opts.get("precision_bits", cfg.get("precision_bits", DEFAULT_BITS))
    try:
        bits = int(bits)
    except ValueError:
        raise UsageError(f"precision_bits must be an integer, got {bits!r}")
    if bits < 64:
        raise UsageError("precision bits must be at least 64")
    if opts.get("no_cache"):
        cache_dir = None
    else:
        cache_dir = opts.get("cache_dir") or os.environ.get(CACHE_ENV) or cfg.get("cache_dir") \
            or str(default_cache_dir())
    args = {k: v for k, v in opts.items()
            if k not in ("name", "precision_bits", "config", "cache_dir", "no_cache", "format", "output")}
    return {
        "name": ns.name,
        "args": args,
        "precision_bits": bits,
        "output_path": opts.get("output"),
        "format": opts.get("format", "json"),
        "cache_dir": cache_dir,
    }


# ---------------------------------------------------------------------------
# helpers

def _dec(x, bits):
    return to_decimal(x, bits)


def _check(name: str, passed: bool, margin=None, bits: int = 53) -> dict:
    return {"name": name, "pass": bool(passed), "margin": None if margin is None else _dec(margin, bits)}


def _report_checks(rep: extremal.InvariantReport) -> list:
    out = []
    for name, (ok, worst) in rep.summary().items():
        out.append(_check(name, ok, worst))
    return out


def _parse_q(text: str, ctx: PrecisionContext, cache: Cache):
    key = text.strip().lower()
    if key in ("qtilde", "q-tilde", "first-spectrum"):
        return cache.spectrum(1, ctx)[0].q_hat
    if key in ("master-root", "lambda"):
        return limits.solve_master(ctx).lam
    with ctx.workprec():
        try:
            if "/" in key:
                f = Fraction(key)
                return mpmath.mpf(f.numerator) / f.denominator
            return mpmath.mpf(text)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse q value {text!r}")


def _parse_scalar(text: str, ctx):
    with ctx.workprec():
        try:
            if "/" in text:
                f = Fraction(text)
                return mpmath.mpf(f.numerator) / f.denominator
            return mpmath.mpf(text)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse number {text!r}")


def _load_poly(path: str) -> Poly:
    try:
        return Poly.from_json(Path(path).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read polynomial file {path!r}: {exc}")


# ---------------------------------------------------------------------------
# commands; each returns (payload, checks, side_tables)

def _minima(a, ctx, cache):
    if a["count"] < 1:
        raise UsageError("--count must be positive")
    seq = cache.extremal(a["count"] + 1, ctx)
    rep = extremal.verify_step_invariants(seq)
    b = ctx.bits
    payload = {"m": [_dec(x, b) for x in seq.m], "count": a["count"]}
    keep = ("m_decreasing", "m_bounds", "double_root")
    checks = [c for c in _report_checks(rep) if c["name"] in keep]
    return payload, checks, {}


def _sequence(a, ctx, cache):
    if a["degree"] < 2:
        raise UsageError("--degree must be at least 2")
    seq = cache.extremal(a["degree"], ctx)
    rep = extremal.verify_step_invariants(seq)
    payload = seq.to_dict()
    payload.pop("version")
    return payload, _report_checks(rep), {}


def _solve_lambda(a, ctx, cache):
    report = limits.limits_report(a["iters"], ctx)
    sol = limits.solve_master(ctx)
    nest = limits.interval_nest(a["iters"], ctx)
    with ctx.workprec():
        spread = max(abs(nest.l[-1] - sol.lam), abs(nest.r[-1] - sol.lam))
    bound = limits.reciprocal_power_sum_bound()
    checks = [
        _check("gap_residual", sol.gap_residual <= ctx.eps_residual, ctx.eps_residual - sol.gap_residual),
        _check("nest_agrees_with_root", spread < mpmath.mpf("1e-6"), spread),
        _check("l0_residual", limits.l0_residual(ctx) <= ctx.eps_residual),
        _check("reciprocal_sum_below_11_16", bound.holds),
    ]
    return report, checks, {}


def _interval_nest(a, ctx, cache):
    nest = limits.interval_nest(a["iters"], ctx)
    b = ctx.bits
    payload = {"nest": nest.to_dict(b), "widths": [_dec(w, 53) for w in nest.widths],
               "converged_at": nest.converged_at}
    with ctx.workprec():
        halving = all(nest.widths[i + 1] < nest.widths[i] / 2 for i in range(len(nest.widths) - 1)
                      if nest.widths[i + 1] > ctx.eps_root)
        inside = all(nest.l[0] <= x <= nest.r[0] for x in nest.l + nest.r)
    checks = [_check("widths_halve", halving), _check("nest_inside_initial_interval", inside)]
    return payload, checks, {}


def _spectrum(a, ctx, cache):
    if a["count"] < 1:
        raise UsageError("--count must be positive")
    pairs = cache.spectrum(a["count"], ctx)
    payload = [p.to_dict(ctx.bits) for p in pairs]
    worst = max(max(p.residual_psi, p.residual_dpsi) for p in pairs)
    increasing = all(pairs[i].q_hat < pairs[i + 1].q_hat for i in range(len(pairs) - 1))
    checks = [_check("residuals", worst <= ctx.eps_residual, ctx.eps_residual - worst),
              _check("strictly_increasing", increasing)]
    if a["count"] > theta.VALIDATED_SPECTRUM_LENGTH:
        checks.append(_check("within_validated_range", True, None))
    return payload, checks, {}


def _theta_eval(a, ctx, cache):
    q = _parse_q(a["q"], ctx, cache)
    lo, hi = _parse_scalar(a["lo"], ctx), _parse_scalar(a["hi"], ctx)
    if a["samples"] < 1:
        raise UsageError("--samples must be positive")
    rows = theta.sample(q, lo, hi, a["samples"], ctx)
    with ctx.workprec():
        bounds = [theta.psi_jet(q, u, ctx.bits).bound for u, _ in rows]
    csv_text = theta.sample_csv(rows)
    payload = {"q": _dec(q, ctx.bits), "from": _dec(lo, ctx.bits), "to": _dec(hi, ctx.bits),
               "samples": a["samples"], "rows": [{"u": _dec(u, 64), "psi": _dec(v, 64)} for u, v in rows]}
    worst = max(bounds)
    checks = [_check("truncation_bound", worst <= ctx.eps_residual, worst)]
    return payload, checks, {"csv": csv_text, "csv_path": a.get("csv")}


def _theta_roots(a, ctx, cache):
    q = _parse_q(a["q"], ctx, cache)
    res = theta.real_roots(q, a["count"], ctx)
    with ctx.workprec():
        residuals = [abs(theta.psi_jet(q, r, ctx.bits).value) for r in res.roots]
    payload = {"q": _dec(q, ctx.bits), "roots": [_dec(r, ctx.bits) for r in res.roots],
               "complete": res.complete,
               "certificate": None if res.certificate is None else
               {"m": res.certificate.m, "ok": res.certificate.ok,
                "certified_real_roots": res.certificate.certified_real_roots}}
    worst = max(residuals) if residuals else mpmath.mpf(0)
    checks = [_check("enumeration_complete", res.complete),
              _check("root_residuals", worst <= ctx.eps_residual, worst)]
    return payload, checks, {}


def _iterate(a, ctx, cache):
    q = _parse_q(a["q"], ctx, cache)
    f1 = _load_poly(a["seed_file"]) if a.get("seed_file") else Poly.exact([1, 1])
    snaps = tuple(int(s) for s in a["snapshot_steps"].split(",") if s.strip()) if a["snapshot_steps"] else ()
    tr = iterate.run(q, f1, a["steps"], a["grid_size"], ctx, snapshot_steps=snaps)
    payload = tr.to_dict(ctx.bits)
    checks = [_check("normalization", tr.normalization_error <= ctx.eps_residual, tr.normalization_error),
              _check("completed_all_steps", tr.halted_at is None)]
    side = {"csv": tr.trace_csv(), "csv_path": a.get("csv")}
    if a.get("snapshot_csv"):
        side["extra"] = [(a["snapshot_csv"], tr.snapshot_csv())]
    return payload, checks, side


def _certify(a, ctx, cache):
    p = _load_poly(a["poly_file"])
    if p.degree < 1:
        raise UsageError("polynomial must have degree >= 1")
    verdict = rootkit.is_hyperbolic(p, ctx)
    payload = {"degree": p.degree, "hyperbolicity": verdict.status.value,
               "distinct_real_roots": verdict.distinct_real_roots}
    checks = [_check("hyperbolic", verdict.is_real_rooted)]
    side = {}
    if all(c > 0 for c in p.coeffs):
        sections = rootkit.is_section_hyperbolic(p, ctx)
        payload["sections"] = [v.status.value for v in sections]
        checks.append(_check("section_hyperbolic",
                             all(v.status != rootkit.Status.NOT_HYPERBOLIC for v in sections)))
        m_table = cache.extremal(max(p.degree, 2), ctx).m if p.degree >= 2 else []
        rep = cones.cone_report(p, m_table=m_table)
        payload["cones"] = rep.to_dict(ctx.bits)
        checks.append(_check("hutchinson", rep.hutchinson_ok,
                             min(rep.hutchinson_margins) if rep.hutchinson_margins else None))
        checks.append(_check("newton", rep.newton_ok, min(rep.newton_margins) if rep.newton_margins else None))
        checks.append(_check("petrovitch", bool(rep.petrovitch_ok),
                             min(rep.petrovitch_margins) if rep.petrovitch_margins else None))
        if p.degree >= 2:
            d = cones.delta_inequality_check(p)
            checks.append(_check("delta_at_least_3", not d.falsified, d.min_delta - 3))
        side = {"csv": rep.log_image_csv(), "csv_path": a.get("csv")}
    return payload, checks, side


def _counterexample(a, ctx, cache):
    try:
        eps = Fraction(a["eps"])
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse eps {a['eps']!r}")
    res = cones.hutchinson_counterexample_report(a["n"], a["k"], eps, ctx)
    rep = cones.cone_report(res.poly)
    others = [r for i, r in enumerate(rep.ratios, start=1) if i != a["k"]]
    payload = {"poly": res.poly.to_dict(), "eps": str(res.eps), "halvings": res.halvings,
               "real_roots": res.real_roots, "violating_index": res.violating_index,
               "ratios": [str(r) for r in rep.ratios]}
    checks = [_check("conjugate_pair_certified", res.real_roots < a["n"], a["n"] - res.real_roots),
              _check("other_ratios_at_least_4", all(r >= 4 for r in others),
                     min(others) - 4 if others else None),
              _check("ratio_at_k_below_4", rep.ratios[a["k"] - 1] < 4, 4 - rep.ratios[a["k"] - 1])]
    return payload, checks, {}


COMMANDS = {
    "minima": _minima,
    "sequence": _sequence,
    "solve-lambda": _solve_lambda,
    "interval-nest": _interval_nest,
    "spectrum": _spectrum,
    "theta-eval": _theta_eval,
    "theta-roots": _theta_roots,
    "iterate": _iterate,
    "certify": _certify,
    "counterexample": _counterexample,
}


def _round_reported(obj, digits: int):
    """Shorten decimal strings to the digits the working precision supports.

    Serialized values carry every bit so that caches round-trip; the last
    few of those digits are noise that a rerun at higher precision changes.
    """
    if isinstance(obj, dict):
        return {k: _round_reported(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_reported(v, digits) for v in obj]
    if isinstance(obj, str) and "/" not in obj and sum(ch.isdigit() for ch in obj) > digits:
        try:
            with mpmath.workprec(4 * digits + 64):
                return mpmath.nstr(mpmath.mpf(obj), digits, min_fixed=-4, max_fixed=20)
        except ValueError:
            return obj
    return obj


def _text_summary(env: dict) -> str:
    lines = [f"{env['command']['name']}  ({env['wall_time_ms']} ms)"]
    payload = env["payload"]
    if isinstance(payload, dict):
        for k, v in payload.items():
            if isinstance(v, (str, int, float, bool)) or v is None:
                lines.append(f"  {k}: {v}")
            elif isinstance(v, list):
                lines.append(f"  {k}: {len(v)} entries")
    else:
        lines.append(f"  {len(payload)} entries")
    for c in env["checks"]:
        lines.append(f"  [{'ok' if c['pass'] else 'FAIL'}] {c['name']}" + (f" (margin {c['margin']})" if c["margin"] else ""))
    return "\n".join(lines) + "\n"


def dispatch(argv: list[str]) -> tuple[dict, int, dict]:
    """Run one command; returns (envelope, exit code, side outputs)."""
    ns = build_parser().parse_args(argv)
    config = resolve(ns)
    ctx = PrecisionContext(bits=config["precision_bits"])
    cache = Cache(config["cache_dir"])
    command = {k: config[k] for k in ("name", "args", "precision_bits", "output_path", "format")}
    start = time.perf_counter()
    side: dict = {}
    try:
        payload, checks, side = COMMANDS[config["name"]](config["args"], ctx, cache)
        payload = _round_reported(payload, reported_digits(ctx.bits))
        code = EXIT_OK if all(c["pass"] for c in checks) else EXIT_CHECKS
    except (SectionHypError, ArithmeticError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        checks = []
        code = EXIT_COMPUTE
    elapsed = int(round((time.perf_counter() - start) * 1000))
    env = {"tool_version": __version__, "command": command, "wall_time_ms": elapsed,
           "payload": payload, "checks": checks}
    return env, code, side


def emit(env: dict, side: dict, fmt: str, output: str | None, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "csv":
        if "csv" not in side:
            raise UsageError(f"command {env['command']['name']} has no CSV output")
        text = side["csv"]
    elif fmt == "text":
        text = _text_summary(env)
    else:
        text = json.dumps(env, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        stream.write(text)
    if side.get("csv_path"):
        Path(side["csv_path"]).write_text(side["csv"])
    for path, content in side.get("extra", []):
        Path(path).write_text(content)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        env, code, side = dispatch(argv)
        emit(env, side, env["command"]["format"], env["command"]["output_path"])
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except OSError as exc:
        sys.stderr.write(f"sectionhyp: {exc}\n")
        return EXIT_COMPUTE
    return code


if __name__ == "__main__":
    sys.exit(main())
