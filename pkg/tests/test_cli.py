import json

import pytest

from sectionhyp import cli
from sectionhyp.cache import CACHE_ENV
from sectionhyp.poly import Poly


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv(CACHE_ENV, str(d))
    monkeypatch.setattr(cli, "DEFAULT_CONFIG", tmp_path / "absent")
    return d


def test_minima_envelope(cache_dir, capsys):
    code, out, _ = run(["minima", "--count", "5"], capsys)
    env = json.loads(out)
    assert code == 0
    assert set(env) == {"tool_version", "command", "wall_time_ms", "payload", "checks"}
    assert env["command"]["name"] == "minima" and env["command"]["precision_bits"] == 256
    assert env["payload"]["m"][:2] == ["4.0", "3.375"]
    assert all(set(c) == {"name", "pass", "margin"} for c in env["checks"])


def test_cache_reuse_keeps_payload(cache_dir, capsys):
    first = json.loads(run(["sequence", "--degree", "9"], capsys)[1])
    assert (cache_dir / "extremal-256.json").exists()
    second = json.loads(run(["sequence", "--degree", "9"], capsys)[1])
    third = json.loads(run(["sequence", "--degree", "9", "--no-cache"], capsys)[1])
    assert first["payload"] == second["payload"] == third["payload"]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["minima"],
    ["theta-eval", "--q", "abc", "--from", "-1", "--to", "0", "--samples", "3"],
    ["minima", "--count", "3", "--precision-bits", "32"],
    ["interval-nest", "--iters", "3", "--format", "csv"],
])
def test_usage_errors_exit_one(cache_dir, capsys, argv):
    code, _, err = run(argv, capsys)
    assert code == 1 and err


def test_computational_error_exits_two(cache_dir, capsys):
    code, out, _ = run(["theta-eval", "--q", "1.5", "--from", "-1", "--to", "0", "--samples", "3"], capsys)
    assert code == 2
    assert json.loads(out)["payload"]["error"] == "DomainError"


def test_failed_checks_exit_three(cache_dir, capsys, tmp_path):
    # (1 + x)^2 (1 + x/3): real-rooted yet its ratios drop below 4
    path = tmp_path / "p.json"
    path.write_text(Poly.from_roots([-1, -1, -3]).to_json())
    code, out, _ = run(["certify", "--poly-file", str(path)], capsys)
    env = json.loads(out)
    assert code == 3
    names = {c["name"]: c["pass"] for c in env["checks"]}
    assert names["hyperbolic"] and not names["hutchinson"]


def test_theta_eval_csv_and_output(cache_dir, capsys, tmp_path):
    csv_path, out_path = tmp_path / "s.csv", tmp_path / "env.json"
    code, out, _ = run(["theta-eval", "--q", "1/4", "--from", "-10", "--to", "0", "--samples", "4",
                        "--csv", str(csv_path), "--output", str(out_path)], capsys)
    assert code == 0 and out == ""
    assert csv_path.read_text().splitlines()[0] == "u,psi"
    env = json.loads(out_path.read_text())
    assert len(env["payload"]["rows"]) == 5
    assert env["command"]["output_path"] == str(out_path)


def test_counterexample_command(cache_dir, capsys):
    code, out, _ = run(["counterexample", "--n", "6", "--k", "3", "--eps", "1/2"], capsys)
    env = json.loads(out)
    assert code == 0 and env["payload"]["real_roots"] < 6


def test_iterate_trace_csv(cache_dir, capsys, tmp_path):
    trace = tmp_path / "t.csv"
    code, out, _ = run(["iterate", "--q", "0.25", "--steps", "12", "--grid-size", "11",
                        "--precision-bits", "128", "--csv", str(trace)], capsys)
    env = json.loads(out)
    assert code == 0 and env["payload"]["verdict"] in ("Converging", "Indeterminate")
    assert len(trace.read_text().splitlines()) == 13


def test_config_file_and_flag_precedence(cache_dir, capsys, tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("precision_bits = 128\n# comment\ncache_dir = " + str(tmp_path / "cfgcache") + "\n")
    env = json.loads(run(["minima", "--count", "3", "--config", str(cfg)], capsys)[1])
    assert env["command"]["precision_bits"] == 128
    assert (cache_dir / "extremal-128.json").exists()
    env = json.loads(run(["minima", "--count", "3", "--config", str(cfg), "--precision-bits", "192"], capsys)[1])
    assert env["command"]["precision_bits"] == 192


def test_flags_accepted_before_subcommand(cache_dir, capsys):
    code, out, _ = run(["--format", "text", "minima", "--count", "3"], capsys)
    assert code == 0 and out.startswith("minima")


def test_bad_config_is_usage_error(cache_dir, capsys, tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("colour = blue\n")
    assert run(["minima", "--count", "3", "--config", str(cfg)], capsys)[0] == 1
