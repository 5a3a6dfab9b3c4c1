import json
import subprocess
import sys

import pytest

from grushinlab.cli import ConfigError, main, validate_config


def _run(tmp_path, command, cfg, *extra, out="out"):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / out
    code = main([command, "--config", str(path), "--out", str(out_dir), *extra])
    manifest = json.loads((out_dir / "manifest.json").read_text())
    return code, out_dir, manifest


EXPONENTS = {"spec": {"kind": "grusin", "n": 1, "m": 1, "alpha": 0.0, "betas": [2.0]},
             "p": 2.0, "expect": {"D": 3.0}, "self_check_samples": 20}
ELLIPTIC = {"p": 2.0, "alpha": 1.5, "ladder": [0.0625, 0.03125, 0.015625]}
FLOW = {"p": 2.0, "alpha": 0.0, "h": 0.01, "radius": 0.05, "tau": 1e-3, "box": [-10, 10],
        "record_times": [0.01, 0.02, 0.04, 0.07, 0.1], "slope_tol": 0.1}
INEQUALITIES = {
    "scale_invariance": [
        {"spec": {"kind": "monomial", "alphas": [1.0]}, "counts": [2049]},
        {"spec": {"kind": "monomial", "alphas": [1.0]}, "counts": [2049], "D": 2.5,
         "expect_pass": False},
    ],
    "truncator": [{"p": 2.0, "alpha": 1.5, "n_values": [10, 100, 1000]}],
    "substitution": [{"alphas": [1.0], "nodes": 513}],
}
SEPARATION = {"p": 2.0, "alpha": 1.5, "ladder": [0.125, 0.0625], "t_end": 0.02, "tau": 0.005,
              "additivity_ladder": [2 ** -8, 2 ** -9, 2 ** -10]}


@pytest.mark.parametrize("command,cfg,outputs", [
    ("exponents", EXPONENTS, ["exponents.json"]),
    ("elliptic", ELLIPTIC, ["jump.csv"]),
    ("flow", FLOW, ["trace.csv", "decay.json"]),
    ("inequalities", INEQUALITIES, ["inequalities.json"]),
    ("separation", SEPARATION, ["confinement.csv", "additivity.json"]),
])
def test_commands_pass(tmp_path, command, cfg, outputs):
    code, out, man = _run(tmp_path, command, cfg)
    assert code == 0, man
    assert man["passed"] and man["failed_stage"] is None
    assert man["outputs"] == outputs
    for name in outputs:
        assert (out / name).exists()


def test_failed_check_exits_one(tmp_path):
    cfg = dict(EXPONENTS, expect={"D": 4.0})
    code, _, man = _run(tmp_path, "exponents", cfg)
    assert code == 1
    assert man["checks"]["expect_D"] is False
    assert man["failed_stage"] == "checks"


@pytest.mark.parametrize("command,cfg", [
    ("elliptic", {"p": 0.5, "alpha": 0.5, "ladder": [0.1]}),
    ("elliptic", {"p": 2.0, "alpha": 0.5, "ladder": []}),
    ("elliptic", {"p": 2.0, "alpha": 2.5, "ladder": [0.1]}),
    ("elliptic", {"p": 2.0, "alpha": 0.5, "ladder": [0.1, 0.1]}),
    ("elliptic", {"p": 2.0, "alpha": 0.5, "ladder": [0.1], "colour": "red"}),
    ("flow", dict(FLOW, record_times=[0.01, 0.03, 0.02, 0.05, 0.1])),
    ("flow", dict(FLOW, window=[0.1, 0.01])),
    ("exponents", {"spec": {"kind": "grusin", "n": 1, "m": 1, "betas": []}, "p": 2.0}),
    ("exponents", {"spec": {"kind": "poincare"}, "p": 2.0}),
])
def test_invalid_configs_rejected(tmp_path, command, cfg):
    with pytest.raises(ConfigError):
        validate_config(command, cfg)
    code, out, man = _run(tmp_path, command, cfg)
    assert code == 2
    assert man["failed_stage"] == "config"
    assert man["error"]
    assert man["outputs"] == []


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["exponents", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["failed_stage"] == "config"


def test_crashed_stage_is_named(tmp_path):
    # a single inner Newton iteration cannot finish a p = 3 step
    cfg = dict(FLOW, p=3.0, inner_tol=1e-14, tau=0.05, record_times=[0.05, 0.1, 0.15, 0.2, 0.25])
    cfg.pop("slope_tol")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    import grushinlab.flow as flow

    orig = flow.FlowOptions.__init__

    def short(self, *a, **k):
        orig(self, *a, **k)
        self.inner_max_iters = 1

    flow.FlowOptions.__init__ = short
    try:
        code = main(["flow", "--config", str(path), "--out", str(tmp_path / "o")])
    finally:
        flow.FlowOptions.__init__ = orig
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert code == 2
    assert man["failed_stage"] == "flow"
    assert "ConvergenceError" in man["error"]
    assert man["outputs"] == ["trace.csv"]


@pytest.mark.parametrize("command,cfg", [("exponents", EXPONENTS), ("elliptic", ELLIPTIC),
                                         ("inequalities", INEQUALITIES)])
def test_outputs_are_deterministic(tmp_path, command, cfg):
    _, a, man_a = _run(tmp_path, command, cfg, "--seed", "7", out="a")
    _, b, man_b = _run(tmp_path, command, cfg, "--seed", "7", out="b")
    for name in man_a["outputs"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    man_a.pop("wall_clock_seconds")
    man_b.pop("wall_clock_seconds")
    assert man_a == man_b


def test_jobs_do_not_change_results(tmp_path):
    _, a, _ = _run(tmp_path, "elliptic", ELLIPTIC, "--jobs", "1", out="a")
    _, b, _ = _run(tmp_path, "elliptic", ELLIPTIC, "--jobs", "2", out="b")
    assert (a / "jump.csv").read_bytes() == (b / "jump.csv").read_bytes()
    _, a, _ = _run(tmp_path, "separation", SEPARATION, "--jobs", "1", out="c")
    _, b, _ = _run(tmp_path, "separation", SEPARATION, "--jobs", "2", out="d")
    assert (a / "confinement.csv").read_bytes() == (b / "confinement.csv").read_bytes()


def test_ladder_rows_sorted_coarse_to_fine(tmp_path):
    cfg = dict(ELLIPTIC, ladder=[0.015625, 0.0625, 0.03125])
    _, out, _ = _run(tmp_path, "elliptic", cfg)
    lines = (out / "jump.csv").read_text().splitlines()
    assert lines[0] == "h,u_at_half,central_gap,residual_of_jump"
    hs = [float(line.split(",")[0]) for line in lines[1:]]
    assert hs == sorted(hs, reverse=True)


def test_bad_jobs_and_seed(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(EXPONENTS))
    assert main(["exponents", "--config", str(path), "--jobs", "0"]) == 2
    assert main(["exponents", "--config", str(path), "--seed", "-1"]) == 2


def test_module_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(EXPONENTS))
    proc = subprocess.run([sys.executable, "-m", "grushinlab", "exponents", "--config",
                           str(path), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS expect_D" in proc.stdout
