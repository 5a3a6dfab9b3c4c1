"""Command-line driver: ``grushinlab <command> --config run.json --out DIR``.

Commands: ``exponents``, ``elliptic``, ``flow``, ``inequalities``,
``separation``. Every run validates its JSON config against a per-command
schema before computing, writes its CSV/JSON results to ``--out``, and
always leaves a ``manifest.json`` there. The exit status is 0 exactly when
every check attached to the run passed (1 on failed checks, 2 on invalid
input or a crashed stage).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .discretization import DiscreteEnergy, build_grid
from .elliptic import SolveOptions, analytic_profile_1d, jump_experiment, jump_table_csv
from .exponents import (decay_exponents, exponent_record, l1_decay_rate, separation_threshold,
                        structure_dimension)
from .flow import (ConvergenceError, FlowOptions, bump, confinement_table_csv, decay_report,
                   evolve, support_confinement)
from .inequalities import (BumpFamily, energy_additivity_check, monomial_substitution_check,
                           scale_invariance_check, truncator_integral, truncator_turning_point)
from .structures import GeneralizedGrusin, spec_from_dict, spec_to_dict

COMMANDS = ("exponents", "elliptic", "flow", "inequalities", "separation")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_ALPHA = {"type": "number", "minimum": 0, "exclusiveMaximum": 2}
_P = {"type": "number", "exclusiveMinimum": 1}
_LADDER = {"type": "array", "items": _POS, "minItems": 1}
_INTERVAL = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SPEC_SCHEMA = {"oneOf": [
    _obj({"kind": {"const": "identity"}, "d": {"type": "integer", "minimum": 1}},
         ["kind", "d"]),
    _obj({"kind": {"const": "grusin"}, "n": {"type": "integer", "minimum": 0},
          "m": {"type": "integer", "minimum": 0}, "alpha": _ALPHA,
          "betas": {"type": "array", "items": {"type": "number", "minimum": 0}}},
         ["kind", "n"]),
    _obj({"kind": {"const": "monomial"},
          "alphas": {"type": "array", "items": _ALPHA, "minItems": 1}}, ["kind", "alphas"]),
    _obj({"kind": {"const": "hyperplane"},
          "exponents": {"type": "array", "items": {"type": "number", "minimum": 0},
                        "minItems": 1},
          "axis": {"type": "integer", "minimum": 0}}, ["kind", "exponents"]),
    _obj({"kind": {"const": "poincare"}}, ["kind"]),
    _obj({"kind": {"const": "heisenberg"}}, ["kind"]),
]}

_EXPONENT_SPEC = {"oneOf": [SPEC_SCHEMA["oneOf"][i] for i in (0, 1, 2)]}

SCHEMAS = {
    "exponents": _obj({
        "spec": _EXPONENT_SPEC, "p": _P, "q": {"type": "number", "minimum": 1},
        "alpha": _ALPHA,
        "expect": {"type": "object", "additionalProperties": _NUM},
        "self_check_samples": {"type": "integer", "minimum": 0},
    }, ["spec", "p"]),
    "elliptic": _obj({
        "p": _P, "alpha": _ALPHA, "ladder": _LADDER,
        "method": {"enum": ["newton", "bb"]}, "tol": _POS,
        "max_iters": {"type": "integer", "minimum": 1},
        "epsilon": {"type": "number", "minimum": 0},
        "profile_tol": _POS, "plateau_min": _NUM,
    }, ["p", "alpha", "ladder"]),
    "flow": _obj({
        "p": {"type": "number", "minimum": 2}, "alpha": _ALPHA, "box": _INTERVAL, "h": _POS,
        "radius": _POS, "height": _POS, "tau": _POS, "t_end": _POS,
        "record_times": {"type": "array", "items": {"type": "number", "minimum": 0},
                         "minItems": 5},
        "window": _INTERVAL, "q": {"type": "number", "minimum": 1}, "inner_tol": _POS,
        "slope_tol": _POS,
    }, ["p", "alpha", "h", "radius", "tau"]),
    "inequalities": _obj({
        "scale_invariance": {"type": "array", "items": _obj({
            "spec": _EXPONENT_SPEC, "kind": {"enum": ["nash", "sobolev"]}, "p": _P,
            "lambdas": {"type": "array", "items": _POS, "minItems": 2},
            "D": _POS, "counts": {"type": "array", "items": {"type": "integer", "minimum": 2}},
            "radius": _POS, "expect_pass": {"type": "boolean"},
        }, ["spec"])},
        "truncator": {"type": "array", "items": _obj({
            "p": _P, "alpha": _ALPHA,
            "n_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1},
                         "minItems": 2},
        }, ["p", "alpha", "n_values"])},
        "substitution": {"type": "array", "items": _obj({
            "alphas": {"type": "array", "items": _ALPHA, "minItems": 1}, "p": _P,
            "center": {"type": "array", "items": _NUM}, "radius": {"type": "array", "items": _POS},
            "nodes": {"type": "integer", "minimum": 3},
        }, ["alphas"])},
    }),
    "separation": _obj({
        "p": {"type": "number", "minimum": 2}, "alpha": _ALPHA, "ladder": _LADDER,
        "t_end": _POS, "tau": _POS, "center": _NUM, "radius": _POS,
        "additivity_ladder": {"type": "array", "items": _POS, "minItems": 2},
        "confinement_max": _POS, "stabilization_tol": _POS,
    }, ["p", "alpha", "ladder"]),
}


class ConfigError(ValueError):
    pass


def _increasing(xs) -> bool:
    return all(b > a for a, b in zip(xs, xs[1:]))


def validate_config(command: str, config: dict) -> dict:
    """Schema validation plus the cross-field rules a schema cannot express."""
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as err:
        where = "/".join(str(x) for x in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}") from None
    for key in ("ladder", "additivity_ladder"):
        if key in config and len(set(config[key])) != len(config[key]):
            raise ConfigError(f"{key}: repeated spacing")
    if "record_times" in config and not _increasing(config["record_times"]):
        raise ConfigError("record_times: must be strictly increasing")
    for key in ("window", "box"):
        if key in config and not config[key][0] < config[key][1]:
            raise ConfigError(f"{key}: lower end must be below upper end")
    try:
        if "spec" in config:
            spec_from_dict(config["spec"])
        for item in config.get("scale_invariance", []):
            spec_from_dict(item["spec"])
    except ValueError as err:
        raise ConfigError(f"spec: {err}") from None
    return config


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


class Run:
    """Collects outputs and checks for one command."""

    def __init__(self, out_dir: str, jobs: int, seed: int):
        self.out_dir, self.jobs, self.seed = out_dir, jobs, seed
        self.checks: dict = {}
        self.outputs: list = []
        self.stage = "setup"

    def write(self, name: str, text: str):
        with open(os.path.join(self.out_dir, name), "w", newline="") as fh:
            fh.write(text)
        self.outputs.append(name)

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)


def cmd_exponents(cfg: dict, run: Run):
    run.stage = "exponents"
    spec = spec_from_dict(cfg["spec"])
    rec = exponent_record(spec, cfg["p"], cfg.get("q", 1.0), cfg.get("alpha"))
    rec["spec"] = spec_to_dict(spec)
    rec["p"] = float(cfg["p"])
    run.write("exponents.json", _dump(rec))
    for key, target in sorted(cfg.get("expect", {}).items()):
        got = rec.get(key)
        ok = isinstance(got, (int, float)) and math.isclose(got, target, rel_tol=1e-12,
                                                            abs_tol=1e-12)
        run.check(f"expect_{key}", ok)
    samples = cfg.get("self_check_samples", 0)
    if samples:
        rng = np.random.default_rng(run.seed)
        worst = 0.0
        for _ in range(samples):
            p = rng.uniform(2.0, 6.0)
            D = p + rng.uniform(0.1, 10.0)
            ex = decay_exponents(p, D, 1.0)
            worst = max(worst, abs(ex.delta_q / l1_decay_rate(p, D) - 1.0))
        run.check("delta_1_identity", worst <= 1e-12)


def cmd_elliptic(cfg: dict, run: Run):
    run.stage = "elliptic"
    p, alpha = cfg["p"], cfg["alpha"]
    opts = SolveOptions(tol=cfg.get("tol"), max_iters=cfg.get("max_iters", 10 ** 6),
                        method=cfg.get("method", "newton"))
    ladder = sorted(cfg["ladder"], reverse=True)
    rows = jump_experiment(p, alpha, ladder, opts, cfg.get("epsilon"), run.jobs)
    run.write("jump.csv", jump_table_csv(rows))
    for r in rows:
        run.check(f"converged_h={r.h!r}", r.converged)
    last = rows[-1].u_at_half
    if alpha < separation_threshold(p):
        target = analytic_profile_1d(alpha, p, 0.5)
        run.check("profile_at_half", abs(last - target) <= cfg.get("profile_tol", 1e-2))
    else:
        vals = [r.u_at_half for r in rows]
        run.check("plateau_monotone", _increasing(vals))
        run.check("plateau_level", last >= cfg.get("plateau_min", 0.95))


def cmd_flow(cfg: dict, run: Run):
    run.stage = "flow"
    p, alpha = cfg["p"], cfg["alpha"]
    a, b = cfg.get("box", [-20.0, 20.0])
    window = cfg.get("window", [0.01, 0.1])
    tau = cfg["tau"]
    grid = build_grid([(a, b)], (int(round((b - a) / cfg["h"])) + 1,))
    spec = GeneralizedGrusin(1, 0, alpha)
    E = DiscreteEnergy(spec, p, grid)
    u0 = bump(grid, [0.5 * (a + b)], [cfg["radius"]], cfg.get("height", 1.0))
    times = cfg.get("record_times")
    if times is None:
        steps = np.unique(np.round(np.geomspace(window[0], window[1], 11) / tau))
        times = [float(k * tau) for k in steps]
    t_end = cfg.get("t_end", times[-1])
    opts = FlowOptions(tau=tau, t_end=t_end, record_times=[0.0] + [t for t in times if t > 0],
                       inner_tol=cfg.get("inner_tol", 1e-10))
    try:
        trace = evolve(E, u0, opts)
    except ConvergenceError as err:
        run.write("trace.csv", err.result.to_csv())
        raise
    run.write("trace.csv", trace.to_csv())
    q = cfg.get("q", 1.0)
    report = decay_report(trace, p, structure_dimension(spec), q, window)
    run.write("decay.json", _dump(report))
    slack = 10 * opts.inner_tol
    for name in ("l1", "l2", "linf", "energy"):
        vals = getattr(trace, name)
        scale = max(vals) if vals else 0.0
        run.check(f"{name}_nonincreasing",
                  all(y <= x + slack * max(1.0, scale) for x, y in zip(vals, vals[1:])))
    run.check("decay_slope", abs(report["slope"] + report["predicted_delta"])
              <= cfg.get("slope_tol", 0.05))


def cmd_inequalities(cfg: dict, run: Run):
    reports = []
    run.stage = "scale_invariance"
    for i, item in enumerate(cfg.get("scale_invariance", [])):
        spec = spec_from_dict(item["spec"])
        family = BumpFamily.for_spec(spec, item.get("radius", 1.0))
        rep = scale_invariance_check(spec, family, item.get("p", 2.0),
                                     item.get("lambdas", [1.0, 2.0, 4.0]),
                                     item.get("kind", "nash"), item.get("D"),
                                     item.get("counts"))
        d = rep.to_dict()
        d["params"]["spec"] = spec_to_dict(spec)
        reports.append(d)
        run.check(f"scale_invariance_{i}", rep.passed == item.get("expect_pass", True))
    run.stage = "truncator"
    for i, item in enumerate(cfg.get("truncator", [])):
        p, alpha = item["p"], item["alpha"]
        ns = sorted(item["n_values"])
        vals = [truncator_integral(n, p, alpha) for n in ns]
        turn = truncator_turning_point(p, alpha)
        if math.isinf(turn):
            ok = all(y < x for x, y in zip(vals, vals[1:]))
            trend = "decreasing"
        else:
            tail = [v for n, v in zip(ns, vals) if n > turn]
            ok = _increasing(tail) and len(tail) >= 2
            trend = "increasing beyond n=%r" % turn
        reports.append({"check": "truncator", "params": {"p": p, "alpha": alpha, "n_values": ns},
                        "values": vals, "pass": bool(ok), "trend": trend})
        run.check(f"truncator_{i}", ok)
    run.stage = "substitution"
    for i, item in enumerate(cfg.get("substitution", [])):
        rep = monomial_substitution_check(item["alphas"], item.get("p", 2.0),
                                          item.get("center"), item.get("radius"),
                                          item.get("nodes"))
        reports.append(rep.to_dict())
        run.check(f"substitution_{i}", rep.passed)
    run.write("inequalities.json", _dump(reports))


def cmd_separation(cfg: dict, run: Run):
    p, alpha = cfg["p"], cfg["alpha"]
    separated = alpha >= separation_threshold(p)
    run.stage = "support_confinement"
    ladder = sorted(cfg["ladder"], reverse=True)
    rows = support_confinement(p, alpha, ladder, cfg.get("t_end", 0.1), cfg.get("tau", 1e-3),
                               cfg.get("center", 0.5), cfg.get("radius", 0.25),
                               jobs=run.jobs)
    run.write("confinement.csv", confinement_table_csv(rows))
    for r in rows:
        run.check(f"converged_h={r.h!r}", r.converged)
    masses = [r.mass_minus for r in rows]
    if separated:
        run.check("mass_minus_decreasing", all(y < x for x, y in zip(masses, masses[1:])))
        run.check("mass_minus_small", masses[-1] <= cfg.get("confinement_max", 1e-3))
    else:
        ok = len(masses) >= 2 and masses[-1] > 0 and \
            abs(masses[-1] - masses[-2]) / masses[-1] <= cfg.get("stabilization_tol", 0.05)
        run.check("mass_minus_stabilizes", ok)
    run.stage = "energy_additivity"
    add_ladder = cfg.get("additivity_ladder", [2.0 ** -k for k in range(6, 11)])
    rep = energy_additivity_check(p, alpha, add_ladder)
    run.write("additivity.json", _dump(rep.to_dict()))
    # in the continuous regime the additivity check is expected to fail
    run.check("additivity_matches_regime", rep.passed == separated)


HANDLERS = {"exponents": cmd_exponents, "elliptic": cmd_elliptic, "flow": cmd_flow,
            "inequalities": cmd_inequalities, "separation": cmd_separation}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grushinlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment configuration")
    ap.add_argument("--out", default="grushinlab-out", help="output directory")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for ladders")
    ap.add_argument("--seed", type=int, default=0, help="seed for sampled self-checks")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return 2
    if not 0 <= args.seed < 2 ** 64:
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    run = Run(args.out, args.jobs, args.seed)
    manifest = {"command": args.command, "version": __version__, "seed": args.seed,
                "jobs": args.jobs, "config": None, "checks": {}, "passed": False,
                "failed_stage": None, "error": None, "outputs": []}
    start = time.perf_counter()
    status = 2
    try:
        run.stage = "config"
        with open(args.config) as fh:
            cfg = json.load(fh)
        manifest["config"] = cfg
        validate_config(args.command, cfg)
        HANDLERS[args.command](cfg, run)
        passed = all(run.checks.values())
        manifest["passed"] = passed
        if not passed:
            manifest["failed_stage"] = "checks"
        status = 0 if passed else 1
    except (ConfigError, json.JSONDecodeError, OSError) as err:
        manifest["failed_stage"], manifest["error"] = run.stage, str(err)
        print(f"invalid input ({run.stage}): {err}", file=sys.stderr)
    except Exception as err:  # noqa: BLE001 - any stage failure is reported in the manifest
        manifest["failed_stage"], manifest["error"] = run.stage, f"{type(err).__name__}: {err}"
        print(f"stage {run.stage} failed: {err}", file=sys.stderr)
    manifest["checks"] = run.checks
    manifest["outputs"] = run.outputs
    manifest["wall_clock_seconds"] = time.perf_counter() - start
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        fh.write(_dump(manifest))
    for name, ok in run.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return status


if __name__ == "__main__":
    sys.exit(main())
