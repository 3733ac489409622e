"""Command-line front end.

Every subcommand computes its outputs in memory first and only then writes
them, each through a temporary file renamed into place, so a failed run
leaves no partial artifacts behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .channel import dump_scenario, load_scenario
from .config import build_scenario, load_config, parse_override, resolve
from .errors import ConfigurationError, LeaseGameError
from .game import backward_induction_solve, border_sweep_estimate, realized_outcome
from .power_control import trace_rows

OUT_ENV = "LEASEGAME_OUT"
COMMANDS = ("power-control", "sweep-alpha", "monte-carlo", "backward-induction", "replay")


def _write_atomic(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def _power_control(cfg, values):
    run = values["run.index"]
    topology, gains = ex.scenario_gains(cfg, run)
    _, res = ex.convergence_trace(cfg, run)
    summary = {
        "alpha": cfg.fixed_alpha,
        "n_ccr": cfg.fixed_n_ccr,
        "lambda_qos": cfg.secondary.lambda_qos,
        "converged": res.converged,
        "iterations": res.iterations,
        "residual": res.residual,
        "p_star": res.p_star,
    }
    return {
        "trace.csv": ex.rows_to_csv(trace_rows(res, gains, cfg.secondary.n0), ex.TRACE_COLUMNS),
        "summary.json": ex.report_to_json(summary),
        "scenario.json": dump_scenario(topology, gains) + "\n",
    }


def _play(cfg, gains, run):
    relay_seed = ex.derive_seed(cfg.seed, run, ex.STREAM_RELAY_POWERS)
    out = {}
    for scheme in cfg.schemes:
        decision = border_sweep_estimate(gains, cfg.secondary, cfg.primary, scheme,
                                         seed=relay_seed, game=cfg.game)
        solution = realized_outcome(decision, gains, cfg.secondary, cfg.primary, cfg.game)
        out[scheme] = {"decision": decision.to_dict(), "realized": solution.to_dict()}
    if cfg.backward_induction:
        solution = backward_induction_solve(gains, cfg.secondary, cfg.primary, cfg.game)
        out[ex.BACKWARD_INDUCTION] = {"solution": solution.to_dict()}
    return out


def _sweep_alpha(cfg, values):
    run = values["run.index"]
    topology, gains = ex.scenario_gains(cfg, run)
    rows = ex.border_sweep_rows(cfg, run, gains)
    return {
        "sweep.csv": ex.rows_to_csv(rows, ex.SWEEP_COLUMNS),
        "decisions.json": ex.report_to_json(_play(cfg, gains, run)),
        "scenario.json": dump_scenario(topology, gains) + "\n",
    }


def _monte_carlo(cfg, values):
    report = ex.monte_carlo(cfg, workers=values["mc.workers"])
    return {"runs.csv": ex.records_to_csv(report.records),
            "report.json": ex.report_to_json(report)}


def _backward_induction(cfg, values):
    run = values["run.index"]
    topology, gains = ex.scenario_gains(cfg, run)
    solution = backward_induction_solve(gains, cfg.secondary, cfg.primary, cfg.game)
    return {"solution.json": ex.report_to_json(solution.to_dict()),
            "scenario.json": dump_scenario(topology, gains) + "\n"}


def _replay(cfg, values, scenario_path):
    if scenario_path is None:
        raise ConfigurationError("replay needs a scenario file", key="scenario")
    path = Path(scenario_path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file {str(path)!r} not found", key="scenario")
    try:
        _, gains = load_scenario(path.read_text())
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigurationError(f"unreadable scenario: {exc}", key="scenario") from exc
    if gains.k != cfg.k:
        cfg = replace(cfg, k=gains.k, fixed_n_ccr=min(cfg.fixed_n_ccr, gains.k))
    return {"replay.json": ex.report_to_json(_play(cfg, gains, values["run.index"]))}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leasegame",
                                     description="Spectrum-leasing game simulator")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("scenario", nargs="?", help="scenario JSON (replay only)")
    parser.add_argument("-c", "--config", help="YAML file of dotted config keys")
    parser.add_argument("-o", "--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    parser.add_argument("--seed", type=int, help="master seed (mc.seed)")
    parser.add_argument("--runs", type=int, help="Monte Carlo runs (mc.runs)")
    parser.add_argument("-s", "--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key; repeatable")
    return parser


def run_command(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        layers = [load_config(args.config)] if args.config else []
        layers.append(dict(parse_override(o) for o in args.overrides))
        flags = {}
        if args.seed is not None:
            flags["mc.seed"] = args.seed
        if args.runs is not None:
            flags["mc.runs"] = args.runs
        layers.append(flags)
        values = resolve(*layers)
        cfg = build_scenario(values)
        if args.command == "power-control":
            files = _power_control(cfg, values)
        elif args.command == "sweep-alpha":
            files = _sweep_alpha(cfg, values)
        elif args.command == "monte-carlo":
            files = _monte_carlo(cfg, values)
        elif args.command == "backward-induction":
            files = _backward_induction(cfg, values)
        else:
            files = _replay(cfg, values, args.scenario)
        out_dir = Path(args.out or os.environ.get(OUT_ENV) or "out")
        _write_atomic(out_dir, files)
    except LeaseGameError as exc:
        error = {"error": type(exc).__name__, "key": getattr(exc, "key", None),
                 "message": str(exc)}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, ConfigurationError) else 1
    for name in files:
        print(out_dir / name)
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
