"""Scenario runner, Monte Carlo harness and report writers.

Per-run randomness is derived from ``(master seed, run index, stream)`` with
:class:`numpy.random.SeedSequence`, so a run's result does not depend on
which other runs execute, or in what order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, ChannelGains, Topology, compute_gains, generate_topology
from .errors import ConfigurationError
from .game import (
    SCHEMES,
    GameParams,
    GameSolution,
    LeaseDecision,
    SecondaryParams,
    backward_induction_solve,
    border_sweep_estimate,
    bs_utility,
    realized_outcome,
)
from .power_control import FixedPointResult, Partition, interference, solve_fixed_point
from .primary import PrimaryParams, primary_utility, reservation_payoff

__all__ = [
    "ScenarioConfig",
    "RunResult",
    "MetricsReport",
    "derive_seed",
    "relative_inc",
    "compute_metrics",
    "scenario_gains",
    "run_scenario",
    "monte_carlo",
    "convergence_trace",
    "border_sweep_rows",
    "RUN_COLUMNS",
    "SWEEP_COLUMNS",
    "TRACE_COLUMNS",
    "records_to_csv",
    "rows_to_csv",
    "report_to_json",
]

STREAM_TOPOLOGY = 0
STREAM_FADING = 1
STREAM_RELAY_POWERS = 2

BACKWARD_INDUCTION = "BI"
FIXED = "FIXED"

RUN_COLUMNS = (
    "run", "scheme", "alpha", "N", "u_p_est", "u_p_real", "u_reservation", "u_cr",
    "p_ccr", "p_nccr", "usinr_ccr", "usinr_nccr", "spr_ccr", "spr_nccr",
    "spr_excluded", "converged", "iterations",
)
SWEEP_COLUMNS = ("alpha", "N", "scheme", "estimated_u", "realized_u", "u_reservation",
                 "converged")
TRACE_COLUMNS = ("iter", "k", "p_k", "sinr_k", "I_k")

_MEAN_FIELDS = ("alpha", "N", "u_p_est", "u_p_real", "u_reservation", "u_cr", "p_ccr",
                "p_nccr", "usinr_ccr", "usinr_nccr", "spr_ccr", "spr_nccr")


@dataclass(frozen=True)
class ScenarioConfig:
    k: int = 10
    l_s: float = 2.0
    l_p: float = 1.0
    channel: ChannelConfig = ChannelConfig()
    primary: PrimaryParams = PrimaryParams()
    secondary: SecondaryParams = SecondaryParams()
    game: GameParams = GameParams()
    schemes: tuple[str, ...] = ("RR", "RS", "CP")
    backward_induction: bool = False
    mode: str = "lease"  # "lease" plays the game, "fixed" fixes (alpha, N)
    fixed_alpha: float = 0.25
    fixed_n_ccr: int = 10
    seed: int = 0
    runs: int = 100

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("k must be >= 1", key="scenario.k")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1", key="mc.runs")
        if self.mode not in ("lease", "fixed"):
            raise ConfigurationError(f"unknown mode {self.mode!r}", key="scenario.mode")
        for name in self.schemes:
            if name not in SCHEMES:
                raise ConfigurationError(f"unknown scheme {name!r}", key="scenario.schemes")
        if self.mode == "lease" and not self.schemes and not self.backward_induction:
            raise ConfigurationError("no scheme to run", key="scenario.schemes")
        if self.mode == "fixed":
            if not 0 < self.fixed_alpha < 0.5:
                raise ConfigurationError("fixed alpha outside (0, 1/2)", key="scenario.alpha")
            if not 0 <= self.fixed_n_ccr <= self.k:
                raise ConfigurationError("fixed N outside 0..K", key="scenario.n_ccr")
        if self.secondary.n0 != self.primary.n0:
            raise ConfigurationError("primary and secondary noise powers differ",
                                     key="noise.n0")


@dataclass
class RunResult:
    run_index: int
    topology: Topology
    gains: ChannelGains
    decisions: dict[str, LeaseDecision]
    solutions: dict[str, GameSolution]
    records: list[dict]


@dataclass
class MetricsReport:
    records: list[dict]
    aggregates: dict[str, dict]
    agreement: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"aggregates": self.aggregates, "agreement": self.agreement,
                "runs": len({r["run"] for r in self.records})}


def derive_seed(master: int, run_index: int, stream: int) -> int:
    """Counter-based child seed for one random stream of one run."""
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=(int(run_index), int(stream)))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def relative_inc(x_c, x_n):
    """``(x_c - x_n) / x_n``; ``None`` when either side is missing or x_n is zero."""
    if x_c is None or x_n is None or x_n == 0:
        return None
    return (x_c - x_n) / x_n


def _mean(values):
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


def compute_metrics(outcome: GameSolution, gains: ChannelGains, n0: float) -> dict:
    """Per-class power, unitary SINR (SINR / g) and SINR-power-ratio means.

    Classes follow the outcome's partition. Nodes with zero power are left
    out of the SINR-power-ratio means and counted in ``spr_excluded``.
    """
    out = {"p_ccr": None, "p_nccr": None, "usinr_ccr": None, "usinr_nccr": None,
           "spr_ccr": None, "spr_nccr": None, "spr_excluded": 0}
    if not outcome.leased:
        return out
    p = outcome.p_star
    sinr = gains.g_s * p / interference(p, gains.g_s, n0)
    part = outcome.partition
    for tag, members in (("ccr", part.ccrs), ("nccr", part.nccrs)):
        idx = list(members)
        if not idx:
            continue
        out[f"p_{tag}"] = _mean(p[idx].tolist())
        out[f"usinr_{tag}"] = _mean((sinr[idx] / gains.g_s[idx]).tolist())
        active = [i for i in idx if p[i] > 0]
        out["spr_excluded"] += len(idx) - len(active)
        out[f"spr_{tag}"] = _mean([sinr[i] / p[i] for i in active])
    return out


def scenario_gains(cfg: ScenarioConfig, run_index: int) -> tuple[Topology, ChannelGains]:
    topology = generate_topology(derive_seed(cfg.seed, run_index, STREAM_TOPOLOGY),
                                 cfg.k, cfg.l_s, cfg.l_p)
    channel = ChannelConfig(cfg.channel.path_exponent, cfg.channel.distance_unit_scale,
                            cfg.channel.fading, derive_seed(cfg.seed, run_index, STREAM_FADING))
    return topology, compute_gains(topology, channel)


def _record(run_index, scheme, solution: GameSolution, estimate, gains, n0):
    rec = {
        "run": run_index,
        "scheme": scheme,
        "alpha": solution.alpha_star,
        "N": solution.n_star,
        "u_p_est": estimate,
        "u_p_real": solution.u_p,
        "u_reservation": solution.u_reservation,
        "u_cr": solution.u_cr,
        "converged": bool(solution.converged),
        "iterations": int(solution.diagnostics.get("iterations", 0)),
    }
    rec.update(compute_metrics(solution, gains, n0))
    return rec


def _fixed_solution(cfg: ScenarioConfig, gains: ChannelGains) -> GameSolution:
    alpha = cfg.fixed_alpha
    part = Partition.first(cfg.k, cfg.fixed_n_ccr)
    res = solve_fixed_point(part, cfg.secondary.at(alpha), gains, tol=cfg.game.tol,
                            max_iter=cfg.game.max_iter)
    return GameSolution(
        alpha_star=alpha,
        n_star=part.n_ccr,
        ordered_crs=part.ordered_crs,
        p_star=res.p_star,
        u_p=primary_utility(alpha, part, res.p_star, gains, cfg.primary),
        u_cr=bs_utility(alpha, part, res.p_star, gains, cfg.game.c, cfg.secondary.p_max,
                        cfg.secondary.n0),
        u_reservation=reservation_payoff(gains, cfg.primary),
        converged=res.converged,
        diagnostics={"iterations": res.iterations, "residual": res.residual},
    )


def run_scenario(cfg: ScenarioConfig, run_index: int) -> RunResult:
    """Draw one network and play every configured scheme on it."""
    topology, gains = scenario_gains(cfg, run_index)
    n0 = cfg.secondary.n0
    decisions, solutions, records = {}, {}, []
    if cfg.mode == "fixed":
        sol = _fixed_solution(cfg, gains)
        solutions[FIXED] = sol
        records.append(_record(run_index, FIXED, sol, sol.u_p, gains, n0))
        return RunResult(run_index, topology, gains, decisions, solutions, records)

    relay_seed = derive_seed(cfg.seed, run_index, STREAM_RELAY_POWERS)
    for scheme in cfg.schemes:
        decision = border_sweep_estimate(gains, cfg.secondary, cfg.primary, scheme,
                                         seed=relay_seed, game=cfg.game)
        sol = realized_outcome(decision, gains, cfg.secondary, cfg.primary, cfg.game)
        decisions[scheme] = decision
        solutions[scheme] = sol
        records.append(_record(run_index, scheme, sol, decision.estimated_utility, gains, n0))
    if cfg.backward_induction:
        sol = backward_induction_solve(gains, cfg.secondary, cfg.primary, cfg.game)
        solutions[BACKWARD_INDUCTION] = sol
        records.append(_record(run_index, BACKWARD_INDUCTION, sol, sol.u_p, gains, n0))
    return RunResult(run_index, topology, gains, decisions, solutions, records)


def _run_records(args):
    cfg, run_index = args
    return run_scenario(cfg, run_index).records


def _agreement(records: list[dict], schemes: tuple[str, ...]) -> dict[str, int]:
    """Histogram of which schemes chose the same CCR count in each run."""
    by_run: dict[int, dict[str, int]] = {}
    for rec in records:
        if rec["scheme"] in schemes:
            by_run.setdefault(rec["run"], {})[rec["scheme"]] = rec["N"]
    counts: dict[str, int] = {}
    for run in sorted(by_run):
        chosen = by_run[run]
        groups: dict[int, list[str]] = {}
        for name in schemes:
            groups.setdefault(chosen[name], []).append(name)
        if len(groups) == 1:
            key = "all_equal"
        elif len(groups) == len(schemes):
            key = "all_unequal"
        else:
            key = " ".join(sorted("=".join(g) for g in groups.values()))
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


def aggregate(records: list[dict], schemes: tuple[str, ...]) -> MetricsReport:
    """Order-independent reduction of per-run records into a report."""
    order = {name: i for i, name in enumerate(schemes)}
    records = sorted(records, key=lambda r: (r["run"], order.get(r["scheme"], len(order))))
    aggregates = {}
    for name in dict.fromkeys(r["scheme"] for r in records):
        rows = [r for r in records if r["scheme"] == name]
        agg = {f: _mean([r[f] for r in rows]) for f in _MEAN_FIELDS}
        agg["runs"] = len(rows)
        agg["nonconverged"] = sum(not r["converged"] for r in rows)
        agg["spr_excluded"] = sum(r["spr_excluded"] for r in rows)
        agg["leased"] = sum(r["alpha"] is not None for r in rows)
        agg["beats_reservation"] = sum(r["u_p_real"] > r["u_reservation"] for r in rows)
        agg["rel_inc_power"] = relative_inc(agg["p_ccr"], agg["p_nccr"])
        agg["rel_inc_usinr"] = relative_inc(agg["usinr_ccr"], agg["usinr_nccr"])
        agg["rel_inc_spr"] = relative_inc(agg["spr_ccr"], agg["spr_nccr"])
        aggregates[name] = agg
    lease_schemes = tuple(s for s in schemes if s in SCHEMES)
    agreement = _agreement(records, lease_schemes) if len(lease_schemes) > 1 else {}
    return MetricsReport(records, aggregates, agreement)


def monte_carlo(cfg: ScenarioConfig, workers: int = 1, run_indices=None) -> MetricsReport:
    indices = list(range(cfg.runs)) if run_indices is None else list(run_indices)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_records, [(cfg, i) for i in indices]))
    else:
        chunks = [run_scenario(cfg, i).records for i in indices]
    records = [rec for chunk in chunks for rec in chunk]
    names = (FIXED,) if cfg.mode == "fixed" else cfg.schemes + (
        (BACKWARD_INDUCTION,) if cfg.backward_induction else ())
    return aggregate(records, names)


def convergence_trace(cfg: ScenarioConfig, run_index: int = 0, p0=None
                      ) -> tuple[ChannelGains, FixedPointResult]:
    """Power-control iterates for the fixed (alpha, N) partition of one network."""
    _, gains = scenario_gains(cfg, run_index)
    part = Partition.first(cfg.k, cfg.fixed_n_ccr)
    res = solve_fixed_point(part, cfg.secondary.at(cfg.fixed_alpha), gains, p0,
                            tol=cfg.game.tol, max_iter=cfg.game.max_iter, record_trace=True)
    return gains, res


def border_sweep_rows(cfg: ScenarioConfig, run_index: int = 0,
                      gains: ChannelGains | None = None) -> list[dict]:
    """Estimated and realized primary utility at every border candidate."""
    if gains is None:
        _, gains = scenario_gains(cfg, run_index)
    relay_seed = derive_seed(cfg.seed, run_index, STREAM_RELAY_POWERS)
    reservation = reservation_payoff(gains, cfg.primary)
    rows = []
    for scheme in cfg.schemes:
        decision = border_sweep_estimate(gains, cfg.secondary, cfg.primary, scheme,
                                         seed=relay_seed, game=cfg.game)
        for cand in decision.candidates:
            if cand.alpha is None:
                realized, converged = reservation, True
            else:
                part = Partition(cand.ordered_crs, cand.n_ccr)
                res = solve_fixed_point(part, cfg.secondary.at(cand.alpha), gains,
                                        tol=cfg.game.tol, max_iter=cfg.game.max_iter)
                realized = primary_utility(cand.alpha, part, res.p_star, gains, cfg.primary)
                converged = res.converged
            rows.append({
                "alpha": 0.5 if cand.alpha is None else cand.alpha,
                "N": cand.n_ccr,
                "scheme": scheme,
                "estimated_u": cand.estimated_utility,
                "realized_u": realized,
                "u_reservation": reservation,
                "converged": converged,
            })
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in columns]
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_to_csv(records: list[dict]) -> str:
    return rows_to_csv(records, RUN_COLUMNS)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def report_to_json(data) -> str:
    if isinstance(data, MetricsReport):
        data = data.to_dict()
    return json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"
