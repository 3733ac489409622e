"""The spectrum-leasing sequential game.

Two solution paths are provided:

* complete information: backward induction over a grid of slot fractions,
  where the BS picks the CCR count that maximises a weighted sum of its own
  and the primary's utility, given fixed-point CR powers;
* incomplete information: the BS uses ``N = ceil((1 - 2 alpha) K)``, the
  primary orders relays with guessed powers and evaluates one border slot
  fraction per candidate count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import ChannelGains
from .errors import ConfigurationError, DomainError
from .power_control import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    FixedPointResult,
    Partition,
    QosParams,
    interference,
    solve_fixed_point,
)
from .primary import (
    PrimaryParams,
    is_lease,
    leased_tx_power,
    primary_utility,
    relay_path_sinr,
    reservation_payoff,
)

__all__ = [
    "OrderingScheme",
    "PowerScheme",
    "SCHEMES",
    "SecondaryParams",
    "GameParams",
    "Candidate",
    "LeaseDecision",
    "CountChoice",
    "GameSolution",
    "simplified_ccr_count",
    "border_alpha",
    "order_relays",
    "approx_relay_powers",
    "border_sweep_estimate",
    "bs_utility",
    "bs_optimize_count",
    "alpha_grid",
    "backward_induction_solve",
    "realized_outcome",
]


class OrderingScheme(str, Enum):
    R_SINR = "R_SINR"
    CP = "CP"


class PowerScheme(str, Enum):
    RR = "RR"
    RS = "RS"
    TRUE_FIXED_POINT = "TRUE_FIXED_POINT"


#: Named incomplete-information schemes: (relay ordering, relay power guess).
SCHEMES = {
    "RR": (OrderingScheme.R_SINR, PowerScheme.RR),
    "RS": (OrderingScheme.R_SINR, PowerScheme.RS),
    "CP": (OrderingScheme.CP, PowerScheme.RS),
    "TFP": (OrderingScheme.R_SINR, PowerScheme.TRUE_FIXED_POINT),
}


@dataclass(frozen=True)
class SecondaryParams:
    """QoS parameters of the CR network that do not depend on alpha."""

    lambda_qos: float = 2.0
    p_max: float = 0.6
    n0: float = 10 ** -13.3

    def __post_init__(self):
        if not self.lambda_qos > 0:
            raise ConfigurationError("lambda_qos must be positive", key="qos.lambda")
        if not self.p_max > 0:
            raise ConfigurationError("p_max must be positive", key="qos.p_max")
        if not self.n0 > 0:
            raise ConfigurationError("noise power must be positive", key="noise.n0")

    def at(self, alpha: float) -> QosParams:
        return QosParams(alpha=alpha, lambda_qos=self.lambda_qos, p_max=self.p_max, n0=self.n0)


@dataclass(frozen=True)
class GameParams:
    lambda_bs: float = 0.5
    c: float = 1.0
    alpha_step: float = 0.005
    eps_alpha: float = 0.01
    rs_power: float | None = None  # None means p_max / 2
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if not 0 < self.lambda_bs < 1:
            raise ConfigurationError("lambda_bs must lie in (0, 1)", key="game.lambda_bs")
        if not self.c > 0:
            raise ConfigurationError("c must be positive", key="game.c")
        if not 0 < self.alpha_step < 0.5:
            raise ConfigurationError("alpha_step must lie in (0, 1/2)", key="game.alpha_step")
        if not 0 < self.eps_alpha < 0.5:
            raise ConfigurationError("eps_alpha must lie in (0, 1/2)", key="game.eps_alpha")
        if self.rs_power is not None and self.rs_power < 0:
            raise ConfigurationError("rs_power must be non-negative", key="game.rs_power")

    def equal_power(self, p_max: float) -> float:
        value = p_max / 2 if self.rs_power is None else self.rs_power
        if value > p_max:
            raise ConfigurationError("rs_power exceeds p_max", key="game.rs_power")
        return value


@dataclass(frozen=True)
class Candidate:
    """One border evaluation of the incomplete-information sweep."""

    n_ccr: int
    alpha: float | None  # None: the N*=0 border, alpha = 1/2, i.e. no lease
    ordered_crs: tuple[int, ...]
    assumed_powers: np.ndarray  # per CR, length K
    estimated_utility: float


@dataclass
class LeaseDecision:
    alpha_hat: float | None
    ordering_scheme: OrderingScheme
    power_scheme: PowerScheme
    n_ccr: int
    ordered_crs: tuple[int, ...]
    assumed_powers: np.ndarray  # the chosen CCRs' powers, length n_ccr
    estimated_utility: float
    scheme: str = ""
    candidates: list[Candidate] = field(default_factory=list, repr=False)

    @property
    def partition(self) -> Partition:
        return Partition(self.ordered_crs, self.n_ccr)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "alpha_hat": self.alpha_hat,
            "ordering_scheme": self.ordering_scheme.value,
            "power_scheme": self.power_scheme.value,
            "n_ccr": self.n_ccr,
            "ordered_crs": list(self.ordered_crs),
            "assumed_powers": [float(x) for x in self.assumed_powers],
            "estimated_utility": self.estimated_utility,
        }


@dataclass
class CountChoice:
    n_star: int | None  # None when every count was excluded
    objective: dict[int, float]
    u_p: dict[int, float]
    u_cr: dict[int, float]
    results: dict[int, FixedPointResult] = field(repr=False)
    excluded: list[int]


@dataclass
class GameSolution:
    alpha_star: float | None  # None means no lease
    n_star: int
    ordered_crs: tuple[int, ...]
    p_star: np.ndarray
    u_p: float
    u_cr: float
    u_reservation: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def leased(self) -> bool:
        return self.alpha_star is not None

    @property
    def partition(self) -> Partition:
        return Partition(self.ordered_crs, self.n_star)

    def to_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "n_star": self.n_star,
            "ordered_crs": list(self.ordered_crs),
            "p_star": [float(x) for x in self.p_star],
            "u_p": self.u_p,
            "u_cr": self.u_cr,
            "u_reservation": self.u_reservation,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


def simplified_ccr_count(alpha: float, k_total: int) -> int:
    """``ceil((1 - 2 alpha) K)``, floored at zero."""
    if not 0 < alpha <= 0.5:
        raise DomainError(f"alpha={alpha} outside (0, 1/2]")
    # Absorb rounding so that border fractions map back to their own count.
    return max(0, math.ceil((1 - 2 * alpha) * k_total - 1e-9))


def border_alpha(n_ccr: int, k_total: int, eps_alpha: float) -> float:
    """Left end of the slot-fraction interval that yields ``n_ccr`` CCRs.

    The N = K border is alpha = 0, which is not a lease; it is moved to
    ``eps_alpha``.
    """
    if n_ccr == k_total:
        if 2 * eps_alpha * k_total >= 1:
            raise ConfigurationError(
                f"eps_alpha={eps_alpha} would not give {k_total} CCRs; need eps_alpha < 1/(2K)",
                key="game.eps_alpha",
            )
        return eps_alpha
    return (k_total - n_ccr) / (2 * k_total)


def order_relays(gains: ChannelGains, p_p: float | None = None, assumed_powers=None,
                 scheme: OrderingScheme = OrderingScheme.R_SINR, n0: float = 10 ** -13.3):
    """Rank candidate relays, best first; ties go to the lower index.

    R_SINR sorts by the per-relay AF SINR under the assumed powers; CP sorts
    by the channel product ``g_ps * g_sp``.
    """
    scheme = OrderingScheme(scheme)
    if scheme is OrderingScheme.R_SINR:
        if assumed_powers is None or p_p is None:
            raise DomainError("R_SINR ordering needs the PT power and assumed relay powers")
        score = relay_path_sinr(p_p, np.asarray(assumed_powers, dtype=float),
                                gains.g_ps, gains.g_sp, n0)
    else:
        score = gains.g_ps * gains.g_sp
    score = np.atleast_1d(score)
    return tuple(sorted(range(score.size), key=lambda i: (-score[i], i)))


def approx_relay_powers(n: int, p_max: float, scheme: PowerScheme, seed=None,
                        equal_value: float | None = None) -> np.ndarray:
    """Primary-side guess of relay powers: uniform draws (RR) or a constant (RS)."""
    if n < 0:
        raise DomainError("n must be non-negative")
    scheme = PowerScheme(scheme)
    if scheme is PowerScheme.RR:
        return np.random.default_rng(seed).uniform(0.0, p_max, size=n)
    if scheme is PowerScheme.RS:
        value = p_max / 2 if equal_value is None else equal_value
        return np.full(n, float(value))
    raise DomainError("approx_relay_powers covers the RR and RS schemes only")


def _true_fixed_point_candidate(n_ccr, alpha, gains, secondary, primary, game):
    qos = secondary.at(alpha)
    full = solve_fixed_point(Partition.first(gains.k, gains.k), qos, gains,
                             tol=game.tol, max_iter=game.max_iter)
    order = order_relays(gains, leased_tx_power(alpha, primary.p_p0), full.p_star,
                         OrderingScheme.R_SINR, primary.n0)
    res = solve_fixed_point(Partition(order, n_ccr), qos, gains,
                            tol=game.tol, max_iter=game.max_iter)
    return order, res.p_star


def border_sweep_estimate(gains: ChannelGains, secondary: SecondaryParams,
                          primary: PrimaryParams, scheme: str = "RR",
                          k_total: int | None = None, seed=None,
                          game: GameParams = GameParams()) -> LeaseDecision:
    """Incomplete-information decision from K + 1 border-utility evaluations.

    ``scheme`` is a key of :data:`SCHEMES`. The RR guess draws one power per
    CR from ``seed`` and reuses it for every candidate count.
    """
    k = gains.k if k_total is None else k_total
    if k != gains.k:
        raise DomainError("k_total disagrees with the gains")
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}", key="scenario.schemes")
    ordering, power = SCHEMES[scheme]
    reservation = reservation_payoff(gains, primary)
    if power is not PowerScheme.TRUE_FIXED_POINT:
        guess = approx_relay_powers(k, secondary.p_max, power, seed,
                                    game.equal_power(secondary.p_max))
    identity = tuple(range(k))

    candidates = []
    for n_ccr in range(k + 1):
        if n_ccr == 0:
            # alpha = 1/2 leaves no leased subslot.
            candidates.append(Candidate(0, None, identity, np.zeros(k), reservation))
            continue
        alpha = border_alpha(n_ccr, k, game.eps_alpha)
        if power is PowerScheme.TRUE_FIXED_POINT:
            order, powers = _true_fixed_point_candidate(n_ccr, alpha, gains, secondary,
                                                        primary, game)
        else:
            powers = guess
            order = order_relays(gains, leased_tx_power(alpha, primary.p_p0), powers,
                                 ordering, primary.n0)
        u = primary_utility(alpha, Partition(order, n_ccr), powers, gains, primary)
        candidates.append(Candidate(n_ccr, alpha, order, powers, u))

    best = candidates[0]
    for cand in candidates[1:]:
        if cand.estimated_utility > best.estimated_utility:
            best = cand
    if best.alpha is None or best.estimated_utility <= reservation:
        best = candidates[0]
    relays = list(best.ordered_crs[: best.n_ccr])
    return LeaseDecision(
        alpha_hat=best.alpha,
        ordering_scheme=ordering,
        power_scheme=power,
        n_ccr=best.n_ccr,
        ordered_crs=best.ordered_crs,
        assumed_powers=np.asarray(best.assumed_powers)[relays],
        estimated_utility=best.estimated_utility,
        scheme=scheme,
        candidates=candidates,
    )


def bs_utility(alpha, part: Partition, p, gains: ChannelGains, c: float, p_max: float,
               n0: float) -> float:
    """Total CR SINR minus the normalised power cost; zero without a lease."""
    if not c > 0:
        raise DomainError("c must be positive")
    if not is_lease(alpha):
        return 0.0
    p = np.asarray(p, dtype=float)
    sinr = gains.g_s * p / interference(p, gains.g_s, n0)
    return float(np.sum(sinr - c * p / p_max))


def bs_optimize_count(alpha: float, ordered_crs, gains: ChannelGains,
                      secondary: SecondaryParams, primary: PrimaryParams,
                      game: GameParams = GameParams()) -> CountChoice:
    """BS best response: the CCR count maximising ``l U_CR + (1 - l) U_P``.

    Every count 0..K is tried with its fixed-point powers. Counts whose
    fixed point does not converge are excluded. Ties keep the smaller count.
    """
    qos = secondary.at(alpha)
    lam = game.lambda_bs
    objective, u_p, u_cr, results, excluded = {}, {}, {}, {}, []
    best = None
    for n_ccr in range(gains.k + 1):
        part = Partition(ordered_crs, n_ccr)
        res = solve_fixed_point(part, qos, gains, tol=game.tol, max_iter=game.max_iter)
        results[n_ccr] = res
        if not res.converged:
            excluded.append(n_ccr)
            continue
        u_p[n_ccr] = primary_utility(alpha, part, res.p_star, gains, primary)
        u_cr[n_ccr] = bs_utility(alpha, part, res.p_star, gains, game.c, secondary.p_max,
                                 secondary.n0)
        objective[n_ccr] = lam * u_cr[n_ccr] + (1 - lam) * u_p[n_ccr]
        if best is None or objective[n_ccr] > objective[best]:
            best = n_ccr
    return CountChoice(best, objective, u_p, u_cr, results, excluded)


def alpha_grid(step: float) -> np.ndarray:
    """Slot fractions ``step, 2 step, ...`` strictly below 1/2."""
    n = math.ceil(0.5 / step - 1e-9)
    grid = np.round(step * np.arange(1, n), 12)
    return grid[grid < 0.5]


def backward_induction_solve(gains: ChannelGains, secondary: SecondaryParams,
                             primary: PrimaryParams, game: GameParams = GameParams(),
                             alphas=None) -> GameSolution:
    """Complete-information solution by backward induction on an alpha grid.

    For each alpha the relays are ranked by per-relay SINR using the powers
    of the all-CCR fixed point, the BS picks its count, and the primary keeps
    the alpha with the highest resulting utility (ties: smallest alpha).
    The lease is dropped if it does not beat the reservation payoff.
    """
    grid = alpha_grid(game.alpha_step) if alphas is None else np.asarray(alphas, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid >= 0.5):
        raise ConfigurationError("alpha grid must be non-empty and inside (0, 1/2)",
                                 key="game.alpha_step")
    k = gains.k
    reservation = reservation_payoff(gains, primary)
    per_alpha = []
    best = None
    for alpha in grid:
        alpha = float(alpha)
        full = solve_fixed_point(Partition.first(k, k), secondary.at(alpha), gains,
                                 tol=game.tol, max_iter=game.max_iter)
        order = order_relays(gains, leased_tx_power(alpha, primary.p_p0), full.p_star,
                             OrderingScheme.R_SINR, primary.n0)
        choice = bs_optimize_count(alpha, order, gains, secondary, primary, game)
        record = {
            "alpha": alpha,
            "n_star": choice.n_star,
            "u_p": None if choice.n_star is None else choice.u_p[choice.n_star],
            "excluded": choice.excluded,
            "ordering_converged": full.converged,
        }
        per_alpha.append(record)
        if choice.n_star is None:
            continue
        if best is None or record["u_p"] > best[0]["u_p"]:
            best = (record, order, choice)

    diagnostics = {
        "grid_size": int(grid.size),
        "excluded_pairs": sum(len(r["excluded"]) for r in per_alpha),
        "alphas_without_count": sum(r["n_star"] is None for r in per_alpha),
        "per_alpha": per_alpha,
    }
    if best is None or best[0]["u_p"] <= reservation:
        return GameSolution(None, 0, tuple(range(k)), np.zeros(k), reservation, 0.0,
                            reservation, best is not None, diagnostics)
    record, order, choice = best
    n_star = choice.n_star
    res = choice.results[n_star]
    return GameSolution(
        alpha_star=record["alpha"],
        n_star=n_star,
        ordered_crs=order,
        p_star=res.p_star,
        u_p=choice.u_p[n_star],
        u_cr=choice.u_cr[n_star],
        u_reservation=reservation,
        converged=res.converged,
        diagnostics=diagnostics | {"iterations": res.iterations, "residual": res.residual},
    )


def realized_outcome(decision: LeaseDecision, gains: ChannelGains,
                     secondary: SecondaryParams, primary: PrimaryParams,
                     game: GameParams = GameParams()) -> GameSolution:
    """Actual utilities once the CRs play the power-control game for a decision."""
    reservation = reservation_payoff(gains, primary)
    k = gains.k
    if not is_lease(decision.alpha_hat):
        return GameSolution(None, 0, decision.ordered_crs, np.zeros(k), reservation, 0.0,
                            reservation, True, {"iterations": 0, "residual": 0.0})
    part = decision.partition
    alpha = decision.alpha_hat
    res = solve_fixed_point(part, secondary.at(alpha), gains, tol=game.tol,
                            max_iter=game.max_iter)
    return GameSolution(
        alpha_star=alpha,
        n_star=decision.n_ccr,
        ordered_crs=decision.ordered_crs,
        p_star=res.p_star,
        u_p=primary_utility(alpha, part, res.p_star, gains, primary),
        u_cr=bs_utility(alpha, part, res.p_star, gains, game.c, secondary.p_max, secondary.n0),
        u_reservation=reservation,
        converged=res.converged,
        diagnostics={"iterations": res.iterations, "residual": res.residual},
    )
