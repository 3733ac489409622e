"""Heterogeneous opportunistic power control among the cognitive radios.

Cooperating CRs (CCRs) track an SINR target that compensates them for
relaying; non-cooperating CRs (NCCRs) run the type-II opportunistic update.
The joint best-response map is two-sided scalable, so a synchronous
iteration from any start converges to the unique fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .channel import ChannelGains
from .errors import ConfigurationError, DomainError

__all__ = [
    "Role",
    "Partition",
    "QosParams",
    "FixedPointResult",
    "rho_weight",
    "sinr_target",
    "interference",
    "received_sinr",
    "node_utility",
    "best_response_update",
    "solve_fixed_point",
    "trace_rows",
    "check_power_vector",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1000


class Role(str, Enum):
    CCR = "CCR"
    NCCR = "NCCR"


@dataclass(frozen=True)
class Partition:
    """An ordered CR list whose first ``n_ccr`` entries cooperate."""

    ordered_crs: tuple[int, ...]
    n_ccr: int

    def __post_init__(self):
        order = tuple(int(i) for i in self.ordered_crs)
        if sorted(order) != list(range(len(order))):
            raise ConfigurationError("ordered_crs must be a permutation of 0..K-1")
        if not 0 <= self.n_ccr <= len(order):
            raise ConfigurationError(f"n_ccr={self.n_ccr} outside 0..{len(order)}")
        object.__setattr__(self, "ordered_crs", order)
        object.__setattr__(self, "n_ccr", int(self.n_ccr))

    @classmethod
    def first(cls, k: int, n_ccr: int) -> "Partition":
        return cls(tuple(range(k)), n_ccr)

    @property
    def k(self) -> int:
        return len(self.ordered_crs)

    @property
    def ccrs(self) -> tuple[int, ...]:
        return self.ordered_crs[: self.n_ccr]

    @property
    def nccrs(self) -> tuple[int, ...]:
        return self.ordered_crs[self.n_ccr :]

    def ccr_mask(self) -> np.ndarray:
        mask = np.zeros(self.k, dtype=bool)
        mask[list(self.ccrs)] = True
        return mask

    def role(self, k: int) -> Role:
        return Role.CCR if k in self.ccrs else Role.NCCR


@dataclass(frozen=True)
class QosParams:
    alpha: float
    lambda_qos: float = 2.0
    p_max: float = 0.6
    n0: float = 10 ** -13.3

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ConfigurationError(f"alpha={self.alpha} outside (0, 1/2)", key="alpha")
        if not self.lambda_qos > 0:
            raise ConfigurationError("lambda_qos must be positive", key="qos.lambda")
        if not self.p_max > 0:
            raise ConfigurationError("p_max must be positive", key="qos.p_max")
        if not self.n0 > 0:
            raise ConfigurationError("noise power must be positive", key="noise.n0")


@dataclass
class FixedPointResult:
    p_star: np.ndarray
    iterations: int
    converged: bool
    residual: float
    trace: list[np.ndarray] | None = field(default=None, repr=False)


def rho_weight(alpha_eff, g, lambda_qos):
    """Preference weight between reaching the QoS target and saving power.

    ``2 e^(lambda*alpha/2) / (g^(3/4) + 2 e^(lambda*alpha/2))``. CCRs pass the
    actual slot fraction, NCCRs pass zero. Works elementwise on arrays.
    """
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise DomainError("rho_weight needs a positive channel gain")
    if np.any(np.asarray(alpha_eff) < 0):
        raise DomainError("rho_weight needs alpha_eff >= 0")
    boost = 2.0 * np.exp(lambda_qos * np.asarray(alpha_eff, dtype=float) / 2.0)
    out = boost / (g**0.75 + boost)
    return float(out) if out.ndim == 0 else out


def sinr_target(alpha: float, k_total: int, n_ccr: int, lambda_qos: float) -> float:
    """CCR SINR target ``lambda*alpha / sqrt(K*N)``."""
    if n_ccr < 1:
        raise DomainError("SINR targets exist only for a non-empty CCR set")
    if k_total < n_ccr:
        raise DomainError("k_total must be at least n_ccr")
    if not 0 < alpha < 0.5:
        raise DomainError(f"alpha={alpha} outside (0, 1/2)")
    return lambda_qos * alpha / np.sqrt(k_total * n_ccr)


def check_power_vector(p, p_max: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or np.any(p > p_max) or not np.all(np.isfinite(p)):
        raise DomainError(f"power vector must lie in [0, {p_max}]^K")
    return p


def interference(p: np.ndarray, g_s: np.ndarray, n0: float) -> np.ndarray:
    """Noise plus interference seen by every CR at the BS (single-user decoding).

    The sum over the other CRs is built from prefix and suffix sums rather
    than ``total - own``, which cancels catastrophically when one CR's
    received power dwarfs the noise.
    """
    received = np.asarray(g_s * p, dtype=float)
    before = np.concatenate(([0.0], np.cumsum(received)[:-1]))
    after = np.concatenate((np.cumsum(received[::-1])[::-1][1:], [0.0]))
    return n0 + (before + after)


def received_sinr(k: int, p, gains: ChannelGains, n0: float) -> tuple[float, float]:
    """Return ``(SINR_k, I_k)`` for CR ``k`` at the base station."""
    p = np.asarray(p, dtype=float)
    i_k = float(interference(p, gains.g_s, n0)[k])
    return gains.g_s[k] * p[k] / i_k, i_k


def node_utility(k: int, role: Role, alpha: float, p, gains: ChannelGains,
                 params: QosParams, part: Partition) -> float:
    """Utility of CR ``k``; CCRs minimise theirs, NCCRs maximise theirs.

    The CCR distance-to-target term uses ``sqrt(|SINR - target|)`` so the
    utility stays real below the target.
    """
    role = Role(role)
    if part.role(k) is not role:
        raise DomainError(f"CR {k} is a {part.role(k).value}, not a {role.value}")
    sinr, _ = received_sinr(k, p, gains, params.n0)
    g = gains.g_s[k]
    p_k = float(np.asarray(p)[k])
    if role is Role.CCR:
        rho = rho_weight(alpha, g, params.lambda_qos)
        target = sinr_target(alpha, part.k, part.n_ccr, params.lambda_qos)
        return rho * np.sqrt(abs(sinr - target)) + (1 - rho) * p_k
    rho = rho_weight(0.0, g, params.lambda_qos)
    return rho * np.sqrt(sinr) - (1 - rho) * p_k


def _update_coefficients(part: Partition, params: QosParams, g_s: np.ndarray,
                         rho: Callable, target: Callable):
    # Lambda_k(p) = a1_k * I_k + a2_k / I_k for every k (a1 = 0 for NCCRs).
    mask = part.ccr_mask()
    alpha_eff = np.where(mask, params.alpha, 0.0)
    r = rho(alpha_eff, g_s, params.lambda_qos)
    a2 = (r / (2.0 * (1.0 - r))) ** 2 * g_s
    a1 = np.zeros_like(g_s)
    if part.n_ccr:
        a1[mask] = target(params.alpha, part.k, part.n_ccr, params.lambda_qos) / g_s[mask]
    return a1, a2


def best_response_update(p, part: Partition, params: QosParams, gains: ChannelGains, *,
                         clamp: bool = True, rho: Callable = rho_weight,
                         target: Callable = sinr_target) -> np.ndarray:
    """One synchronous best-response step for all K CRs.

    All interference terms come from the input vector. ``clamp=False`` gives
    the raw map, used to check two-sided scalability. ``rho`` and ``target``
    may be replaced by other weight/target functionals with the same
    signatures.
    """
    p = np.asarray(p, dtype=float)
    a1, a2 = _update_coefficients(part, params, gains.g_s, rho, target)
    i = interference(p, gains.g_s, params.n0)
    out = a1 * i + a2 / i
    if clamp:
        out = np.clip(out, 0.0, params.p_max)
    return out


def solve_fixed_point(part: Partition, params: QosParams, gains: ChannelGains, p0=None, *,
                      tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                      record_trace: bool = False, rho: Callable = rho_weight,
                      target: Callable = sinr_target) -> FixedPointResult:
    """Iterate the clamped best-response map to its unique fixed point.

    Stops once ``max|p_new - p| / max|p_new| <= tol``. Hitting ``max_iter``
    returns ``converged=False`` with the last iterate.
    """
    if not tol > 0:
        raise ConfigurationError("tol must be positive", key="power.tol")
    if max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1", key="power.max_iter")
    if part.k != gains.k:
        raise DomainError("partition and gains disagree on K")
    p = np.zeros(gains.k) if p0 is None else check_power_vector(p0, params.p_max).copy()
    a1, a2 = _update_coefficients(part, params, gains.g_s, rho, target)
    trace = [p.copy()] if record_trace else None
    residual = np.inf
    for n in range(1, max_iter + 1):
        i = interference(p, gains.g_s, params.n0)
        new = np.clip(a1 * i + a2 / i, 0.0, params.p_max)
        scale = np.max(np.abs(new))
        step = np.max(np.abs(new - p))
        residual = step / scale if scale > 0 else step
        p = new
        if record_trace:
            trace.append(p.copy())
        if residual <= tol:
            return FixedPointResult(p, n, True, float(residual), trace)
    return FixedPointResult(p, max_iter, False, float(residual), trace)


def trace_rows(result: FixedPointResult, gains: ChannelGains, n0: float):
    """Yield ``(iter, k, p_k, sinr_k, I_k)`` rows for a recorded trace."""
    if result.trace is None:
        raise ValueError("solve_fixed_point was run without record_trace=True")
    for it, p in enumerate(result.trace):
        i = interference(p, gains.g_s, n0)
        sinr = gains.g_s * p / i
        for k in range(p.size):
            yield it, k, float(p[k]), float(sinr[k]), float(i[k])
