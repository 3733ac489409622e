"""Primary-link SNR/SINR quantities and the piecewise leasing utility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelGains
from .errors import ConfigurationError, DomainError
from .power_control import Partition

__all__ = [
    "N0_DEFAULT",
    "PrimaryParams",
    "is_lease",
    "snr",
    "leased_tx_power",
    "relay_path_sinr",
    "total_af_sinr",
    "reservation_payoff",
    "primary_utility",
]

#: -133 dBW receiver noise, used as a power in watts.
N0_DEFAULT = 10 ** -13.3


@dataclass(frozen=True)
class PrimaryParams:
    p_p0: float = 0.6
    n0: float = N0_DEFAULT

    def __post_init__(self):
        if not self.p_p0 > 0:
            raise ConfigurationError("p_p0 must be positive", key="primary.p_p0")
        if not self.n0 > 0:
            raise ConfigurationError("noise power must be positive", key="noise.n0")


def is_lease(alpha) -> bool:
    """True when ``alpha`` selects leasing, i.e. lies strictly inside (0, 1/2).

    ``None`` (and alpha = 1/2, which leaves no leased subslot) means no lease.
    """
    return alpha is not None and 0 < alpha < 0.5


def snr(g, p, n0):
    """Plain link SNR ``g p / N0`` (reservation payoff, direct and first-hop SNRs)."""
    return g * p / n0


def leased_tx_power(alpha: float, p_p0: float) -> float:
    """PT power when the direct phase shrinks to a fraction alpha (constant energy)."""
    if not is_lease(alpha):
        raise DomainError(f"alpha={alpha} outside (0, 1/2)")
    return p_p0 / alpha


def relay_path_sinr(p_p, p_i, g_ps, g_sp, n0):
    """AF two-hop SINR at PR through one relay; elementwise over arrays."""
    p_i = np.asarray(p_i, dtype=float)
    num = p_p * p_i * np.asarray(g_ps) * np.asarray(g_sp)
    out = num / (n0 * (p_p * np.asarray(g_ps) + p_i * np.asarray(g_sp) + n0))
    return float(out) if out.ndim == 0 else out


def total_af_sinr(p_p, powers, g_ps, g_sp, g_p, n0) -> float:
    """Direct-path SNR plus the MRC sum of the relay-path SINRs."""
    direct = g_p * p_p / n0
    powers = np.asarray(powers, dtype=float)
    if powers.size == 0:
        return float(direct)
    return float(direct + np.sum(relay_path_sinr(p_p, powers, g_ps, g_sp, n0)))


def reservation_payoff(gains: ChannelGains, params: PrimaryParams) -> float:
    return gains.g_p * params.p_p0 / params.n0


def primary_utility(alpha, part: Partition, powers, gains: ChannelGains,
                    params: PrimaryParams) -> float:
    """Primary utility: reservation payoff without a lease, else ``2 alpha Gamma_AF``.

    ``powers`` is indexed by CR; only the CCRs of ``part`` contribute relay terms.
    """
    if not is_lease(alpha):
        return reservation_payoff(gains, params)
    p_p = leased_tx_power(alpha, params.p_p0)
    relays = list(part.ccrs)
    powers = np.asarray(powers, dtype=float)
    gamma = total_af_sinr(
        p_p, powers[relays], gains.g_ps[relays], gains.g_sp[relays], gains.g_p, params.n0
    )
    return 2.0 * alpha * gamma
