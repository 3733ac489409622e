"""Network geometry and per-slot channel power gains.

Node positions are planar coordinates in kilometres with the cognitive base
station at the origin. Power gains follow the amplitude law ``h = r**-a``,
so ``g = |h|**2 = r**(-2a)`` where ``r`` is the scaled distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError

__all__ = [
    "Fading",
    "Topology",
    "ChannelGains",
    "ChannelConfig",
    "generate_topology",
    "compute_gains",
    "path_gain",
    "scenario_to_dict",
    "scenario_from_dict",
    "dump_scenario",
    "load_scenario",
]


class Fading(str, Enum):
    DETERMINISTIC = "deterministic"
    RAYLEIGH = "rayleigh"


@dataclass(frozen=True)
class Topology:
    pt_pos: tuple[float, float]
    pr_pos: tuple[float, float]
    bs_pos: tuple[float, float]
    cr_pos: np.ndarray  # shape (K, 2)

    def __post_init__(self):
        cr = np.asarray(self.cr_pos, dtype=float)
        if cr.ndim != 2 or cr.shape[1] != 2 or cr.shape[0] < 1:
            raise ConfigurationError("cr_pos must have shape (K, 2) with K >= 1")
        object.__setattr__(self, "cr_pos", cr)

    @property
    def k(self) -> int:
        return self.cr_pos.shape[0]


@dataclass(frozen=True)
class ChannelGains:
    """Power gains for one slot: PT->PR, PT->CR_i, CR_i->PR and CR_i->BS."""

    g_p: float
    g_ps: np.ndarray
    g_sp: np.ndarray
    g_s: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in ("g_ps", "g_sp", "g_s"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ConfigurationError(f"{name} must be one-dimensional", key=name)
            object.__setattr__(self, name, arr)
            arrays.append(arr)
        if len({a.size for a in arrays}) != 1 or arrays[0].size < 1:
            raise ConfigurationError("g_ps, g_sp and g_s must have equal length K >= 1")
        values = np.concatenate([[self.g_p], *arrays])
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ConfigurationError("channel gains must be strictly positive and finite")
        object.__setattr__(self, "g_p", float(self.g_p))

    @property
    def k(self) -> int:
        return self.g_s.size


@dataclass(frozen=True)
class ChannelConfig:
    path_exponent: float = 2.0
    distance_unit_scale: float = 1.0
    fading: Fading = Fading.DETERMINISTIC
    seed: int = 0

    def __post_init__(self):
        if not self.path_exponent > 0:
            raise ConfigurationError("path exponent must be positive", key="channel.a")
        if not self.distance_unit_scale > 0:
            raise ConfigurationError(
                "distance unit scale must be positive", key="channel.distance_unit_scale"
            )
        object.__setattr__(self, "fading", Fading(self.fading))


def generate_topology(seed: int, k: int, l_s: float = 2.0, l_p: float = 1.0) -> Topology:
    """Drop K CRs uniformly in the ``l_s`` square and PT, PR in the ``l_p`` square.

    Both squares are centred on the base station at the origin.
    """
    if k < 1:
        raise ConfigurationError("need at least one CR", key="scenario.k")
    if not l_s > 0:
        raise ConfigurationError("secondary cell side must be positive", key="channel.l_s")
    if not l_p > 0:
        raise ConfigurationError("primary cell side must be positive", key="channel.l_p")
    rng = np.random.default_rng(seed)
    crs = rng.uniform(-l_s / 2, l_s / 2, size=(k, 2))
    pt, pr = rng.uniform(-l_p / 2, l_p / 2, size=(2, 2))
    return Topology(
        pt_pos=(float(pt[0]), float(pt[1])),
        pr_pos=(float(pr[0]), float(pr[1])),
        bs_pos=(0.0, 0.0),
        cr_pos=crs,
    )


def path_gain(r, a: float, scale: float = 1.0):
    """Deterministic power gain ``(scale*r)**(-2a)``; rejects zero distances."""
    r = np.asarray(r, dtype=float) * scale
    if np.any(r <= 0):
        raise DegenerateGeometryError("coincident transmitter and receiver")
    return r ** (-2.0 * a)


def compute_gains(topology: Topology, cfg: ChannelConfig) -> ChannelGains:
    pt = np.asarray(topology.pt_pos)
    pr = np.asarray(topology.pr_pos)
    bs = np.asarray(topology.bs_pos)
    crs = topology.cr_pos
    dist = {
        "g_p": np.linalg.norm(pt - pr)[None],
        "g_ps": np.linalg.norm(crs - pt, axis=1),
        "g_sp": np.linalg.norm(crs - pr, axis=1),
        "g_s": np.linalg.norm(crs - bs, axis=1),
    }
    gains = {
        name: path_gain(r, cfg.path_exponent, cfg.distance_unit_scale)
        for name, r in dist.items()
    }
    if cfg.fading is Fading.RAYLEIGH:
        # |h|^2 of a unit-variance proper complex Gaussian is Exp(1).
        rng = np.random.default_rng(cfg.seed)
        gains = {name: g * rng.exponential(1.0, size=g.shape) for name, g in gains.items()}
    return ChannelGains(
        g_p=float(gains["g_p"][0]), g_ps=gains["g_ps"], g_sp=gains["g_sp"], g_s=gains["g_s"]
    )


def scenario_to_dict(topology: Topology | None, gains: ChannelGains) -> dict:
    """JSON-ready scenario record with keys pt, pr, bs, crs, g_p, g_ps, g_sp, g_s."""
    out = {}
    if topology is not None:
        out.update(
            pt=list(topology.pt_pos),
            pr=list(topology.pr_pos),
            bs=list(topology.bs_pos),
            crs=topology.cr_pos.tolist(),
        )
    out.update(
        g_p=gains.g_p, g_ps=gains.g_ps.tolist(), g_sp=gains.g_sp.tolist(), g_s=gains.g_s.tolist()
    )
    return out


def scenario_from_dict(data: dict) -> tuple[Topology | None, ChannelGains]:
    missing = [key for key in ("g_p", "g_ps", "g_sp", "g_s") if key not in data]
    if missing:
        raise ConfigurationError(f"scenario is missing {missing[0]!r}", key=missing[0])
    topology = None
    if "crs" in data:
        topology = Topology(
            pt_pos=tuple(data["pt"]),
            pr_pos=tuple(data["pr"]),
            bs_pos=tuple(data.get("bs", (0.0, 0.0))),
            cr_pos=np.asarray(data["crs"], dtype=float),
        )
    gains = ChannelGains(
        g_p=data["g_p"], g_ps=data["g_ps"], g_sp=data["g_sp"], g_s=data["g_s"]
    )
    return topology, gains


def dump_scenario(topology: Topology | None, gains: ChannelGains) -> str:
    return json.dumps(scenario_to_dict(topology, gains), indent=2, sort_keys=True)


def load_scenario(text: str) -> tuple[Topology | None, ChannelGains]:
    return scenario_from_dict(json.loads(text))
