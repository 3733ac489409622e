"""Dynamic spectrum-leasing game between a primary link and a cognitive MAC network."""

from .channel import ChannelConfig, ChannelGains, Fading, Topology, compute_gains, generate_topology
from .errors import ConfigurationError, DegenerateGeometryError, DomainError, LeaseGameError
from .game import (
    SCHEMES,
    GameParams,
    GameSolution,
    LeaseDecision,
    OrderingScheme,
    PowerScheme,
    SecondaryParams,
    backward_induction_solve,
    border_sweep_estimate,
    realized_outcome,
    simplified_ccr_count,
)
from .power_control import Partition, QosParams, Role, best_response_update, solve_fixed_point
from .primary import PrimaryParams, primary_utility, reservation_payoff

__version__ = "0.1.0"
