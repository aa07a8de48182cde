"""Gossip-based information spreading in mobile networks.

Simulates the move-and-gossip round structure on the unit square under
four mobility laws, estimates the mobile conductance of a configuration by
Monte Carlo (with exact closed forms for fully random motion), measures
epsilon-spreading times against static baselines, and quantifies the
sparse-network penalty and the mobility-connectivity tradeoff.
"""

__version__ = "0.1.0"

from .conductance import (
    BruteForceResult,
    ClosedForm,
    ConductanceEstimate,
    Cut,
    MeanEstimate,
    ScalingClass,
    bisection_cut,
    brute_force_conductance,
    cut_flow,
    estimate_conductance,
    fr_closed_form,
    fr_contact_prob,
    fr_cross_pmf,
    fr_degree_pmf,
    fr_expected_cut_flow,
    meaningful_contact_prob,
    scaling_class,
)
from .experiments import (
    GapRow,
    GapSweepResult,
    RingRow,
    default_nr2_grid,
    gap_sweep,
    oracle_check,
    reference_radius,
    ring_table,
)
from .geometry import Snapshot, build_snapshot, sample_uniform_positions
from .gossip import (
    RoundRecord,
    RoundTrace,
    SpreadingResult,
    edge_use_ratio,
    epsilon_quantile,
    gossip_round,
    make_informed,
    ring_spreading_time,
    run_spreading,
    spreading_time,
)
from .mobility import (
    Mobility,
    MobilitySpec,
    NodeStates,
    init_states,
    mobility_intensity,
    move,
)
from .tradeoff import (
    NonMonotoneError,
    ThresholdResult,
    empirical_threshold_search,
    mobility_balance_threshold,
    mobility_ratio_threshold,
    spec_for_intensity,
    velocity_threshold,
)

__all__ = [name for name in dir() if not name.startswith("_")]
