"""Energy-constrained broadcast: throughput oracle, Gibbs solver and protocol simulator."""

from .analytics import (
    BurstinessReport,
    LatencyReport,
    ReplicateRecord,
    analytic_burst_length,
    burstiness_report,
    confidence_interval,
    heterogeneity_replicate,
    latency_report,
    nearest_rank,
    normalized_report,
    sample_heterogeneous_network,
)
from .gibbs import (
    GibbsResult,
    StateDistribution,
    dual_function,
    dual_gradient,
    gradient_descent,
    marginal_fractions,
    p4_objective,
    steady_state_distribution,
)
from .io import ConfigError, load_json, validate_config, validate_document
from .lp import LPError, LPResult, simplex_max
from .network import NetworkConfig, NodePowerProfile, Topology, TopologyError
from .oracle import (
    OracleSolution,
    PeriodicSchedule,
    RegimeError,
    ScheduleError,
    audit_schedule,
    build_periodic_schedule,
    homogeneous_closed_form,
    nonclique_bounds,
    schedule_groupput,
    solve_anyput_lp,
    solve_groupput_lp,
    solve_oracle,
)
from .protocol import ListenerEstimate, NodeRuntime, ProtocolVariant, RateSet, transition_rates, update_multiplier
from .simulator import (
    BalanceReport,
    Estimator,
    SimConfig,
    SimMetrics,
    replica_seed,
    run_simulation,
    verify_detailed_balance,
)
from .states import (
    NodeState,
    StateSpaceSizeError,
    ThroughputMode,
    enumerate_states,
    listener_stats,
    num_states,
    state_from_index,
    state_index,
    state_throughput,
)

__version__ = "0.1.0"
