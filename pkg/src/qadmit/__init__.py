"""Admission-control queueing laboratory.

An overloaded queue receives jobs at rate ``arrival_rate`` and service
tokens at rate ``1 - divert_budget``; the manager may divert arrivals at a
long-run rate up to the budget, possibly peeking at a lookahead window of
revealed future events.  This package bundles the pieces needed to study
that system at desk scale: a reproducible merged-stream generator, online
and lookahead diversion policies, an exact discrete-event simulator with a
pathwise flow identity, closed-form birth-death oracles with the
heavy-traffic scaling table, and Monte Carlo machinery for the rare
excursion events behind the lookahead lower bound.
"""

from .analytic import (
    BirthDeathSolution,
    LdpRateFit,
    ScalingRow,
    bd_stationary,
    ldp_rate_estimate,
    online_scaling_table,
    poisson_tail,
)
from .errors import ConfigurationError, EstimationError, OutOfRangeError
from .excursion import (
    EventIndicators,
    ExcursionConfig,
    ExcursionReport,
    RateFit,
    diversion_idling_diagnostic,
    e1_zeta_sweep,
    e5_rate_fit,
    estimate_event_probs,
    evaluate_events,
    reference_queue,
)
from .policy import (
    AdmitAllPolicy,
    BudgetState,
    DecisionTrace,
    PolicyState,
    ThresholdPolicy,
    WindowedDrainPolicy,
    admit_all_decide,
    make_policy,
    min_feasible_threshold,
    threshold_decide,
    windowed_drain_decide,
)
from .sim import (
    QueueTrajectory,
    SimMetrics,
    flow_identity_residual,
    flow_identity_residuals,
    last_low_time,
    occupancy_fraction,
    run_simulation,
    window_diversions,
)
from .stream import (
    ARRIVAL,
    TOKEN,
    EventStream,
    ModelParams,
    count_events,
    generate_stream,
    net_input,
    replication_seed,
    running_extreme,
    stream_to_csv,
)

__all__ = [
    "ARRIVAL",
    "TOKEN",
    "AdmitAllPolicy",
    "BirthDeathSolution",
    "BudgetState",
    "ConfigurationError",
    "DecisionTrace",
    "EstimationError",
    "EventIndicators",
    "EventStream",
    "ExcursionConfig",
    "ExcursionReport",
    "LdpRateFit",
    "ModelParams",
    "OutOfRangeError",
    "PolicyState",
    "QueueTrajectory",
    "RateFit",
    "ScalingRow",
    "SimMetrics",
    "ThresholdPolicy",
    "WindowedDrainPolicy",
    "admit_all_decide",
    "bd_stationary",
    "count_events",
    "diversion_idling_diagnostic",
    "e1_zeta_sweep",
    "e5_rate_fit",
    "estimate_event_probs",
    "evaluate_events",
    "flow_identity_residual",
    "flow_identity_residuals",
    "generate_stream",
    "last_low_time",
    "ldp_rate_estimate",
    "make_policy",
    "min_feasible_threshold",
    "net_input",
    "occupancy_fraction",
    "online_scaling_table",
    "poisson_tail",
    "reference_queue",
    "replication_seed",
    "run_simulation",
    "running_extreme",
    "stream_to_csv",
    "threshold_decide",
    "window_diversions",
    "windowed_drain_decide",
]
