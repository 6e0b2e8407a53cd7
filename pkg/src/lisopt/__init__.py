"""Energy-efficiency design toolkit for surface-assisted multi-user MISO downlink.

Jointly designs per-user transmit powers and low-resolution surface phase
shifts to maximize bits-per-Joule, with exhaustive-search and relay
baselines and a seeded Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

from .channels import ChannelSet, pathloss_gain, sample_channels
from .config import (
    CONTINUOUS,
    Geometry,
    PathlossModel,
    PathlossParams,
    RelayParams,
    SystemConfig,
    db_to_linear,
    dbm_to_watts,
    watts_to_dbm,
)
from .harness import (
    AggregateRow,
    ResultRow,
    Scenario,
    aggregate,
    emit_outputs,
    load_scenario,
    run_scenario,
    scenario_from_pairs,
)
from .model import (
    PhaseConfig,
    PowerAllocation,
    SingularMatrixError,
    SolveReport,
    consumed_power,
    effective_channel,
    energy_efficiency,
    phase_grid,
    sinr,
    sum_rate,
    total_power,
    transmit_power_used,
    zf_precoder,
)
from .phases import (
    PhaseOptimizationError,
    PhaseSolveOutcome,
    RelaxedSolveOptions,
    check_feasibility,
    quantize_phases,
    solve_phase_subproblem,
    solve_relaxed,
    trace_objective,
    trace_values,
)
from .power import (
    DinkelbachTrace,
    InfeasibleError,
    NonConvergenceError,
    dinkelbach,
    dinkelbach_allocation,
    inner_concave_solve,
    qos_min_powers,
    solve_inner,
    zf_power_weights,
)
from .solver import (
    AlternatingIterate,
    AlternatingTrace,
    EnumerationCapError,
    alternating_ee_max,
    exhaustive_search,
    max_rate_power_fill,
    relay_baseline,
)

__all__ = [
    "AggregateRow",
    "AlternatingIterate",
    "AlternatingTrace",
    "CONTINUOUS",
    "ChannelSet",
    "DinkelbachTrace",
    "EnumerationCapError",
    "Geometry",
    "InfeasibleError",
    "NonConvergenceError",
    "PathlossModel",
    "PathlossParams",
    "PhaseConfig",
    "PhaseOptimizationError",
    "PhaseSolveOutcome",
    "PowerAllocation",
    "RelaxedSolveOptions",
    "RelayParams",
    "ResultRow",
    "Scenario",
    "SingularMatrixError",
    "SolveReport",
    "SystemConfig",
    "aggregate",
    "alternating_ee_max",
    "check_feasibility",
    "consumed_power",
    "db_to_linear",
    "dbm_to_watts",
    "dinkelbach",
    "dinkelbach_allocation",
    "effective_channel",
    "emit_outputs",
    "energy_efficiency",
    "exhaustive_search",
    "inner_concave_solve",
    "load_scenario",
    "max_rate_power_fill",
    "pathloss_gain",
    "phase_grid",
    "qos_min_powers",
    "quantize_phases",
    "relay_baseline",
    "run_scenario",
    "sample_channels",
    "scenario_from_pairs",
    "sinr",
    "solve_inner",
    "solve_phase_subproblem",
    "solve_relaxed",
    "sum_rate",
    "total_power",
    "trace_objective",
    "trace_values",
    "transmit_power_used",
    "watts_to_dbm",
    "zf_power_weights",
    "zf_precoder",
]
