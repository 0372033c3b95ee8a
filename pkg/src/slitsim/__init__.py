"""Epoch-based simulator and multi-objective scheduler for LLM inference
across geo-distributed datacenters.

The scheduler searches, per 15-minute epoch, for request-routing plans that
trade off time-to-first-token, carbon, water and electricity cost, and keeps
the non-dominated ones in a capped Pareto archive for an operator (or a fixed
policy) to pick from.
"""

__version__ = "0.1.0"

from .baselines import BASELINE_KINDS, baseline_plan
from .engine import (
    SCHEDULERS,
    EpochContext,
    EpochRecord,
    RunReport,
    SimulatorState,
    combine_reports,
    run_simulation,
)
from .infrastructure import (
    ConfigError,
    Constants,
    Datacenter,
    Infrastructure,
    NodeType,
    OptimizerParams,
    PowerState,
    PowerStateRatios,
    SimConfig,
    Topology,
    config_to_dict,
    load_config,
    parse_config,
    save_config,
)
from .optimizer import SELECTION_LABELS, PredictedWorkload, run_epoch, select_solutions
from .pareto import ArchiveEntry, ParetoArchive, dominates, hypervolume
from .plans import SchedulingPlan, materialize_assignment, uniform_plan
from .refconfig import build_reference_config, reference_doc, write_reference_config
from .server import ConsoleServer
from .surrogate import GradBoostModel, RegressionTree, featurize, fit_gradboost
from .sustainability import (
    OBJECTIVE_NAMES,
    EnergyBreakdown,
    ObjectiveVector,
    evaluate_plan,
    execute_assignment,
)
from .workload import (
    ArrivalPredictor,
    EpochTrace,
    LlmModelSpec,
    PredictorConfig,
    Request,
    TraceGenConfig,
    generate_trace,
    memory_footprint,
    predict_next_epoch,
    predictor_update,
    read_trace_ndjson,
    write_trace_ndjson,
)

__all__ = [
    "__version__",
    "BASELINE_KINDS",
    "baseline_plan",
    "SCHEDULERS",
    "EpochContext",
    "EpochRecord",
    "RunReport",
    "SimulatorState",
    "combine_reports",
    "run_simulation",
    "ConfigError",
    "Constants",
    "Datacenter",
    "Infrastructure",
    "NodeType",
    "OptimizerParams",
    "PowerState",
    "PowerStateRatios",
    "SimConfig",
    "Topology",
    "config_to_dict",
    "load_config",
    "parse_config",
    "save_config",
    "SELECTION_LABELS",
    "PredictedWorkload",
    "run_epoch",
    "select_solutions",
    "ArchiveEntry",
    "ParetoArchive",
    "dominates",
    "hypervolume",
    "SchedulingPlan",
    "materialize_assignment",
    "uniform_plan",
    "build_reference_config",
    "reference_doc",
    "write_reference_config",
    "ConsoleServer",
    "GradBoostModel",
    "RegressionTree",
    "featurize",
    "fit_gradboost",
    "OBJECTIVE_NAMES",
    "EnergyBreakdown",
    "ObjectiveVector",
    "evaluate_plan",
    "execute_assignment",
    "ArrivalPredictor",
    "EpochTrace",
    "LlmModelSpec",
    "PredictorConfig",
    "Request",
    "TraceGenConfig",
    "generate_trace",
    "memory_footprint",
    "predict_next_epoch",
    "predictor_update",
    "read_trace_ndjson",
    "write_trace_ndjson",
]
