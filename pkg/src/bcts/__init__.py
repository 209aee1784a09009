"""Behavior-constrained Thompson sampling: agents, environments, experiments."""

__version__ = "0.1.0"

from .agents import (
    Agent,
    AgentKind,
    BlendConfig,
    ConstrainedPolicy,
    TeachingMethod,
    learn_constraints,
    load_policy,
    run_online,
    save_policy,
    select_bcts,
    select_cts,
    select_mask,
    select_random,
)
from .bounds import BoundInputs, theorem1_bound, theorem2_bound
from .config import ExperimentConfig, parse_config, serialize_config
from .metrics import (
    TrajectoryLog,
    behavioral_error,
    cumulative_average_regret,
    error_curve,
    reference_rewards,
    regret_curve,
)
from .posterior import (
    ArmPosterior,
    SamplerParams,
    compute_v,
    init_posterior,
    sample_weights,
    score,
    update_posterior,
)
from .runner import ExperimentResult, ResultTable, RunRow, run_experiment

__all__ = [
    "Agent",
    "AgentKind",
    "ArmPosterior",
    "BlendConfig",
    "BoundInputs",
    "ConstrainedPolicy",
    "ExperimentConfig",
    "ExperimentResult",
    "ResultTable",
    "RunRow",
    "SamplerParams",
    "TeachingMethod",
    "TrajectoryLog",
    "behavioral_error",
    "compute_v",
    "cumulative_average_regret",
    "error_curve",
    "init_posterior",
    "learn_constraints",
    "load_policy",
    "parse_config",
    "reference_rewards",
    "regret_curve",
    "run_experiment",
    "run_online",
    "sample_weights",
    "save_policy",
    "score",
    "select_bcts",
    "select_cts",
    "select_mask",
    "select_random",
    "serialize_config",
    "theorem1_bound",
    "theorem2_bound",
    "update_posterior",
]
