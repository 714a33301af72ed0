"""Adaptive vocabulary tutor.

Online grid-Bayesian inference of per-learner (or per-item) forgetting
parameters, schedule-aware planning of which item to present next, a
Leitner baseline, a simulation harness for artificial-learner experiments,
and a live tutor service with an HTTP API.
"""

from .errors import (
    ConfigurationError,
    DegeneratePosteriorError,
    ModeError,
    TimeReversalError,
    UnseenItemError,
)
from .leitner import LeitnerConfig, LeitnerState, leitner_select, leitner_update
from .memory import (
    ItemState,
    ModelKind,
    ParamPoint,
    recall_probability,
    record_presentation,
)
from .planner import (
    PlannerConfig,
    PlannerKind,
    Schedule,
    Session,
    TeacherState,
    conservative_select,
    myopic_select,
    reward_count,
    rollout_myopic,
)
from .psychologist import (
    Belief,
    BeliefBank,
    GridSpec,
    OmniscientBank,
    belief_table,
    init_belief,
    posterior_mean,
    predict_recall,
    prior_for_new_item,
    update_belief,
)
from .records import TrialRecord
from .simulator import (
    ExperimentConfig,
    LearnerSpec,
    RunMetrics,
    build_daily_schedule,
    prediction_error_series,
    run_experiment,
    simulate_learner_response,
)
from .stats import bonferroni, mann_whitney_u
from .teachers import LeitnerTeacher, ModelTeacher, make_teacher

__version__ = "0.1.0"

__all__ = [
    "Belief",
    "BeliefBank",
    "ConfigurationError",
    "DegeneratePosteriorError",
    "ExperimentConfig",
    "GridSpec",
    "ItemState",
    "LearnerSpec",
    "LeitnerConfig",
    "LeitnerState",
    "LeitnerTeacher",
    "ModeError",
    "ModelKind",
    "ModelTeacher",
    "OmniscientBank",
    "ParamPoint",
    "PlannerConfig",
    "PlannerKind",
    "RunMetrics",
    "Schedule",
    "Session",
    "TeacherState",
    "TimeReversalError",
    "TrialRecord",
    "UnseenItemError",
    "belief_table",
    "bonferroni",
    "build_daily_schedule",
    "conservative_select",
    "init_belief",
    "leitner_select",
    "leitner_update",
    "make_teacher",
    "mann_whitney_u",
    "myopic_select",
    "posterior_mean",
    "predict_recall",
    "prediction_error_series",
    "prior_for_new_item",
    "recall_probability",
    "record_presentation",
    "reward_count",
    "rollout_myopic",
    "run_experiment",
    "simulate_learner_response",
    "update_belief",
]
