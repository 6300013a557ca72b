"""Time-triggered metascheduling simulator.

A library for reconstructing valid time-triggered schedules under context
events (hardware failures, slacks, mode changes), maintaining a graph of
schedules switched at runtime, and improving spatial allocations online
with bandit and multi-agent reinforcement learning backed by a small
retrainable neural inference.
"""

from .models import (
    AppModel,
    ContextEvent,
    ContextModel,
    EventKind,
    Message,
    PlatformModel,
    Task,
    apply_event,
    apply_failure,
    apply_mode_change,
    apply_slack,
    decode_context_word,
    encode_context_word,
)
from .priorities import (
    BottomLevelAdapter,
    InferenceAdapter,
    PriorityAssignment,
    b_level,
    infer_priorities,
    least_loaded_allocation,
)
from .reconstruction import (
    EvaluationProfile,
    EvaluationReport,
    ProfileKind,
    RecoveryLog,
    RecoverySnapshot,
    Schedule,
    allocate_messages,
    evaluate,
    fix_past,
    make_snapshot,
    reconstruct,
    restore,
    safety_check,
    snapshot,
)
from .msgraph import MultiScheduleGraph, build_offline_msg
from .bandits import (
    AgentEnsemble,
    BanditState,
    BestCatalog,
    EpsilonSchedule,
    OnlineScenario,
    SchedulingEnv,
    TriggerMode,
    cb_episode,
    check_trigger,
    epsilon_step,
    mab_episode,
    marl_episode,
    q_update,
    run_online_learning,
    select_action,
)
from .neural import (
    FeatureSpec,
    Mlp,
    NeuralSpatialAdapter,
    TrainConfig,
    build_context_features,
    commit_if_improved,
    forward,
    gradient_check,
    train,
    transfer_weights,
)
from .harness import (
    ExperimentConfig,
    RetrainConfig,
    ScenarioConfig,
    generate_scenario,
    inject_events,
    retraining_pipeline,
    run_experiment,
)

__version__ = "0.1.0"
