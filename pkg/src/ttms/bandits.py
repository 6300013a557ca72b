"""Online learning unit: bandit search over spatial allocations.

Three models share one environment, the reconstructor: an epsilon-greedy
multi-armed bandit over whole spatial assignments, a contextual variant
whose per-arm reward estimates come from a neural predictor fed scenario
features, and a multi-agent model with one agent per task whose choices a
coordinator merges into a joint assignment rewarded globally.  Epsilon
decays geometrically, best schedules are catalogued, and strict
improvements are offered to the multi-schedule graph.
"""

from __future__ import annotations

import itertools
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .models import (
    AppModel,
    ContextEvent,
    PlatformExhaustedError,
    PlatformModel,
    effective_wcet,
)
from .neural import (
    FeatureDimensionError,
    FeatureSpec,
    Mlp,
    NonFiniteLossError,
    TrainConfig,
    _forward_batch,
    build_context_features,
    forward,
    train,
)
from .priorities import (
    InvalidInferenceError,
    PriorityAssignment,
    b_level,
    priority_order,
)
from .reconstruction import (
    EvaluationProfile,
    EvaluationReport,
    InfeasibleScheduleError,
    NoRouteError,
    RecoverySnapshot,
    Schedule,
    UnsafeScheduleError,
    evaluate,
    reconstruct,
)


class EmptyActionSpaceError(ValueError):
    """A bandit was asked to select from zero actions."""


class UnknownActionError(LookupError):
    """A value update targeted an action outside the state's space."""


# ---------------------------------------------------------------------------
# Epsilon schedule and tabular state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonSchedule:
    """Geometric exploration schedule: epsilon_t = epsilon_0 * decay^t."""

    epsilon: float = 1.0
    decay: float = 0.963
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must be in (0, 1)")


def epsilon_step(s: EpsilonSchedule) -> EpsilonSchedule:
    return replace(s, epsilon=s.epsilon * s.decay)


class BanditState:
    """Q-table over a fixed action space with an epsilon schedule.

    ``learning_rate`` None means the sample-average rule 1/count(a).
    """

    def __init__(self, actions, schedule: EpsilonSchedule,
                 learning_rate: float | None = None, q0: float = 0.0):
        self.actions = tuple(actions)
        self.q_values = {a: q0 for a in self.actions}
        self.counts = {a: 0 for a in self.actions}
        self.learning_rate = learning_rate
        self.schedule = schedule
        self.rng = np.random.default_rng(schedule.seed)

    def step_epsilon(self) -> None:
        self.schedule = epsilon_step(self.schedule)


def q_update(state: BanditState, action, reward: float) -> BanditState:
    """Incremental value update toward the observed reward.

    Q(a) += alpha * (reward - Q(a)) on the chosen action only; its count
    is incremented and every other action is untouched.
    """
    if action not in state.q_values:
        raise UnknownActionError(f"action {action!r} not in state")
    state.counts[action] += 1
    alpha = (state.learning_rate if state.learning_rate is not None
             else 1.0 / state.counts[action])
    state.q_values[action] += alpha * (reward - state.q_values[action])
    return state


def select_action(state: BanditState, rng: np.random.Generator | None = None):
    """Epsilon-greedy pick: explore uniformly with probability epsilon,
    otherwise the highest-valued action, ties toward the lowest action id."""
    if not state.actions:
        raise EmptyActionSpaceError("bandit has no actions")
    rng = state.rng if rng is None else rng
    if rng.random() < state.schedule.epsilon:
        return state.actions[int(rng.integers(len(state.actions)))]
    return min(state.actions, key=lambda a: (-state.q_values[a], a))


# ---------------------------------------------------------------------------
# Environment: reconstruction + evaluation behind an action interface
# ---------------------------------------------------------------------------

@dataclass
class StepOutcome:
    reward: float
    schedule: Schedule | None
    report: EvaluationReport | None
    error: str | None = None


DEFAULT_ARM_CAP = 1024


class SchedulingEnv:
    """Spatial-allocation environment over one (AM', PM', profile) scenario.

    Actions assign the free tasks (all tasks, or the pending set of a
    recovery snapshot) to available end systems.  When the full assignment
    space is within ``arm_cap`` the arms enumerate it exhaustively;
    otherwise each arm fixes the highest-priority free task's end system
    and the rest follow greedily by least load.  Unsafe or infeasible
    outcomes earn a finite penalty reward of -10 * deadline.
    """

    def __init__(self, am: AppModel, pm: PlatformModel,
                 profile: EvaluationProfile, *, event_time: int = 0,
                 recovery: RecoverySnapshot | None = None,
                 recovery_delay: int = 0, arm_cap: int = DEFAULT_ARM_CAP):
        self.am = am
        self.pm = pm
        self.profile = profile
        self.event_time = event_time
        self.recovery = recovery
        self.recovery_delay = recovery_delay
        self.arm_cap = arm_cap
        self.available_es = pm.available_es()
        if not self.available_es:
            raise PlatformExhaustedError("no available end system")
        self.temporal = {t: float(v) for t, v in b_level(am).items()}
        if recovery is not None:
            settled = dict(recovery.settled_tasks)
            inflight = {t: e for t, e in recovery.inflight_tasks
                        if pm.end_systems.get(e.es, False)}
            frozen = set(settled) | set(inflight)
            self.free_tasks = sorted(set(am.tasks) - frozen)
        else:
            self.free_tasks = sorted(am.tasks)
        self.penalty = -10.0 * profile.deadline
        n, k = len(self.free_tasks), len(self.available_es)
        self.enumerable = n == 0 or k ** n <= arm_cap
        if self.enumerable:
            self._arms = list(itertools.product(self.available_es, repeat=n))
        else:
            self._arms = None
        self._order = [t for t in priority_order(am, self.temporal)
                       if t in set(self.free_tasks)]

    @property
    def n_actions(self) -> int:
        return len(self._arms) if self.enumerable else len(self.available_es)

    def actions(self) -> range:
        return range(self.n_actions)

    def action_to_assignment(self, action: int) -> dict[int, int]:
        """Materialize an action into a full free-task assignment."""
        if self.enumerable:
            return dict(zip(self.free_tasks, self._arms[action]))
        pinned_es = self.available_es[action]
        loads = {es: 0 for es in self.available_es}
        assignment: dict[int, int] = {}
        for i, tid in enumerate(self._order):
            es = pinned_es if i == 0 else min(
                self.available_es, key=lambda e: (loads[e], e))
            assignment[tid] = es
            loads[es] += effective_wcet(self.am.tasks[tid].wcet,
                                        self.pm.frequency_scale)
        return assignment

    def assignments(self):
        """All enumerable assignments (brute-force oracle support)."""
        if not self.enumerable:
            raise ValueError("assignment space exceeds the arm cap")
        return [dict(zip(self.free_tasks, arm)) for arm in self._arms]

    def step(self, assignment: dict[int, int]) -> StepOutcome:
        priorities = PriorityAssignment(temporal=self.temporal,
                                        spatial=dict(assignment))
        try:
            priorities.validate(self.am, self.pm, tasks=set(self.free_tasks))
            sched = reconstruct(self.am, self.pm, priorities,
                                event_time=self.event_time,
                                recovery=self.recovery,
                                recovery_delay=self.recovery_delay)
            report = evaluate(sched, self.profile, self.am, self.pm)
        except (InvalidInferenceError, InfeasibleScheduleError, NoRouteError,
                UnsafeScheduleError, PlatformExhaustedError) as exc:
            return StepOutcome(reward=self.penalty, schedule=None, report=None,
                               error=f"{type(exc).__name__}: {exc}")
        return StepOutcome(reward=report.reward, schedule=sched, report=report)


# ---------------------------------------------------------------------------
# Best-schedule catalog and per-episode trace
# ---------------------------------------------------------------------------

@dataclass
class TraceRow:
    episode: int
    worker: int
    epsilon: float
    reward: float
    best_reward: float
    decision_ns: int
    schedule: Schedule | None = None  # kept only on locally improving rows


class BestCatalog:
    """Per-episode reward trace with a non-decreasing best-so-far."""

    def __init__(self):
        self.rows: list[TraceRow] = []
        self.best_reward = float("-inf")
        self.best_schedule: Schedule | None = None
        self.last_prediction_error = 0.0

    def record(self, *, epsilon: float, reward: float,
               schedule: Schedule | None, decision_ns: int,
               worker: int = 0) -> bool:
        improved = reward > self.best_reward
        if improved:
            self.best_reward = reward
            if schedule is not None:
                self.best_schedule = schedule
        self.rows.append(TraceRow(
            episode=len(self.rows), worker=worker, epsilon=epsilon,
            reward=reward, best_reward=self.best_reward,
            decision_ns=decision_ns,
            schedule=schedule if improved else None))
        return improved

    @classmethod
    def merge(cls, catalogs) -> "BestCatalog":
        """Serialized commit point: concatenate worker traces in worker
        order and recompute the global best-so-far column."""
        merged = cls()
        for w, cat in enumerate(catalogs):
            for row in cat.rows:
                merged.record(epsilon=row.epsilon, reward=row.reward,
                              schedule=row.schedule,
                              decision_ns=row.decision_ns, worker=w)
        return merged

    def improvements(self):
        """Rows that strictly improved the best-so-far and carry a safe
        schedule, in trace order."""
        out = []
        best = float("-inf")
        for row in self.rows:
            if row.reward > best:
                best = row.reward
                if row.schedule is not None:
                    out.append(row)
        return out


# ---------------------------------------------------------------------------
# Neural reward predictors (contextual and joint-action)
# ---------------------------------------------------------------------------

class RewardPredictor:
    """Per-arm reward estimates for a context, learned online.

    The network maps the feature vector to one estimate per action;
    observed (context, action, reward) triples accumulate in a bounded
    replay window and the network retrains periodically with full-batch
    descent over the window.  Rewards are normalized by ``scale`` so
    mean-squared-error training is well conditioned; prediction errors are
    reported on that scale.
    """

    def __init__(self, n_features: int, n_actions: int, *, hidden=(10, 10),
                 seed: int | None = None, learning_rate: float = 0.001,
                 iterations: int = 100, train_every: int = 20,
                 scale: float = 1.0, buffer_cap: int = 256):
        self.n_features = n_features
        self.n_actions = n_actions
        self.net = Mlp.initialize((n_features, *hidden, n_actions), seed)
        self.cfg = TrainConfig(learning_rate=learning_rate,
                               iterations=iterations)
        self.train_every = train_every
        self.scale = scale if scale else 1.0
        self.buffer: deque[tuple[np.ndarray, int, float]] = deque(
            maxlen=buffer_cap)
        self._since_train = 0

    def estimates(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.shape != (self.n_features,):
            raise FeatureDimensionError(
                f"features of shape {features.shape}, expected ({self.n_features},)")
        return forward(self.net, features)

    def record(self, features, action: int, reward: float) -> float:
        """Store a sample; returns the absolute prediction error (normalized
        scale) the network made on it before seeing it."""
        target = reward / self.scale
        err = abs(float(self.estimates(features)[action]) - target)
        self.buffer.append((np.asarray(features, dtype=float), action, target))
        self._since_train += 1
        return err

    def maybe_train(self) -> bool:
        if self._since_train < self.train_every or not self.buffer:
            return False
        self._since_train = 0
        rows = list(self.buffer)
        X = np.stack([feats for feats, _, _ in rows])
        targets, _ = _forward_batch(self.net, X)
        targets = targets.copy()
        for i, (_, action, target) in enumerate(rows):
            targets[i, action] = target  # gradient through the taken arm only
        samples = [(x, t) for x, t in zip(X, targets)]
        try:
            self.net = train(self.net, samples, self.cfg).net
        except NonFiniteLossError:
            return False  # keep the last finite parameters; monitor only
        return True


class JointRewardPredictor:
    """Scalar reward estimate for (context, joint assignment) pairs."""

    def __init__(self, n_features: int, free_tasks, es_ids, *, hidden=(16, 16),
                 seed: int | None = None, learning_rate: float = 0.1,
                 iterations: int = 100, train_every: int = 20,
                 scale: float = 1.0, buffer_cap: int = 256):
        self.n_features = n_features
        self.free_tasks = tuple(free_tasks)
        self.es_ids = tuple(es_ids)
        self.input_size = n_features + len(self.free_tasks)
        self.net = Mlp.initialize((self.input_size, *hidden, 1), seed)
        self.cfg = TrainConfig(learning_rate=learning_rate,
                               iterations=iterations)
        self.train_every = train_every
        self.scale = scale if scale else 1.0
        self.buffer: deque[tuple[np.ndarray, float]] = deque(maxlen=buffer_cap)
        self._since_train = 0

    def _encode(self, features, assignment: dict[int, int]) -> np.ndarray:
        denom = max(1, len(self.es_ids) - 1)
        act = [self.es_ids.index(assignment[t]) / denom for t in self.free_tasks]
        return np.concatenate([np.asarray(features, dtype=float), act])

    def predict(self, features, assignment) -> float:
        return float(forward(self.net, self._encode(features, assignment))[0])

    def record(self, features, assignment, reward: float) -> float:
        target = reward / self.scale
        err = abs(self.predict(features, assignment) - target)
        self.buffer.append((self._encode(features, assignment), target))
        self._since_train += 1
        return err

    def maybe_train(self) -> bool:
        if self._since_train < self.train_every or not self.buffer:
            return False
        self._since_train = 0
        samples = [(x, np.array([t])) for x, t in self.buffer]
        try:
            self.net = train(self.net, samples, self.cfg).net
        except NonFiniteLossError:
            return False
        return True


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------

def mab_episode(env: SchedulingEnv, state: BanditState,
                catalog: BestCatalog) -> tuple[BanditState, BestCatalog]:
    """One multi-armed-bandit episode: pick an arm, reconstruct, evaluate,
    update the value table, decay epsilon, update the catalog."""
    eps = state.schedule.epsilon
    t0 = time.perf_counter_ns()
    action = select_action(state)
    assignment = env.action_to_assignment(action)
    decision_ns = time.perf_counter_ns() - t0
    outcome = env.step(assignment)
    q_update(state, action, outcome.reward)
    state.step_epsilon()
    catalog.record(epsilon=eps, reward=outcome.reward,
                   schedule=outcome.schedule, decision_ns=decision_ns)
    return state, catalog


@dataclass
class CbSample:
    features: np.ndarray
    action: int
    reward: float
    prediction_error: float
    decision_ns: int
    outcome: StepOutcome


def cb_episode(env: SchedulingEnv, state: BanditState, context_features,
               predictor: RewardPredictor) -> tuple[BanditState, CbSample]:
    """One contextual-bandit episode: epsilon-greedy over the predictor's
    per-arm estimates for this context, observe the true reward through
    reconstruction, append the (context, action, reward) training sample."""
    features = np.asarray(context_features, dtype=float)
    if features.shape != (predictor.n_features,):
        raise FeatureDimensionError(
            f"features of shape {features.shape}, expected "
            f"({predictor.n_features},)")
    eps = state.schedule.epsilon
    t0 = time.perf_counter_ns()
    if state.rng.random() < eps:
        action = int(state.rng.integers(env.n_actions))
    else:
        action = int(np.argmax(predictor.estimates(features)))
    assignment = env.action_to_assignment(action)
    decision_ns = time.perf_counter_ns() - t0
    outcome = env.step(assignment)
    err = predictor.record(features, action, outcome.reward)
    state.counts[action] = state.counts.get(action, 0) + 1
    state.step_epsilon()
    return state, CbSample(features=features, action=action,
                           reward=outcome.reward, prediction_error=err,
                           decision_ns=decision_ns, outcome=outcome)


class AgentEnsemble:
    """One bandit per task over the available end systems, plus the shared
    epsilon schedule and exploration stream the coordinator drives."""

    def __init__(self, free_tasks, es_ids, schedule: EpsilonSchedule,
                 learning_rate: float | None = None):
        self.es_ids = tuple(es_ids)
        if not self.es_ids:
            raise EmptyActionSpaceError("no available end system for agents")
        self.agents = {t: BanditState(self.es_ids, schedule, learning_rate)
                       for t in free_tasks}
        self.schedule = schedule
        self.rng = np.random.default_rng(schedule.seed)

    def step_epsilon(self) -> None:
        self.schedule = epsilon_step(self.schedule)
        for agent in self.agents.values():
            agent.schedule = self.schedule


def marl_episode(ensemble: AgentEnsemble, env: SchedulingEnv,
                 catalog: BestCatalog,
                 predictor: JointRewardPredictor | None = None,
                 context_features=None) -> tuple[AgentEnsemble, BestCatalog]:
    """One multi-agent episode: each agent picks an end system for its
    task, the coordinator merges the picks into one joint assignment, a
    single reconstruction yields a shared global reward broadcast to every
    agent, and the shared epsilon steps once."""
    eps = ensemble.schedule.epsilon
    t0 = time.perf_counter_ns()
    joint = {t: select_action(ensemble.agents[t], rng=ensemble.rng)
             for t in sorted(ensemble.agents)}
    decision_ns = time.perf_counter_ns() - t0
    outcome = env.step(joint)
    for t, es in joint.items():
        q_update(ensemble.agents[t], es, outcome.reward)
    ensemble.step_epsilon()
    if predictor is not None and context_features is not None:
        catalog.last_prediction_error = predictor.record(
            context_features, joint, outcome.reward)
    catalog.record(epsilon=eps, reward=outcome.reward,
                   schedule=outcome.schedule, decision_ns=decision_ns)
    return ensemble, catalog


# ---------------------------------------------------------------------------
# Trigger
# ---------------------------------------------------------------------------

class TriggerMode(str, Enum):
    ON_MISS = "on_miss"
    CONTINUOUS = "continuous"


def check_trigger(report: EvaluationReport, mode: TriggerMode) -> bool:
    """Should the online learning unit run?  On-miss mode fires when the
    deadline was missed; continuous mode always fires."""
    if TriggerMode(mode) is TriggerMode.CONTINUOUS:
        return True
    return not report.deadline_met


# ---------------------------------------------------------------------------
# Full online-learning runs
# ---------------------------------------------------------------------------

MODEL_KINDS = ("mab", "cb", "marl")
DEFAULT_DECAYS = {"mab": 0.963, "cb": 0.96, "marl": 0.99}
DEFAULT_BUDGETS = {"mab": 1000, "cb": 1000, "marl": 2000}


@dataclass
class OnlineScenario:
    """Everything one learning run needs about its situation."""

    am: AppModel
    pm: PlatformModel
    event: ContextEvent | None = None
    event_time: int = 0
    recovery: RecoverySnapshot | None = None
    features: np.ndarray | None = None
    feature_spec: FeatureSpec = field(default_factory=FeatureSpec)

    def context_features(self) -> np.ndarray:
        if self.features is not None:
            return self.features
        return build_context_features(self.am, self.pm, self.event,
                                      spec=self.feature_spec)


@dataclass
class PredictionErrorRow:
    episode: int
    worker: int
    abs_error: float


@dataclass
class OnlineLearningResult:
    model_kind: str
    catalog: BestCatalog
    dataset: list[tuple[np.ndarray, dict[int, int]]]
    insertions: list[int]
    prediction_errors: list[PredictionErrorRow]
    feasible_found: bool
    free_tasks: list[int]


def _worker_run(scenario: OnlineScenario, model_kind: str, episodes: int,
                profile: EvaluationProfile, seed_seq: np.random.SeedSequence,
                decay: float, learning_rate: float | None,
                arm_cap: int, recovery_delay: int,
                predictor_train_every: int) -> tuple[BestCatalog, list[float]]:
    env = SchedulingEnv(scenario.am, scenario.pm, profile,
                        event_time=scenario.event_time,
                        recovery=scenario.recovery,
                        recovery_delay=recovery_delay, arm_cap=arm_cap)
    rng_seed, net_seed = seed_seq.spawn(2)
    eps = EpsilonSchedule(1.0, decay, seed=int(rng_seed.generate_state(1)[0]))
    catalog = BestCatalog()
    errors: list[float] = []
    features = scenario.context_features()
    scale = float(profile.deadline) or 1.0

    if model_kind == "mab":
        state = BanditState(tuple(env.actions()), eps, learning_rate)
        for _ in range(episodes):
            mab_episode(env, state, catalog)
    elif model_kind == "cb":
        state = BanditState(tuple(env.actions()), eps, learning_rate)
        predictor = RewardPredictor(
            len(features), env.n_actions, hidden=(10, 10),
            seed=int(net_seed.generate_state(1)[0]), learning_rate=0.001,
            iterations=100, train_every=predictor_train_every, scale=scale)
        for _ in range(episodes):
            eps_now = state.schedule.epsilon
            state, sample = cb_episode(env, state, features, predictor)
            errors.append(sample.prediction_error)
            catalog.record(epsilon=eps_now, reward=sample.reward,
                           schedule=sample.outcome.schedule,
                           decision_ns=sample.decision_ns)
            predictor.maybe_train()
    elif model_kind == "marl":
        ensemble = AgentEnsemble(env.free_tasks, env.available_es, eps,
                                 learning_rate)
        predictor = JointRewardPredictor(
            len(features), env.free_tasks, env.available_es, hidden=(16, 16),
            seed=int(net_seed.generate_state(1)[0]), learning_rate=0.1,
            iterations=100, train_every=predictor_train_every, scale=scale)
        for _ in range(episodes):
            marl_episode(ensemble, env, catalog, predictor, features)
            errors.append(catalog.last_prediction_error)
            predictor.maybe_train()
    else:
        raise ValueError(f"unknown model kind {model_kind!r}")
    return catalog, errors


def run_online_learning(
    scenario: OnlineScenario,
    model_kind: str,
    episode_budget: int,
    profile: EvaluationProfile,
    *,
    seed: int = 0,
    workers: int = 1,
    parallel: bool = False,
    decay: float | None = None,
    learning_rate: float | None = None,
    arm_cap: int = DEFAULT_ARM_CAP,
    recovery_delay: int = 0,
    predictor_train_every: int = 20,
    msg=None,
    from_node: int | None = None,
) -> OnlineLearningResult:
    """Run one model's episode loop for the budget and collect the results.

    The budget splits over ``workers`` independent streams whose RNGs are
    spawned deterministically from the master seed; running them serially
    or in a thread pool yields identical traces, catalogs and insertions
    because all merging happens at a single deterministic commit point.
    The final catalog best, when safe and strictly improving, is inserted
    into the multi-schedule graph; enhancement-training samples pair the
    scenario features with the best discovered assignment.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    decay = DEFAULT_DECAYS[model_kind] if decay is None else decay
    seqs = np.random.SeedSequence(seed).spawn(workers)
    shares = [episode_budget // workers + (1 if w < episode_budget % workers else 0)
              for w in range(workers)]

    def job(w: int) -> tuple[BestCatalog, list[float]]:
        return _worker_run(scenario, model_kind, shares[w], profile, seqs[w],
                           decay, learning_rate, arm_cap, recovery_delay,
                           predictor_train_every)

    if parallel and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(workers)))
    else:
        results = [job(w) for w in range(workers)]

    catalog = BestCatalog.merge([cat for cat, _ in results])
    errors: list[PredictionErrorRow] = []
    idx = 0
    for w, (_, errs) in enumerate(results):
        for e in errs:
            errors.append(PredictionErrorRow(episode=idx, worker=w, abs_error=e))
            idx += 1

    env_probe = SchedulingEnv(scenario.am, scenario.pm, profile,
                              event_time=scenario.event_time,
                              recovery=scenario.recovery,
                              recovery_delay=recovery_delay, arm_cap=arm_cap)
    free_tasks = env_probe.free_tasks
    feasible = catalog.best_schedule is not None
    dataset: list[tuple[np.ndarray, dict[int, int]]] = []
    if feasible:
        best_assignment = {t: catalog.best_schedule.task_entries[t].es
                           for t in free_tasks}
        dataset.append((scenario.context_features(), best_assignment))

    insertions: list[int] = []
    if (msg is not None and from_node is not None and scenario.event is not None
            and feasible):
        # improvements within one run share the (node, event) edge key, so
        # the commit inserts only the final, best one
        nid = msg.insert_discovered(from_node, scenario.event,
                                    catalog.best_schedule,
                                    am=scenario.am, pm=scenario.pm)
        insertions.append(nid)

    return OnlineLearningResult(
        model_kind=model_kind, catalog=catalog, dataset=dataset,
        insertions=insertions, prediction_errors=errors,
        feasible_found=feasible, free_tasks=free_tasks)
