"""Scenario generation, fault injection and experiment orchestration.

Everything here is seeded and deterministic: the same master seed yields
byte-identical scenario documents and (timing columns aside) byte-identical
experiment CSVs, whether cells run serially or in parallel workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bandits import (
    DEFAULT_BUDGETS,
    MODEL_KINDS,
    OnlineScenario,
    TriggerMode,
    check_trigger,
    run_online_learning,
)
from .models import (
    AppModel,
    ContextEvent,
    ContextModel,
    EventKind,
    Message,
    PlatformModel,
    Task,
    apply_event,
    apply_slack,
    encode_context_word,
    link_key,
)
from .msgraph import MultiScheduleGraph, ORIGIN_OFFLINE
from .neural import (
    FeatureSpec,
    Mlp,
    NeuralSpatialAdapter,
    TrainConfig,
    build_context_features,
    commit_if_improved,
    train,
)
from .priorities import BottomLevelAdapter, infer_priorities
from .reconstruction import (
    EvaluationProfile,
    ProfileKind,
    Schedule,
    evaluate,
    make_snapshot,
    messages_to_csv,
    reconstruct,
)


class InfeasibleConfigError(ValueError):
    """A scenario or experiment configuration cannot be realized."""


class HorizonTooShortError(ValueError):
    """More events requested than distinct ticks in the schedule horizon."""


def _seed_for(*parts) -> int:
    return int(np.random.SeedSequence(tuple(int(p) for p in parts))
               .generate_state(1)[0])


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    n_tasks: int = 10
    n_end_systems: int = 3
    n_routers: int = 3
    edge_density: float = 0.3
    wcet_range: tuple[int, int] = (1, 20)
    message_density: float = 0.5
    msg_size_range: tuple[int, int] = (1, 5)
    deadline_factor: float = 1.2
    master_seed: int = 0

    def validate(self) -> None:
        if self.n_tasks < 1 or self.n_end_systems < 1 or self.n_routers < 0:
            raise InfeasibleConfigError("counts must be positive")
        for d in (self.edge_density, self.message_density):
            if not 0.0 <= d <= 1.0:
                raise InfeasibleConfigError(f"density {d} outside [0, 1]")
        lo, hi = self.wcet_range
        if not 1 <= lo <= hi:
            raise InfeasibleConfigError(f"bad wcet range {self.wcet_range}")
        lo, hi = self.msg_size_range
        if not 1 <= lo <= hi:
            raise InfeasibleConfigError(f"bad msg size range {self.msg_size_range}")
        if self.deadline_factor <= 0:
            raise InfeasibleConfigError("deadline factor must be > 0")


def _build_platform(cfg: ScenarioConfig) -> PlatformModel:
    n_es, n_r = cfg.n_end_systems, cfg.n_routers
    end_systems = {i: True for i in range(n_es)}
    routers = {n_es + i: True for i in range(n_r)}
    links: dict[tuple[int, int], bool] = {}
    if n_r == 0:
        for a in range(n_es):
            for b in range(a + 1, n_es):
                links[link_key(a, b)] = True
    else:
        rids = sorted(routers)
        if len(rids) == 2:
            links[link_key(rids[0], rids[1])] = True
        elif len(rids) > 2:
            for i, r in enumerate(rids):
                links[link_key(r, rids[(i + 1) % len(rids)])] = True
        for i in range(n_es):
            links[link_key(i, rids[i % n_r])] = True
    total_hw = n_es + n_r + len(links)
    if total_hw > 64:
        raise InfeasibleConfigError(
            f"{total_hw} hardware units exceed the 6-bit id space")
    return PlatformModel(end_systems=end_systems, routers=routers, links=links)


def generate_scenario(cfg: ScenarioConfig) -> tuple[AppModel, PlatformModel]:
    """Seeded random application and platform models.

    Tasks form a layered DAG with the requested edge density, wcets are
    uniform over the configured range, a density-sampled subset of the
    precedence edges carries messages, and the platform is a connected
    graph of end systems attached to a router ring.  The deadline is the
    built-in heuristic's makespan scaled by the deadline factor.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.master_seed)
    n = cfg.n_tasks
    n_layers = max(1, int(round(math.sqrt(n))))
    layers = np.sort(rng.integers(0, n_layers, size=n))
    wcets = rng.integers(cfg.wcet_range[0], cfg.wcet_range[1] + 1, size=n)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if layers[u] < layers[v] and rng.random() < cfg.edge_density:
                edges.append((u, v))
    preds: dict[int, set[int]] = {i: set() for i in range(n)}
    for u, v in edges:
        preds[v].add(u)
    messages: dict[int, Message] = {}
    for u, v in edges:
        if rng.random() < cfg.message_density:
            mid = len(messages)
            size = int(rng.integers(cfg.msg_size_range[0],
                                    cfg.msg_size_range[1] + 1))
            messages[mid] = Message(msg_id=mid, tx_task=u, rx_task=v,
                                    msg_size=size)
    tasks = {i: Task(task_id=i, wcet=int(wcets[i]),
                     predecessors=frozenset(preds[i])) for i in range(n)}
    pm = _build_platform(cfg)
    am = AppModel(tasks=tasks, messages=messages, deadline=1)
    pri = infer_priorities(BottomLevelAdapter(), am, pm)
    baseline = reconstruct(am, pm, pri)
    deadline = max(1, int(round(cfg.deadline_factor * baseline.makespan)))
    am = AppModel(tasks=tasks, messages=messages, deadline=deadline)
    am.validate()
    pm.validate()
    return am, pm


# ---------------------------------------------------------------------------
# Event injection
# ---------------------------------------------------------------------------

def _es_mutually_reachable(pm: PlatformModel) -> bool:
    avail = pm.available_es()
    if len(avail) <= 1:
        return True
    adj = pm.adjacency()
    seen = {avail[0]}
    stack = [avail[0]]
    while stack:
        node = stack.pop()
        for nb in adj.get(node, ()):
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return all(e in seen for e in avail)


def _safe_failure_ids(pm: PlatformModel) -> list[int]:
    """Hardware ids whose single failure keeps at least one end system and
    keeps the surviving end systems mutually reachable."""
    out = []
    for hw_id, (kind, key) in enumerate(pm.hardware_index()):
        trial = PlatformModel(end_systems=dict(pm.end_systems),
                              routers=dict(pm.routers),
                              links=dict(pm.links),
                              frequency_scale=pm.frequency_scale)
        if kind == "es":
            if len(pm.available_es()) <= 1:
                continue
            trial.end_systems[key] = False  # type: ignore[index]
        elif kind == "router":
            trial.routers[key] = False  # type: ignore[index]
        else:
            trial.links[key] = False  # type: ignore[index]
        if trial.available_es() and _es_mutually_reachable(trial):
            out.append(hw_id)
    return out


def inject_events(am: AppModel, pm: PlatformModel, n_events: int,
                  seed: int) -> ContextModel:
    """Seeded stream of encodable events with strictly increasing timestamps.

    Timestamps fall inside the built-in schedule's horizon (capped to the
    10-bit timestamp range); failures only target hardware whose loss
    leaves the available end systems non-empty and mutually reachable,
    falling back to a slack event when no such target exists.
    """
    if n_events < 0:
        raise ValueError("n_events must be >= 0")
    cm = ContextModel()
    if n_events == 0:
        return cm
    rng = np.random.default_rng(seed)
    pri = infer_priorities(BottomLevelAdapter(), am, pm)
    baseline = reconstruct(am, pm, pri)
    horizon = min(baseline.makespan, 1023)
    if horizon < n_events:
        raise HorizonTooShortError(
            f"{n_events} events do not fit a horizon of {horizon} ticks")
    times = np.sort(rng.choice(np.arange(1, horizon + 1), size=n_events,
                               replace=False))
    task_ids = sorted(am.tasks)
    safe_hw = _safe_failure_ids(pm)
    for ts in times:
        kind = int(rng.integers(0, 3))
        if kind == int(EventKind.FAILURE) and safe_hw:
            hw = int(safe_hw[int(rng.integers(len(safe_hw)))])
            ev = ContextEvent(kind=EventKind.FAILURE, value=0, affected_task=0,
                              timestamp=int(ts), hw_id=hw)
        elif kind == int(EventKind.MODE_CHANGE):
            ev = ContextEvent(kind=EventKind.MODE_CHANGE,
                              value=int(rng.integers(1, 8)), affected_task=0,
                              timestamp=int(ts), hw_id=0)
        else:
            ev = ContextEvent(kind=EventKind.SLACK,
                              value=int(rng.integers(1, 8)),
                              affected_task=int(task_ids[int(rng.integers(len(task_ids)))]),
                              timestamp=int(ts), hw_id=0)
        encode_context_word(ev)  # encodable by construction
        cm.events.append(ev)
    cm.validate()
    return cm


# ---------------------------------------------------------------------------
# Scenario and context-model documents
# ---------------------------------------------------------------------------

def scenario_to_dict(am: AppModel, pm: PlatformModel) -> dict:
    return {
        "version": 1,
        "app": {
            "deadline": am.deadline,
            "tasks": [
                {"task_id": t.task_id, "wcet": t.wcet,
                 "predecessors": sorted(t.predecessors)}
                for _, t in sorted(am.tasks.items())
            ],
            "messages": [
                {"msg_id": m.msg_id, "tx_task": m.tx_task, "rx_task": m.rx_task,
                 "msg_size": m.msg_size}
                for _, m in sorted(am.messages.items())
            ],
        },
        "platform": {
            "end_systems": {str(k): v for k, v in sorted(pm.end_systems.items())},
            "routers": {str(k): v for k, v in sorted(pm.routers.items())},
            "links": [[a, b, v] for (a, b), v in sorted(pm.links.items())],
            "frequency_scale": pm.frequency_scale,
        },
    }


def scenario_from_dict(d: dict) -> tuple[AppModel, PlatformModel]:
    app = d["app"]
    tasks = {t["task_id"]: Task(task_id=t["task_id"], wcet=t["wcet"],
                                predecessors=frozenset(t["predecessors"]))
             for t in app["tasks"]}
    messages = {m["msg_id"]: Message(msg_id=m["msg_id"], tx_task=m["tx_task"],
                                     rx_task=m["rx_task"], msg_size=m["msg_size"])
                for m in app["messages"]}
    am = AppModel(tasks=tasks, messages=messages, deadline=app["deadline"])
    plat = d["platform"]
    pm = PlatformModel(
        end_systems={int(k): v for k, v in plat["end_systems"].items()},
        routers={int(k): v for k, v in plat["routers"].items()},
        links={link_key(a, b): v for a, b, v in plat["links"]},
        frequency_scale=plat.get("frequency_scale", 1.0),
    )
    am.validate()
    pm.validate()
    return am, pm


def context_model_to_dict(cm: ContextModel) -> dict:
    return {
        "version": 1,
        "events": [
            {"word": f"{encode_context_word(e):#010x}", "kind": int(e.kind),
             "value": e.value, "affected_task": e.affected_task,
             "timestamp": e.timestamp, "hw_id": e.hw_id}
            for e in cm.events
        ],
    }


def context_model_from_dict(d: dict) -> ContextModel:
    from .models import decode_context_word

    cm = ContextModel()
    for ed in d["events"]:
        ev = decode_context_word(int(ed["word"], 16))
        cm.events.append(ev)
    cm.validate()
    return cm


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Desk-scale experiment grid.

    ``mab_arm_cap`` defaults to 0 so every task count uses the same capped
    action scheme (one arm per end system, greedy completion); decision
    times then compare like with like across task counts.
    """

    task_counts: tuple[int, ...] = (5, 10, 15, 20, 25)
    scenarios_per_count: int = 4
    events_per_scenario: int = 10
    models: tuple[str, ...] = ("mab", "cb", "marl")
    budgets: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_BUDGETS))
    profile: str = "makespan"
    decays: dict[str, float] = field(default_factory=dict)
    n_end_systems: int = 3
    n_routers: int = 3
    edge_density: float = 0.3
    message_density: float = 0.4
    wcet_range: tuple[int, int] = (1, 20)
    msg_size_range: tuple[int, int] = (1, 5)
    deadline_factor: float = 1.2
    trigger_mode: str = "continuous"
    master_seed: int = 0
    workers: int = 1
    parallel: bool = False
    mab_arm_cap: int = 0
    epsilon_sweep: tuple[float, ...] = (0.9, 0.963, 0.99)
    sweep_budget: int = 300
    predictor_train_every: int = 20
    timing_budget: int = 300
    retrain: dict | None = field(default_factory=lambda: {
        "n_base": 10, "variations": 5, "marl_budget": 200,
        "train_iterations": 2000})

    def validate(self) -> None:
        if not self.task_counts or self.scenarios_per_count < 1:
            raise InfeasibleConfigError("need at least one scenario")
        if self.events_per_scenario < 1:
            raise InfeasibleConfigError("need at least one event")
        for m in self.models:
            if m not in MODEL_KINDS:
                raise InfeasibleConfigError(f"unknown model {m!r}")
        ProfileKind(self.profile)
        TriggerMode(self.trigger_mode)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for key in ("task_counts", "models", "epsilon_sweep", "wcet_range",
                    "msg_size_range"):
            if key in d:
                d[key] = tuple(d[key])
        if d.get("retrain"):
            d["retrain"] = dict(d["retrain"])
        return cls(**d)


def _csv_path(out_dir: Path, name: str) -> Path:
    path = out_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


TRACE_COLUMNS = ("episode", "epsilon", "reward", "best_reward", "decision_ns")
RETRAIN_COLUMNS = ("base", "variation", "split", "deadline", "pre_makespan",
                   "marl_makespan", "post_makespan", "event_word")


def _retrain_rows(report: "RetrainReport") -> list[list]:
    return [[r.base, r.variation, r.split, r.deadline, r.pre_makespan,
             "" if r.marl_makespan is None else r.marl_makespan,
             r.post_makespan, f"{r.event_word:#010x}"]
            for r in report.instances]


def _retrain_summary(report: "RetrainReport") -> dict:
    return {
        "committed": report.committed,
        "candidate_metric": report.candidate_metric,
        "incumbent_metric": report.incumbent_metric,
        "no_feasible": report.no_feasible,
        "training_samples": report.training_samples,
        "heldout_pre_mean": report.heldout_pre_mean,
        "heldout_post_mean": report.heldout_post_mean,
        "heldout_pre_met_rate": report.heldout_pre_met_rate,
        "heldout_post_met_rate": report.heldout_post_met_rate,
    }


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the full grid and write the artifact directory.

    Per (scenario, event, model) cell: transform the models, reconstruct
    from the baseline's recovery snapshot, check the trigger, run online
    learning and log its trace.  Emits per-cell reward traces, the epsilon
    sweep, reward and decision-time summaries, prediction-error traces,
    per-scenario event tables and baseline message timetables, plus a
    manifest describing every file.  Cell failures are recorded in the
    manifest and the run continues.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile_kind = ProfileKind(cfg.profile)
    trigger_mode = TriggerMode(cfg.trigger_mode)
    files: list[dict] = []
    cells: list[dict] = []
    summary_rows: list[list] = []
    sweep_rows: list[list] = []
    event_rows: list[list] = []
    pred_rows: list[list] = []
    decision_samples: dict[tuple[str, int], list[int]] = {}
    timing_scenarios: dict[int, tuple] = {}
    msg_node_counts: dict[str, int] = {}

    def add_file(path: Path, schema: str, deterministic: bool = True,
                 strip_columns: tuple[str, ...] = ()) -> None:
        files.append({"path": str(path.relative_to(out)), "schema": schema,
                      "deterministic": deterministic,
                      "strip_columns": list(strip_columns)})

    for tc in cfg.task_counts:
        for s in range(cfg.scenarios_per_count):
            scen_seed = _seed_for(cfg.master_seed, tc, s, 0)
            scen_cfg = ScenarioConfig(
                n_tasks=tc, n_end_systems=cfg.n_end_systems,
                n_routers=cfg.n_routers, edge_density=cfg.edge_density,
                wcet_range=cfg.wcet_range,
                message_density=cfg.message_density,
                msg_size_range=cfg.msg_size_range,
                deadline_factor=cfg.deadline_factor, master_seed=scen_seed)
            am, pm = generate_scenario(scen_cfg)
            profile = EvaluationProfile(profile_kind, am.deadline)
            pri = infer_priorities(BottomLevelAdapter(), am, pm)
            baseline = reconstruct(am, pm, pri)

            scen_path = _csv_path(out, f"scenarios/scenario_t{tc}_s{s}.json")
            scen_path.write_text(json.dumps(scenario_to_dict(am, pm),
                                            indent=2, sort_keys=True))
            add_file(scen_path, "scenario-v1")
            msg_path = _csv_path(out, f"messages/baseline_t{tc}_s{s}.csv")
            msg_path.write_text(messages_to_csv(baseline, am))
            add_file(msg_path, "message-table-v1")

            cm = inject_events(am, pm, cfg.events_per_scenario,
                               _seed_for(cfg.master_seed, tc, s, 1))
            for ei, ev in enumerate(cm.events):
                event_rows.append([tc, s, ei, f"{encode_context_word(ev):#010x}",
                                   int(ev.kind), ev.value, ev.affected_task,
                                   ev.timestamp, ev.hw_id])

            msg_graph = MultiScheduleGraph()
            msg_graph.add_node(baseline, ORIGIN_OFFLINE, am, pm)

            for ei, ev in enumerate(cm.events):
                for model in cfg.models:
                    cell_id = {"task_count": tc, "scenario": s, "event": ei,
                               "model": model}
                    try:
                        am2, pm2 = apply_event(am, pm, ev)
                        snap = make_snapshot(baseline, ev.timestamp)
                        pri2 = infer_priorities(BottomLevelAdapter(), am2, pm2)
                        rebuilt = reconstruct(am2, pm2, pri2,
                                              event_time=ev.timestamp,
                                              recovery=snap)
                        report = evaluate(rebuilt, profile, am2, pm2)
                        if not check_trigger(report, trigger_mode):
                            cells.append({**cell_id, "status": "not-triggered"})
                            continue
                        scenario = OnlineScenario(
                            am=am2, pm=pm2, event=ev,
                            event_time=ev.timestamp, recovery=snap)
                        can_insert = msg_graph.transition(0, ev) is None
                        result = run_online_learning(
                            scenario, model, cfg.budgets[model], profile,
                            seed=_seed_for(cfg.master_seed, tc, s, ei,
                                           MODEL_KINDS.index(model)),
                            workers=cfg.workers, parallel=cfg.parallel,
                            decay=cfg.decays.get(model),
                            arm_cap=cfg.mab_arm_cap,
                            predictor_train_every=cfg.predictor_train_every,
                            msg=msg_graph if can_insert else None,
                            from_node=0 if can_insert else None)
                    except Exception as exc:
                        cells.append({**cell_id, "status": "failed",
                                      "error": f"{type(exc).__name__}: {exc}"})
                        continue
                    trace_path = _csv_path(
                        out, f"traces/{model}_t{tc}_s{s}_e{ei}.csv")
                    _write_csv(trace_path, TRACE_COLUMNS,
                               [[r.episode, r.epsilon, r.reward, r.best_reward,
                                 r.decision_ns] for r in result.catalog.rows])
                    add_file(trace_path, "trace-v1",
                             strip_columns=("decision_ns",))
                    for pr in result.prediction_errors:
                        pred_rows.append([model, tc, s, ei, pr.episode,
                                          pr.abs_error])
                    summary_rows.append([
                        model, tc, s, ei, result.catalog.best_reward,
                        int(result.feasible_found),
                        int(report.deadline_met),
                        int(result.catalog.best_schedule is not None
                            and result.catalog.best_schedule.makespan
                            <= profile.deadline)])
                    cells.append({**cell_id, "status": "ok",
                                  "best_reward": result.catalog.best_reward,
                                  "insertions": len(result.insertions)})
            msg_node_counts[f"t{tc}_s{s}"] = len(msg_graph)

            if s == 0:
                timing_scenarios[tc] = (am, pm, profile)

            # epsilon sweep on the first event of the first scenario per count
            if s == 0 and cm.events:
                ev = cm.events[0]
                am2, pm2 = apply_event(am, pm, ev)
                snap = make_snapshot(baseline, ev.timestamp)
                scenario = OnlineScenario(am=am2, pm=pm2, event=ev,
                                          event_time=ev.timestamp,
                                          recovery=snap)
                for decay in cfg.epsilon_sweep:
                    res = run_online_learning(
                        scenario, "mab", cfg.sweep_budget, profile,
                        seed=_seed_for(cfg.master_seed, tc, 999,
                                       int(decay * 1000)),
                        decay=decay, arm_cap=cfg.mab_arm_cap)
                    best_ep = next((r.episode for r in res.catalog.rows
                                    if r.best_reward == res.catalog.best_reward),
                                   -1)
                    sweep_rows.append([decay, tc, res.catalog.best_reward,
                                       best_ep])

    # decision-time probes run on full-size problems (recovery cells shrink
    # the free task set, saying nothing about scaling with task count) and
    # in one dedicated phase so every probe sees the same machine state
    for model in cfg.models:
        for tc in cfg.task_counts:
            am, pm, profile = timing_scenarios[tc]
            probe = run_online_learning(
                OnlineScenario(am=am, pm=pm), model, cfg.timing_budget,
                profile,
                seed=_seed_for(cfg.master_seed, tc, 998,
                               MODEL_KINDS.index(model)),
                decay=cfg.decays.get(model), arm_cap=cfg.mab_arm_cap,
                predictor_train_every=cfg.predictor_train_every)
            decision_samples.setdefault((model, tc), []).extend(
                r.decision_ns for r in probe.catalog.rows)

    events_path = _csv_path(out, "events.csv")
    _write_csv(events_path,
               ("task_count", "scenario", "event_index", "word", "kind",
                "value", "affected_task", "timestamp", "hw_id"), event_rows)
    add_file(events_path, "events-v1")

    summary_path = _csv_path(out, "reward_summary.csv")
    _write_csv(summary_path,
               ("model", "task_count", "scenario", "event", "best_reward",
                "feasible", "builtin_deadline_met", "best_deadline_met"),
               summary_rows)
    add_file(summary_path, "reward-summary-v1")

    sweep_path = _csv_path(out, "epsilon_sweep.csv")
    _write_csv(sweep_path, ("decay", "task_count", "best_reward",
                            "episodes_to_best"), sweep_rows)
    add_file(sweep_path, "epsilon-sweep-v1")

    pred_path = _csv_path(out, "prediction_error.csv")
    _write_csv(pred_path, ("model", "task_count", "scenario", "event",
                           "episode", "abs_error"), pred_rows)
    add_file(pred_path, "prediction-error-v1")

    timing_rows = [[model, tc, int(statistics.median(samples)), len(samples)]
                   for (model, tc), samples in sorted(decision_samples.items())]
    timing_path = _csv_path(out, "decision_time.csv")
    _write_csv(timing_path, ("model", "task_count", "median_decision_ns",
                             "samples"), timing_rows)
    add_file(timing_path, "decision-time-v1", deterministic=False)

    retrain_summary = None
    if cfg.retrain:
        rcfg = RetrainConfig.from_dict({
            "n_end_systems": cfg.n_end_systems,
            "n_routers": cfg.n_routers,
            "master_seed": _seed_for(cfg.master_seed, 997),
            **cfg.retrain,
        })
        retrain_report = retraining_pipeline(rcfg)
        retrain_path = _csv_path(out, "retrain_report.csv")
        _write_csv(retrain_path, RETRAIN_COLUMNS, _retrain_rows(retrain_report))
        add_file(retrain_path, "retrain-report-v1")
        retrain_summary = _retrain_summary(retrain_report)

    manifest = {
        "version": 1,
        "kind": "experiment",
        "master_seed": cfg.master_seed,
        "config": cfg.to_dict(),
        "files": files,
        "cells": cells,
        "msg_nodes": msg_node_counts,
        "retrain": retrain_summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True))
    return manifest


def deterministic_fingerprint(out_dir) -> dict[str, str]:
    """Hash of every deterministic artifact body, timing columns stripped.

    Two runs with the same master seed must produce identical fingerprints,
    serial or parallel.
    """
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    hashes: dict[str, str] = {}
    for entry in manifest["files"]:
        if not entry.get("deterministic", True):
            continue
        body = (out / entry["path"]).read_bytes()
        strip = entry.get("strip_columns") or []
        if strip:
            text = body.decode()
            lines = text.splitlines()
            header = lines[0].split(",")
            keep = [i for i, col in enumerate(header) if col not in strip]
            lines = [",".join(line.split(",")[i] for i in keep)
                     for line in lines]
            body = "\n".join(lines).encode()
        hashes[entry["path"]] = hashlib.sha256(body).hexdigest()
    return hashes


# ---------------------------------------------------------------------------
# Retraining pipeline (enhancement training)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RetrainConfig:
    n_base: int = 50
    variations: int = 10
    n_tasks: int = 10
    n_end_systems: int = 3
    n_routers: int = 3
    edge_density: float = 0.35
    message_density: float = 0.3
    wcet_range: tuple[int, int] = (2, 20)
    msg_size_range: tuple[int, int] = (1, 4)
    deadline_factor: float = 1.1
    profile: str = "makespan"
    marl_budget: int = 400
    marl_decay: float = 0.99
    hidden: tuple[int, ...] = (64, 64)
    train_learning_rate: float = 2.0
    train_iterations: int = 12000
    max_tasks: int = 32
    max_es: int = 8
    master_seed: int = 0

    def validate(self) -> None:
        if self.n_base < 1 or self.variations < 1:
            raise InfeasibleConfigError("need at least one base and variation")
        if self.n_tasks > self.max_tasks or self.n_end_systems > self.max_es:
            raise InfeasibleConfigError("scenario exceeds the feature spec")
        ProfileKind(self.profile)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RetrainConfig":
        d = dict(d)
        for key in ("wcet_range", "msg_size_range", "hidden"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class RetrainInstance:
    base: int
    variation: int
    split: str  # "train" or "held-out"
    deadline: int
    pre_makespan: int
    marl_makespan: int | None
    post_makespan: int | None
    event_word: int


@dataclass
class RetrainReport:
    instances: list[RetrainInstance]
    committed: bool
    candidate_metric: float
    incumbent_metric: float
    no_feasible: int
    training_samples: int
    heldout_pre_mean: float
    heldout_post_mean: float
    heldout_pre_met_rate: float
    heldout_post_met_rate: float


def _slack_variations(am: AppModel, rng: np.random.Generator,
                      n: int) -> list[ContextEvent]:
    task_ids = sorted(am.tasks)
    events = []
    for i in range(n):
        events.append(ContextEvent(
            kind=EventKind.SLACK,
            value=int(rng.integers(1, 8)),
            affected_task=int(task_ids[int(rng.integers(len(task_ids)))]),
            timestamp=min(1023, i + 1),
            hw_id=0))
    return events


def _canonical_assignment(raw: dict[int, int], es_ids) -> dict[int, int]:
    """Relabel end systems by first appearance over tasks in id order.

    End systems are interchangeable here, so search results that differ
    only by an end-system permutation map to one canonical training label.
    """
    mapping: dict[int, int] = {}
    out: dict[int, int] = {}
    for t in sorted(raw):
        es = raw[t]
        if es not in mapping:
            mapping[es] = es_ids[len(mapping)]
        out[t] = mapping[es]
    return out


def retraining_pipeline(cfg: RetrainConfig, out_dir=None) -> RetrainReport:
    """Retrain the neural spatial inference on solutions found by the
    multi-agent search, committing the new parameters only when held-out
    quality does not degrade.

    Each base scenario spawns ``variations`` slack variations; per base the
    last variation is held out and never trained on.  Training instances
    whose incumbent-inference schedule misses the deadline are searched
    with the multi-agent model; deadline-meeting discoveries become
    (features -> assignment) training samples.  Instances with no feasible
    discovery are flagged, excluded from training and counted.
    """
    cfg.validate()
    spec = FeatureSpec(max_tasks=cfg.max_tasks, max_es=cfg.max_es,
                       include_levels=True)
    profile_kind = ProfileKind(cfg.profile)
    # uninformed prior inference: uniform scores, every task lands on the
    # lowest-id end system, so deadline misses trigger the pipeline
    incumbent = Mlp.zeros((spec.length, *cfg.hidden, spec.head_size))

    instances: list[dict] = []
    for b in range(cfg.n_base):
        scen_cfg = ScenarioConfig(
            n_tasks=cfg.n_tasks, n_end_systems=cfg.n_end_systems,
            n_routers=cfg.n_routers, edge_density=cfg.edge_density,
            wcet_range=cfg.wcet_range, message_density=cfg.message_density,
            msg_size_range=cfg.msg_size_range,
            deadline_factor=cfg.deadline_factor,
            master_seed=_seed_for(cfg.master_seed, b, 0))
        am, pm = generate_scenario(scen_cfg)
        rng = np.random.default_rng(_seed_for(cfg.master_seed, b, 1))
        for v, ev in enumerate(_slack_variations(am, rng, cfg.variations)):
            am_v = apply_slack(am, ev)
            instances.append({
                "base": b, "variation": v,
                "split": "held-out" if v == cfg.variations - 1 else "train",
                "am": am_v, "pm": pm, "event": ev,
            })

    def makespan_with(net: Mlp, am: AppModel, pm: PlatformModel) -> int:
        adapter = NeuralSpatialAdapter(net, spec)
        pri = adapter.infer(am, pm)
        pri.validate(am, pm)
        return reconstruct(am, pm, pri).makespan

    samples = []
    no_feasible = 0
    rows: list[RetrainInstance] = []
    for idx, inst in enumerate(instances):
        am_v, pm, ev = inst["am"], inst["pm"], inst["event"]
        deadline = am_v.deadline
        pre = makespan_with(incumbent, am_v, pm)
        marl_makespan = None
        if inst["split"] == "train" and pre > deadline:
            profile = EvaluationProfile(profile_kind, deadline)
            scenario = OnlineScenario(am=am_v, pm=pm, event=ev,
                                      feature_spec=spec)
            result = run_online_learning(
                scenario, "marl", cfg.marl_budget, profile,
                seed=_seed_for(cfg.master_seed, inst["base"],
                               inst["variation"], 2),
                decay=cfg.marl_decay)
            best = result.catalog.best_schedule
            if best is not None and best.makespan <= deadline:
                marl_makespan = best.makespan
                # the slack is already folded into the wcets; the deployed
                # inference sees the same event-free encoding
                feats = build_context_features(am_v, pm, None, spec=spec)
                es_ids = sorted(pm.end_systems)
                label = _canonical_assignment(
                    {t: best.task_entries[t].es for t in am_v.tasks}, es_ids)
                target = np.zeros(spec.head_size)
                for row_i, tid in enumerate(sorted(am_v.tasks)):
                    target[row_i * spec.max_es + es_ids.index(label[tid])] = 1.0
                samples.append((feats, target))
            else:
                no_feasible += 1
        rows.append(RetrainInstance(
            base=inst["base"], variation=inst["variation"],
            split=inst["split"], deadline=deadline, pre_makespan=pre,
            marl_makespan=marl_makespan, post_makespan=None,
            event_word=encode_context_word(ev)))

    heldout = [(inst["am"], inst["pm"]) for inst in instances
               if inst["split"] == "held-out"]
    if samples:
        candidate_init = Mlp.initialize(incumbent.layer_sizes,
                                        seed=_seed_for(cfg.master_seed, 11))
        result = train(candidate_init, samples,
                       TrainConfig(learning_rate=cfg.train_learning_rate,
                                   iterations=cfg.train_iterations))
        decision = commit_if_improved(result.net, incumbent, heldout, spec)
    else:
        decision = commit_if_improved(incumbent, incumbent, heldout, spec)
    chosen = decision.chosen

    for row, inst in zip(rows, instances):
        row.post_makespan = makespan_with(chosen, inst["am"], inst["pm"])

    held_rows = [r for r in rows if r.split == "held-out"]
    pre_mean = statistics.fmean(r.pre_makespan for r in held_rows)
    post_mean = statistics.fmean(r.post_makespan for r in held_rows)
    pre_rate = statistics.fmean(
        1.0 if r.pre_makespan <= r.deadline else 0.0 for r in held_rows)
    post_rate = statistics.fmean(
        1.0 if r.post_makespan <= r.deadline else 0.0 for r in held_rows)

    report = RetrainReport(
        instances=rows,
        committed=bool(samples) and decision.committed,
        candidate_metric=decision.candidate_metric,
        incumbent_metric=decision.incumbent_metric,
        no_feasible=no_feasible,
        training_samples=len(samples),
        heldout_pre_mean=pre_mean,
        heldout_post_mean=post_mean,
        heldout_pre_met_rate=pre_rate,
        heldout_post_met_rate=post_rate,
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "retrain_report.csv", RETRAIN_COLUMNS,
                   _retrain_rows(report))
        summary = {
            "version": 1,
            "kind": "retrain",
            "config": cfg.to_dict(),
            **_retrain_summary(report),
            "files": [{"path": "retrain_report.csv",
                       "schema": "retrain-report-v1", "deterministic": True,
                       "strip_columns": []}],
        }
        (out / "manifest.json").write_text(json.dumps(summary, indent=2,
                                                      sort_keys=True))
    return report
