"""Schedule reconstruction.

Turns priorities plus (possibly event-transformed) application and platform
models into a complete schedule: list scheduling of tasks onto their target
end systems, collision-free message timetabling over shortest routes,
freezing of already-executed work when recovering from a context event,
safety checking and profile-based evaluation.

Time is integer ticks; a task entry occupies [start, end) on its end
system, a message occupies one link per hop for msg_size ticks each,
store-and-forward.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .models import AppModel, PlatformModel, effective_wcet, link_key
from .priorities import PriorityAssignment


class InfeasibleScheduleError(RuntimeError):
    """No valid placement exists for some pending task."""


class NoRouteError(RuntimeError):
    """A message's receiver end system is unreachable over available links."""


class UnsafeScheduleError(RuntimeError):
    """A schedule with safety violations was passed where a valid one is required."""


class OutOfRangeTickError(IndexError):
    """A recovery-log lookup outside the logged tick range."""


class TaskEntry(NamedTuple):
    es: int
    start: int
    end: int


class MessageEntry(NamedTuple):
    tx_es: int
    rx_es: int
    route: tuple[int, ...]  # node path tx_es..rx_es inclusive; empty if co-located
    start: int
    end: int


@dataclass
class Schedule:
    """Task placements and the message timetable.

    ``valid_from`` records the tick the schedule was (re)constructed from;
    entries starting earlier are inherited history and may reference
    hardware that has since failed.  Equality compares task and message
    entries only.
    """

    task_entries: dict[int, TaskEntry]
    message_entries: dict[int, MessageEntry]
    makespan: int
    valid_from: int = 0

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (self.task_entries == other.task_entries
                and self.message_entries == other.message_entries)

    def signature(self) -> tuple:
        """Hashable canonical form used for graph deduplication."""
        return (tuple(sorted(self.task_entries.items())),
                tuple(sorted(self.message_entries.items())))

    def busy_times(self, es_ids) -> dict[int, int]:
        busy = {es: 0 for es in es_ids}
        for e in self.task_entries.values():
            if e.es in busy:
                busy[e.es] += e.end - e.start
        return busy


def route_hops(route: tuple[int, ...]) -> list[tuple[int, int]]:
    """Link keys traversed by a node path."""
    return [link_key(a, b) for a, b in zip(route, route[1:])]


def shortest_route(pm: PlatformModel, src: int, dst: int) -> tuple[int, ...]:
    """Deterministic minimum-hop node path over the available platform graph.

    Breadth-first search expanding neighbours in ascending node-id order,
    so ties resolve toward lower node ids.  Raises NoRouteError when dst
    is unreachable.
    """
    if src == dst:
        return ()
    adj = pm.adjacency()
    parent: dict[int, int] = {src: src}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        for nb in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = node
                if nb == dst:
                    path = [dst]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    return tuple(reversed(path))
                queue.append(nb)
    raise NoRouteError(f"no available route from node {src} to node {dst}")


class LinkTimetable:
    """Per-link occupancy intervals with first-fit slot search."""

    def __init__(self):
        self._busy: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def reserve(self, hops, start: int, per_hop: int) -> None:
        for i, hop in enumerate(hops):
            s = start + i * per_hop
            self._busy.setdefault(hop, []).append((s, s + per_hop))

    def earliest_injection(self, hops, per_hop: int, not_before: int) -> int:
        """First tick >= not_before whose per-hop slots clear every link."""
        t = not_before
        while True:
            conflict = None
            for i, hop in enumerate(hops):
                s = t + i * per_hop
                e = s + per_hop
                for (bs, be) in self._busy.get(hop, ()):
                    if s < be and bs < e:
                        # shift so this hop starts right at the blocker's end
                        cand = be - i * per_hop
                        conflict = max(conflict or 0, cand)
            if conflict is None:
                return t
            t = conflict

    def occupancy(self) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
        return {k: tuple(sorted(v)) for k, v in self._busy.items()}

    @classmethod
    def from_occupancy(cls, occ) -> "LinkTimetable":
        tt = cls()
        for k, slots in occ.items():
            tt._busy[link_key(*k)] = [tuple(s) for s in slots]
        return tt


# ---------------------------------------------------------------------------
# Fixing the past / recovery snapshots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoverySnapshot:
    """Reconstructor-internal variables at one tick.

    Holds exactly the task/message entries ended by the tick plus the
    in-flight ones spanning it, the per-end-system load fronts, the link
    occupancy and the completed-task set.
    """

    tick: int
    settled_tasks: tuple[tuple[int, TaskEntry], ...]
    inflight_tasks: tuple[tuple[int, TaskEntry], ...]
    settled_messages: tuple[tuple[int, MessageEntry], ...]
    inflight_messages: tuple[tuple[int, MessageEntry], ...]
    es_fronts: tuple[tuple[int, int], ...]
    link_busy: tuple[tuple[tuple[int, int], tuple[tuple[int, int], ...]], ...]
    completed: frozenset[int]


def make_snapshot(schedule: Schedule, tick: int) -> RecoverySnapshot:
    """Recompute the internal variables a run of the reconstructor would
    have logged at ``tick`` of ``schedule``."""
    settled_t = {t: e for t, e in schedule.task_entries.items() if e.end <= tick}
    inflight_t = {t: e for t, e in schedule.task_entries.items()
                  if e.start < tick < e.end}
    settled_m = {m: e for m, e in schedule.message_entries.items() if e.end <= tick}
    inflight_m = {m: e for m, e in schedule.message_entries.items()
                  if e.start < tick < e.end}
    fronts: dict[int, int] = {}
    for e in list(settled_t.values()) + list(inflight_t.values()):
        fronts[e.es] = max(fronts.get(e.es, 0), e.end)
    tt = LinkTimetable()
    for e in list(settled_m.values()) + list(inflight_m.values()):
        tt.reserve(route_hops(e.route), e.start,
                   (e.end - e.start) // max(1, len(route_hops(e.route))))
    return RecoverySnapshot(
        tick=tick,
        settled_tasks=tuple(sorted(settled_t.items())),
        inflight_tasks=tuple(sorted(inflight_t.items())),
        settled_messages=tuple(sorted(settled_m.items())),
        inflight_messages=tuple(sorted(inflight_m.items())),
        es_fronts=tuple(sorted(fronts.items())),
        link_busy=tuple(sorted(tt.occupancy().items())),
        completed=frozenset(settled_t),
    )


class RecoveryLog:
    """Per-tick log of reconstructor internals over a schedule's lifetime.

    Restoring from the log at a failure tick skips recomputing the frozen
    state from the full previous schedule.
    """

    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self._by_tick = {t: make_snapshot(schedule, t)
                         for t in range(schedule.makespan + 1)}

    @property
    def ticks(self) -> range:
        return range(self.schedule.makespan + 1)

    def at(self, tick: int) -> RecoverySnapshot:
        if tick not in self._by_tick:
            raise OutOfRangeTickError(
                f"tick {tick} outside logged range 0..{self.schedule.makespan}")
        return self._by_tick[tick]


def snapshot(log: RecoveryLog, tick: int) -> RecoverySnapshot:
    return log.at(tick)


def restore(log: RecoveryLog, tick: int) -> RecoverySnapshot:
    """Load the variables recorded at ``tick``; identical to what
    :func:`make_snapshot` recomputes from the schedule."""
    return log.at(tick)


@dataclass(frozen=True)
class FixedPast:
    """Split of a previous schedule at an event tick."""

    frozen_tasks: dict[int, TaskEntry]
    pending: frozenset[int]
    reusable_messages: dict[int, MessageEntry]


def fix_past(previous: Schedule, event_time: int,
             pm: PlatformModel | None = None) -> FixedPast:
    """Freeze work already executed when the event hit.

    Entries ended by ``event_time`` are frozen; tasks spanning it stay
    frozen only when their hardware is still available under ``pm`` (no
    platform given means nothing is affected).  Every other task is
    pending.  Messages delivered or still in flight on healthy links are
    kept as candidates for verbatim reuse during reconstruction.
    """
    frozen: dict[int, TaskEntry] = {}
    pending: set[int] = set()
    for tid, e in previous.task_entries.items():
        if e.end <= event_time:
            frozen[tid] = e
        elif e.start < event_time < e.end and (
                pm is None or pm.end_systems.get(e.es, False)):
            frozen[tid] = e
        else:
            pending.add(tid)
    reusable: dict[int, MessageEntry] = {}
    for mid, e in previous.message_entries.items():
        if e.end <= event_time:
            reusable[mid] = e
        elif e.start < event_time < e.end:
            hops = route_hops(e.route)
            if pm is None or all(pm.link_available(h) for h in hops):
                reusable[mid] = e
    return FixedPast(frozen_tasks=frozen, pending=frozenset(pending),
                     reusable_messages=reusable)


def _fixed_past_from_snapshot(snap: RecoverySnapshot,
                              pm: PlatformModel) -> FixedPast:
    frozen = dict(snap.settled_tasks)
    pending: set[int] = set()
    for tid, e in snap.inflight_tasks:
        if pm.end_systems.get(e.es, False):
            frozen[tid] = e
        else:
            pending.add(tid)
    reusable = dict(snap.settled_messages)
    for mid, e in snap.inflight_messages:
        if all(pm.link_available(h) for h in route_hops(e.route)):
            reusable[mid] = e
    return FixedPast(frozen_tasks=frozen, pending=frozenset(pending),
                     reusable_messages=reusable)


# ---------------------------------------------------------------------------
# Message allocation
# ---------------------------------------------------------------------------

def _allocate_one_message(pm, timetable, msg, tx_es, rx_es, tx_end,
                          not_before) -> MessageEntry:
    if tx_es == rx_es:
        return MessageEntry(tx_es, rx_es, (), tx_end, tx_end)
    route = shortest_route(pm, tx_es, rx_es)
    hops = route_hops(route)
    per_hop = msg.msg_size
    inj = timetable.earliest_injection(hops, per_hop, max(tx_end, not_before))
    timetable.reserve(hops, inj, per_hop)
    return MessageEntry(tx_es, rx_es, route, inj, inj + per_hop * len(hops))


def allocate_messages(schedule: Schedule, am: AppModel, pm: PlatformModel,
                      not_before: int = 0) -> dict[int, MessageEntry]:
    """Timetable every message whose sender and receiver are placed.

    Routes take the deterministic shortest available path; transmission
    costs msg_size ticks per link hop, store-and-forward; injection is the
    first tick at or after the sender's end time whose per-hop slots are
    collision-free on every link.  Co-located pairs get a zero-duration
    delivery at the sender's end time.  Messages are processed in
    ascending message id.
    """
    timetable = LinkTimetable()
    for e in schedule.message_entries.values():
        hops = route_hops(e.route)
        if hops:
            timetable.reserve(hops, e.start, (e.end - e.start) // len(hops))
    out: dict[int, MessageEntry] = dict(schedule.message_entries)
    for mid in sorted(am.messages):
        if mid in out:
            continue
        m = am.messages[mid]
        if m.tx_task not in schedule.task_entries:
            continue
        if m.rx_task not in schedule.task_entries:
            continue
        tx = schedule.task_entries[m.tx_task]
        rx = schedule.task_entries[m.rx_task]
        out[mid] = _allocate_one_message(pm, timetable, m, tx.es, rx.es,
                                         tx.end, not_before)
    return out


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

def reconstruct(
    am: AppModel,
    pm: PlatformModel,
    priorities: PriorityAssignment,
    event_time: int = 0,
    recovery: RecoverySnapshot | None = None,
    recovery_delay: int = 0,
) -> Schedule:
    """Build a complete valid schedule.

    List scheduling: among tasks whose predecessors are all placed, the one
    with the highest temporal priority (ties by lowest id) is placed next,
    on its spatial-priority end system, at the earliest tick at or after
    ``event_time + recovery_delay`` that satisfies predecessor completion,
    inbound-message arrival and end-system non-overlap.  No idle-time
    backfilling.  With a recovery snapshot, the frozen prefix is preserved
    verbatim and only pending work is placed.
    """
    if recovery is not None and recovery.tick != event_time:
        raise OutOfRangeTickError(
            f"recovery snapshot at tick {recovery.tick} != event time {event_time}")
    horizon = event_time + recovery_delay

    if recovery is not None:
        past = _fixed_past_from_snapshot(recovery, pm)
    else:
        past = FixedPast(frozen_tasks={}, pending=frozenset(am.tasks),
                         reusable_messages={})
    task_entries: dict[int, TaskEntry] = {
        t: e for t, e in past.frozen_tasks.items() if t in am.tasks}
    pending = set(am.tasks) - set(task_entries)

    # a producer stuck on failed hardware cannot ship results to a receiver
    # that still has to run; it re-executes, cascading up the message chain
    changed = True
    while changed:
        changed = False
        for m in am.messages.values():
            if (m.rx_task in pending and m.tx_task in task_entries
                    and not pm.end_systems.get(task_entries[m.tx_task].es, False)):
                pending.add(m.tx_task)
                del task_entries[m.tx_task]
                changed = True
    frozen_ids = set(task_entries)

    message_entries: dict[int, MessageEntry] = {}
    timetable = LinkTimetable()
    fronts: dict[int, int] = {es: horizon for es in pm.available_es()}
    for e in task_entries.values():
        if e.es in fronts:
            fronts[e.es] = max(fronts[e.es], e.end)
    # inherited traffic holds its wire slots whether or not it is reused;
    # deliveries to frozen receivers stay in the timetable verbatim
    for mid, e in past.reusable_messages.items():
        if mid not in am.messages:
            continue
        hops = route_hops(e.route)
        if hops:
            timetable.reserve(hops, e.start, (e.end - e.start) // len(hops))
        if am.messages[mid].rx_task in frozen_ids:
            message_entries[mid] = e

    avail = set(pm.available_es())
    inbound: dict[int, list[int]] = {t: [] for t in am.tasks}
    for mid, m in am.messages.items():
        inbound[m.rx_task].append(mid)

    done = set(task_entries)
    remaining = set(pending)
    preds = {t: am.effective_predecessors(t) for t in am.tasks}
    while remaining:
        ready = [t for t in remaining if preds[t] <= done]
        if not ready:
            raise InfeasibleScheduleError(
                f"tasks {sorted(remaining)} blocked by unplaced predecessors")
        tid = min(ready, key=lambda t: (-priorities.temporal[t], t))
        es = priorities.spatial.get(tid)
        if es not in avail:
            raise InfeasibleScheduleError(
                f"task {tid} targets unavailable end system {es}")
        earliest = fronts[es]
        for p in preds[tid]:
            earliest = max(earliest, task_entries[p].end)
        for mid in sorted(inbound[tid]):
            m = am.messages[mid]
            if m.tx_task not in task_entries:
                continue
            tx = task_entries[m.tx_task]
            reuse = past.reusable_messages.get(mid)
            if (reuse is not None and m.tx_task in frozen_ids
                    and reuse.rx_es == es and reuse.tx_es == tx.es):
                entry = reuse  # wire slots already held above
            else:
                entry = _allocate_one_message(pm, timetable, m, tx.es, es,
                                              tx.end, horizon)
            message_entries[mid] = entry
            earliest = max(earliest, entry.end)
        wcet = effective_wcet(am.tasks[tid].wcet, pm.frequency_scale)
        task_entries[tid] = TaskEntry(es, earliest, earliest + wcet)
        fronts[es] = earliest + wcet
        done.add(tid)
        remaining.discard(tid)

    makespan = max((e.end for e in task_entries.values()), default=0)
    return Schedule(task_entries=task_entries, message_entries=message_entries,
                    makespan=makespan, valid_from=event_time)


# ---------------------------------------------------------------------------
# Safety checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    subject: tuple
    detail: str


def safety_check(s: Schedule, am: AppModel, pm: PlatformModel) -> list[Violation]:
    """List every constraint violation in a schedule.

    Covers precedence (task and message arrival), end-system overlap, link
    collisions, placement of post-event entries on unavailable hardware,
    duration and makespan consistency, and coverage of every application
    task and message.  An empty report means all schedule invariants hold.
    Violations are data, not errors.

    Entries that predate ``valid_from`` are inherited history: they are
    held to overlap and collision rules but not to availability or
    duration, and their constraints against a producer re-executed after
    the event (recovery of results stranded on failed hardware) are
    considered satisfied by the producer's original run.
    """
    out: list[Violation] = []
    entries = s.task_entries
    since = s.valid_from

    for tid in am.tasks:
        if tid not in entries:
            out.append(Violation("missing-task", (tid,), "task has no entry"))
    for mid, m in am.messages.items():
        if (m.tx_task in entries and m.rx_task in entries
                and mid not in s.message_entries):
            out.append(Violation("missing-message", (mid,), "message has no entry"))

    for tid, e in entries.items():
        if tid not in am.tasks:
            out.append(Violation("unknown-task", (tid,), "entry for unknown task"))
            continue
        if e.start >= since:
            expected = effective_wcet(am.tasks[tid].wcet, pm.frequency_scale)
            if e.end - e.start != expected:
                out.append(Violation(
                    "duration", (tid,),
                    f"entry spans {e.end - e.start} ticks, expected {expected}"))
            if not pm.end_systems.get(e.es, False):
                out.append(Violation(
                    "unavailable-hardware", (tid,),
                    f"task on unavailable end system {e.es}"))
        for p in am.effective_predecessors(tid):
            if p in entries and entries[p].end > e.start:
                if e.start < since <= entries[p].start:
                    continue  # consumer is history; producer re-executed
                out.append(Violation(
                    "precedence", (p, tid),
                    f"predecessor {p} ends at {entries[p].end} after start {e.start}"))

    by_es: dict[int, list[tuple[int, int, int]]] = {}
    for tid, e in entries.items():
        by_es.setdefault(e.es, []).append((e.start, e.end, tid))
    for es, ivs in by_es.items():
        ivs.sort()
        for (s1, e1, t1), (s2, e2, t2) in zip(ivs, ivs[1:]):
            if s2 < e1:
                out.append(Violation(
                    "es-overlap", (t1, t2),
                    f"tasks {t1} and {t2} overlap on end system {es}"))

    for mid, me in s.message_entries.items():
        m = am.messages.get(mid)
        if m is None:
            out.append(Violation("unknown-message", (mid,), "entry for unknown message"))
            continue
        tx = entries.get(m.tx_task)
        rx = entries.get(m.rx_task)
        tx_rerun = tx is not None and me.start < since <= tx.start
        if tx is not None and me.start < tx.end and not tx_rerun:
            out.append(Violation(
                "message-before-sender", (mid,),
                f"message starts {me.start} before sender ends {tx.end}"))
        if rx is not None and me.end > rx.start:
            out.append(Violation(
                "message-after-receiver", (mid, m.rx_task),
                f"message ends {me.end} after receiver starts {rx.start}"))
        if tx is not None and me.tx_es != tx.es and not tx_rerun:
            out.append(Violation("message-endpoint", (mid,),
                                 "sender end system mismatch"))
        if rx is not None and me.rx_es != rx.es:
            out.append(Violation("message-endpoint", (mid,),
                                 "receiver end system mismatch"))
        if me.tx_es != me.rx_es:
            if not me.route or me.route[0] != me.tx_es or me.route[-1] != me.rx_es:
                out.append(Violation("route", (mid,),
                                     "route does not join the endpoints"))
            elif me.start >= since:
                for hop in route_hops(me.route):
                    if not pm.link_available(hop):
                        out.append(Violation(
                            "unavailable-hardware", (mid, hop),
                            f"message routed over unavailable link {hop}"))
        elif me.route:
            out.append(Violation("route", (mid,), "co-located message has a route"))

    slot_map: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for mid, me in s.message_entries.items():
        hops = route_hops(me.route)
        if not hops:
            continue
        per_hop = (me.end - me.start) // len(hops)
        for i, hop in enumerate(hops):
            st = me.start + i * per_hop
            slot_map.setdefault(hop, []).append((st, st + per_hop, mid))
    for hop, ivs in slot_map.items():
        ivs.sort()
        for (s1, e1, m1), (s2, e2, m2) in zip(ivs, ivs[1:]):
            if s2 < e1 and m1 != m2:
                out.append(Violation(
                    "link-collision", (m1, m2),
                    f"messages {m1} and {m2} collide on link {hop}"))

    true_makespan = max((e.end for e in entries.values()), default=0)
    if s.makespan != true_makespan:
        out.append(Violation("makespan", (), f"recorded {s.makespan}, "
                                             f"actual {true_makespan}"))
    return out


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

class ProfileKind(str, Enum):
    MAKESPAN = "makespan"
    WORKLOAD = "workload"
    ENERGY = "energy"


@dataclass(frozen=True)
class EvaluationProfile:
    kind: ProfileKind
    deadline: int


@dataclass(frozen=True)
class EvaluationReport:
    metric: float
    reward: float
    deadline_met: bool
    per_es_busy: dict[int, int]


def evaluate(s: Schedule, profile: EvaluationProfile, am: AppModel,
             pm: PlatformModel) -> EvaluationReport:
    """Score a safe schedule under an evaluation profile.

    makespan: the schedule makespan.  workload: population standard
    deviation of per-end-system busy time over the available end systems.
    energy: total executed ticks weighted by the platform's mode power
    factor.  The reward is the negated metric, so maximizing reward
    minimizes the metric.  Raises UnsafeScheduleError when the schedule
    has safety violations.
    """
    violations = safety_check(s, am, pm)
    if violations:
        raise UnsafeScheduleError(
            f"{len(violations)} safety violations, first: {violations[0]}")
    busy = s.busy_times(pm.available_es())
    if profile.kind == ProfileKind.MAKESPAN:
        metric = float(s.makespan)
    elif profile.kind == ProfileKind.WORKLOAD:
        metric = statistics.pstdev(busy.values()) if busy else 0.0
    elif profile.kind == ProfileKind.ENERGY:
        executed = sum(e.end - e.start for e in s.task_entries.values())
        metric = executed * pm.frequency_scale
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown profile kind {profile.kind}")
    return EvaluationReport(
        metric=metric,
        reward=-metric,
        deadline_met=s.makespan <= profile.deadline,
        per_es_busy=busy,
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def schedule_to_dict(s: Schedule) -> dict:
    return {
        "version": 1,
        "valid_from": s.valid_from,
        "makespan": s.makespan,
        "tasks": {str(t): list(e) for t, e in sorted(s.task_entries.items())},
        "messages": {str(m): [e.tx_es, e.rx_es, list(e.route), e.start, e.end]
                     for m, e in sorted(s.message_entries.items())},
    }


def schedule_from_dict(d: dict) -> Schedule:
    tasks = {int(t): TaskEntry(*v) for t, v in d["tasks"].items()}
    msgs = {int(m): MessageEntry(v[0], v[1], tuple(v[2]), v[3], v[4])
            for m, v in d["messages"].items()}
    return Schedule(task_entries=tasks, message_entries=msgs,
                    makespan=d["makespan"], valid_from=d.get("valid_from", 0))


def schedule_to_json(s: Schedule) -> str:
    return json.dumps(schedule_to_dict(s), indent=2, sort_keys=True)


def schedule_from_json(text: str) -> Schedule:
    return schedule_from_dict(json.loads(text))


MESSAGE_CSV_COLUMNS = ("Message ID", "Tx Task", "Rx Task", "Tx End System",
                       "Rx End System", "Start Time", "End Time")


def messages_to_csv(s: Schedule, am: AppModel) -> str:
    """Message timetable in the standard seven-column layout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MESSAGE_CSV_COLUMNS)
    for mid in sorted(s.message_entries):
        e = s.message_entries[mid]
        m = am.messages[mid]
        w.writerow([mid, m.tx_task, m.rx_task, f"ES{e.tx_es}", f"ES{e.rx_es}",
                    e.start, e.end])
    return buf.getvalue()
