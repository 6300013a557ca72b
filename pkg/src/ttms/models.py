"""Domain models for time-triggered metascheduling.

Three models drive everything downstream: the application model (tasks,
precedence, worst-case execution times, messages), the platform model
(end systems, routers, links with availability flags) and the context
model (a time-ordered stream of failure / slack / mode-change events).
Context events travel on the wire as a packed 32-bit word; the transforms
at the bottom of this module turn an event into updated application and
platform models without mutating the originals.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from enum import IntEnum
from graphlib import CycleError, TopologicalSorter


class FieldOverflowError(ValueError):
    """A context-event field does not fit its allotted bit width."""


class UnknownTaskError(LookupError):
    """An event references a task id absent from the application model."""


class UnknownHardwareError(LookupError):
    """An event references a hardware id absent from the platform model."""


class PlatformExhaustedError(RuntimeError):
    """No available end system remains to run tasks on."""


class CycleDetectedError(ValueError):
    """The task precedence relation is not a DAG."""


# ---------------------------------------------------------------------------
# Context events and the 32-bit wire word
# ---------------------------------------------------------------------------

class EventKind(IntEnum):
    FAILURE = 0
    SLACK = 1
    MODE_CHANGE = 2


# Wire layout of the 32-bit context word, most significant field first:
# bits 29-31 event kind, bits 26-28 level value, bits 16-25 affected task,
# bits 6-15 timestamp, bits 0-5 hardware id.
_KIND_SHIFT = 29
_VALUE_SHIFT = 26
_TASK_SHIFT = 16
_TIME_SHIFT = 6
_FIELD_WIDTHS = (
    ("kind", 3),
    ("value", 3),
    ("affected_task", 10),
    ("timestamp", 10),
    ("hw_id", 6),
)


@dataclass(frozen=True)
class ContextEvent:
    """A single failure, slack or mode-change event.

    ``value`` is a 3-bit level quantizing the slack / power-reduction
    percentage in steps of 12.5%; ``affected_task`` and ``timestamp`` are
    10-bit, ``hw_id`` 6-bit (see :func:`encode_context_word`).
    """

    kind: int
    value: int = 0
    affected_task: int = 0
    timestamp: int = 0
    hw_id: int = 0

    def fields(self) -> tuple[int, int, int, int, int]:
        return (int(self.kind), self.value, self.affected_task,
                self.timestamp, self.hw_id)


def _check_widths(event: ContextEvent) -> None:
    for (name, width), val in zip(_FIELD_WIDTHS, event.fields()):
        if not 0 <= val < (1 << width):
            raise FieldOverflowError(
                f"field {name}={val} exceeds its {width}-bit width")


def encode_context_word(event: ContextEvent) -> int:
    """Pack an event into its 32-bit wire word.

    Raises :class:`FieldOverflowError` naming the offending field when a
    field exceeds its width.
    """
    _check_widths(event)
    kind, value, task, ts, hw = event.fields()
    return ((kind << _KIND_SHIFT) | (value << _VALUE_SHIFT)
            | (task << _TASK_SHIFT) | (ts << _TIME_SHIFT) | hw)


def decode_context_word(word: int) -> ContextEvent:
    """Unpack a 32-bit word; exact inverse of :func:`encode_context_word`."""
    if not 0 <= word < (1 << 32):
        raise FieldOverflowError(f"word {word} is not a 32-bit value")
    return ContextEvent(
        kind=(word >> _KIND_SHIFT) & 0x7,
        value=(word >> _VALUE_SHIFT) & 0x7,
        affected_task=(word >> _TASK_SHIFT) & 0x3FF,
        timestamp=(word >> _TIME_SHIFT) & 0x3FF,
        hw_id=word & 0x3F,
    )


def context_word_to_bytes(word: int) -> bytes:
    """File form of a context word: 4 bytes, big-endian."""
    return struct.pack(">I", word)


def context_word_from_bytes(data: bytes) -> int:
    return struct.unpack(">I", data)[0]


def slack_fraction(value: int) -> float:
    """Map a 3-bit level to the slack fraction: level k -> 12.5% * k."""
    if not 0 <= value < 8:
        raise FieldOverflowError(f"value {value} exceeds its 3-bit width")
    return value * 0.125


def frequency_scale(value: int) -> float:
    """Map a 3-bit mode level to a platform frequency factor.

    Level 0 keeps full speed (1.0); each level drops the factor by 0.125
    down to 0.125 at level 7, mirroring the slack quantization.
    """
    if not 0 <= value < 8:
        raise FieldOverflowError(f"value {value} exceeds its 3-bit width")
    return 1.0 - value * 0.125


def effective_wcet(wcet: int, scale: float) -> int:
    """Execution time under a frequency factor: ceil(wcet / scale)."""
    return math.ceil(wcet / scale)


# ---------------------------------------------------------------------------
# Application model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Task:
    task_id: int
    wcet: int
    predecessors: frozenset[int] = frozenset()
    temporal_priority: float | None = None
    assigned_es: int | None = None
    start_time: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "predecessors", frozenset(self.predecessors))


@dataclass(frozen=True)
class Message:
    msg_id: int
    tx_task: int
    rx_task: int
    msg_size: int
    inj_time: int | None = None
    route: tuple[int, ...] = ()
    tx_es: int | None = None
    rx_es: int | None = None
    start_time: int | None = None
    end_time: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        if self.tx_task == self.rx_task:
            raise ValueError(f"message {self.msg_id} loops on task {self.tx_task}")


@dataclass
class AppModel:
    """Tasks plus inter-task messages plus the schedule deadline."""

    tasks: dict[int, Task]
    messages: dict[int, Message]
    deadline: int

    def effective_predecessors(self, task_id: int) -> set[int]:
        """Declared predecessors plus senders of inbound messages."""
        preds = set(self.tasks[task_id].predecessors)
        for m in self.messages.values():
            if m.rx_task == task_id:
                preds.add(m.tx_task)
        return preds

    def successor_map(self) -> dict[int, set[int]]:
        succ: dict[int, set[int]] = {tid: set() for tid in self.tasks}
        for tid in self.tasks:
            for p in self.effective_predecessors(tid):
                succ[p].add(tid)
        return succ

    def topological_order(self) -> list[int]:
        """Task ids in dependency order; raises CycleDetectedError."""
        ts = TopologicalSorter(
            {tid: self.effective_predecessors(tid) for tid in self.tasks})
        try:
            return list(ts.static_order())
        except CycleError as exc:
            raise CycleDetectedError(str(exc)) from exc

    def validate(self) -> None:
        for m in self.messages.values():
            if m.tx_task not in self.tasks or m.rx_task not in self.tasks:
                raise UnknownTaskError(
                    f"message {m.msg_id} references unknown task")
        for tid, t in self.tasks.items():
            if t.wcet < 1:
                raise ValueError(f"task {tid} has wcet {t.wcet} < 1")
            for p in t.predecessors:
                if p not in self.tasks:
                    raise UnknownTaskError(f"task {tid} lists unknown predecessor {p}")
            if t.start_time is not None and t.assigned_es is None:
                raise ValueError(f"task {tid} has a start time but no end system")
        if self.deadline < 1:
            raise ValueError(f"deadline {self.deadline} < 1")
        self.topological_order()


# ---------------------------------------------------------------------------
# Platform model
# ---------------------------------------------------------------------------

LinkKey = tuple[int, int]


def link_key(a: int, b: int) -> LinkKey:
    """Canonical undirected-edge key."""
    return (a, b) if a <= b else (b, a)


@dataclass
class PlatformModel:
    """End systems, routers and undirected links, each with an availability flag.

    End systems and routers share one integer node-id namespace so links can
    reference either.  The 6-bit hardware id used by the consistency protocol
    indexes the deterministic ordering end systems < routers < links, each
    group sorted by id.
    """

    end_systems: dict[int, bool]
    routers: dict[int, bool]
    links: dict[LinkKey, bool]
    frequency_scale: float = 1.0

    def __post_init__(self):
        self.links = {link_key(*k): v for k, v in self.links.items()}

    # -- hardware-id namespace ------------------------------------------------

    def hardware_index(self) -> list[tuple[str, int | LinkKey]]:
        idx: list[tuple[str, int | LinkKey]] = []
        idx += [("es", e) for e in sorted(self.end_systems)]
        idx += [("router", r) for r in sorted(self.routers)]
        idx += [("link", l) for l in sorted(self.links)]
        return idx

    def hw_id_of(self, kind: str, key: int | LinkKey) -> int:
        if kind == "link":
            key = link_key(*key)  # type: ignore[misc]
        try:
            return self.hardware_index().index((kind, key))
        except ValueError:
            raise UnknownHardwareError(f"no {kind} {key} on this platform") from None

    def resolve_hw(self, hw_id: int) -> tuple[str, int | LinkKey]:
        idx = self.hardware_index()
        if not 0 <= hw_id < len(idx):
            raise UnknownHardwareError(f"hardware id {hw_id} out of range")
        return idx[hw_id]

    # -- availability ----------------------------------------------------------

    def available_es(self) -> list[int]:
        return sorted(e for e, ok in self.end_systems.items() if ok)

    def node_available(self, node: int) -> bool:
        if node in self.end_systems:
            return self.end_systems[node]
        if node in self.routers:
            return self.routers[node]
        return False

    def link_available(self, key: LinkKey) -> bool:
        """A link is usable only when the link and both endpoints are up."""
        key = link_key(*key)
        return (self.links.get(key, False)
                and self.node_available(key[0])
                and self.node_available(key[1]))

    def adjacency(self) -> dict[int, list[int]]:
        """Neighbour lists of the availability-filtered graph, sorted."""
        adj: dict[int, list[int]] = {}
        for (a, b), _ in self.links.items():
            if self.link_available((a, b)):
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        return {n: sorted(ns) for n, ns in adj.items()}

    def validate(self) -> None:
        for (a, b) in self.links:
            if not ((a in self.end_systems or a in self.routers)
                    and (b in self.end_systems or b in self.routers)):
                raise UnknownHardwareError(f"link ({a},{b}) references unknown node")
        if set(self.end_systems) & set(self.routers):
            raise ValueError("end systems and routers must use distinct node ids")
        if not self.available_es():
            raise PlatformExhaustedError("no available end system")


# ---------------------------------------------------------------------------
# Context model
# ---------------------------------------------------------------------------

@dataclass
class ContextModel:
    """Time-ordered stream of context events."""

    events: list[ContextEvent] = field(default_factory=list)

    def validate(self) -> None:
        times = [e.timestamp for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("event timestamps must be non-decreasing")
        for e in self.events:
            _check_widths(e)


# ---------------------------------------------------------------------------
# Context-driven model transforms
# ---------------------------------------------------------------------------

def apply_slack(am: AppModel, event: ContextEvent) -> AppModel:
    """Updated application model after a slack event.

    The affected task's wcet drops by the event's slack fraction (rounded
    up to keep it conservative) and is floored at one tick so the task
    stays observable.  The input model is not mutated.
    """
    if event.kind != EventKind.SLACK:
        raise ValueError(f"expected a slack event, got kind {event.kind}")
    tid = event.affected_task
    if tid not in am.tasks:
        raise UnknownTaskError(f"slack event targets unknown task {tid}")
    frac = slack_fraction(event.value)
    old = am.tasks[tid]
    new_wcet = max(1, math.ceil(old.wcet * (1.0 - frac)))
    tasks = dict(am.tasks)
    tasks[tid] = replace(old, wcet=new_wcet)
    return AppModel(tasks=tasks, messages=dict(am.messages), deadline=am.deadline)


def apply_failure(pm: PlatformModel, event: ContextEvent) -> PlatformModel:
    """Updated platform model after a hardware failure.

    Clears the availability flag of the end system, router or link the
    event's hardware id resolves to.  Idempotent; the input is not mutated.
    Raises :class:`PlatformExhaustedError` when the failure would leave no
    available end system.
    """
    if event.kind != EventKind.FAILURE:
        raise ValueError(f"expected a failure event, got kind {event.kind}")
    kind, key = pm.resolve_hw(event.hw_id)
    new = PlatformModel(
        end_systems=dict(pm.end_systems),
        routers=dict(pm.routers),
        links=dict(pm.links),
        frequency_scale=pm.frequency_scale,
    )
    if kind == "es":
        if pm.end_systems[key] and len(pm.available_es()) == 1:
            raise PlatformExhaustedError(
                f"failing end system {key} would leave no available end system")
        new.end_systems[key] = False  # type: ignore[index]
    elif kind == "router":
        new.routers[key] = False  # type: ignore[index]
    else:
        new.links[key] = False  # type: ignore[index]
    return new


def apply_mode_change(am: AppModel, pm: PlatformModel,
                      event: ContextEvent) -> tuple[AppModel, PlatformModel]:
    """Updated models after a platform-wide mode change.

    The event's level sets an absolute frequency factor recorded on the
    platform model; task execution times are scaled lazily through
    :func:`effective_wcet` so repeated mode changes do not compound.
    """
    if event.kind != EventKind.MODE_CHANGE:
        raise ValueError(f"expected a mode-change event, got kind {event.kind}")
    scale = frequency_scale(event.value)
    new_pm = PlatformModel(
        end_systems=dict(pm.end_systems),
        routers=dict(pm.routers),
        links=dict(pm.links),
        frequency_scale=scale,
    )
    new_am = AppModel(tasks=dict(am.tasks), messages=dict(am.messages),
                      deadline=am.deadline)
    return new_am, new_pm


def apply_event(am: AppModel, pm: PlatformModel,
                event: ContextEvent) -> tuple[AppModel, PlatformModel]:
    """Dispatch a context event to the matching transform."""
    if event.kind == EventKind.SLACK:
        return apply_slack(am, event), pm
    if event.kind == EventKind.FAILURE:
        return am, apply_failure(pm, event)
    if event.kind == EventKind.MODE_CHANGE:
        return apply_mode_change(am, pm, event)
    raise ValueError(f"unknown event kind {event.kind}")
