"""Multi-schedule graph: complete schedules as nodes, context events as edges.

The runtime switches schedules by following the edge labelled with the
context event's 32-bit word; a missing edge is the entry point for the
online learning unit, whose discoveries are inserted back into the graph.
Nodes holding equal schedules are merged (exact-match reconvergence), so
no two nodes ever carry the same schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .models import (
    AppModel,
    ContextEvent,
    PlatformModel,
    apply_event,
    decode_context_word,
    encode_context_word,
)
from .priorities import BottomLevelAdapter, infer_priorities
from .reconstruction import (
    Schedule,
    make_snapshot,
    reconstruct,
    safety_check,
    schedule_from_dict,
    schedule_to_dict,
)


class UnknownNodeError(LookupError):
    """A transition or insertion references a node id not in the graph."""


class EdgeKeyConflictError(ValueError):
    """An edge for this (node, event) pair already exists."""


class UnsafeInsertError(ValueError):
    """A discovered schedule with safety violations was offered."""


ORIGIN_OFFLINE = "offline"
ORIGIN_ONLINE = "online-discovered"


@dataclass
class MsgNode:
    node_id: int
    schedule: Schedule
    origin: str
    # models that produced the schedule; kept for expansion and edge replay,
    # not serialized
    am: AppModel | None = None
    pm: PlatformModel | None = None


@dataclass
class PrunedBranch:
    node_id: int
    word: int
    error: str


class MultiScheduleGraph:
    """Insertion-ordered nodes, edges keyed by (source node, context word)."""

    def __init__(self):
        self.nodes: dict[int, MsgNode] = {}
        self.edges: dict[tuple[int, int], int] = {}
        self.root: int = 0
        self.pruned: list[PrunedBranch] = []
        self._by_signature: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def add_node(self, schedule: Schedule, origin: str,
                 am: AppModel | None = None,
                 pm: PlatformModel | None = None) -> int:
        nid = len(self.nodes)
        self.nodes[nid] = MsgNode(nid, schedule, origin, am, pm)
        self._by_signature[schedule.signature()] = nid
        return nid

    def find_equal(self, schedule: Schedule) -> int | None:
        return self._by_signature.get(schedule.signature())

    def transition(self, node: int, event: ContextEvent) -> int | None:
        """Runtime lookup: target node for this event, or None on a miss.

        A miss hands control to the online learning unit.
        """
        if node not in self.nodes:
            raise UnknownNodeError(f"node {node} not in graph")
        return self.edges.get((node, encode_context_word(event)))

    def add_edge(self, src: int, event: ContextEvent, dst: int) -> None:
        key = (src, encode_context_word(event))
        if key in self.edges:
            raise EdgeKeyConflictError(
                f"edge for node {src} / word {key[1]:#010x} already exists")
        if dst not in self.nodes:
            raise UnknownNodeError(f"edge target {dst} not in graph")
        self.edges[key] = dst

    def insert_discovered(self, from_node: int, event: ContextEvent,
                          schedule: Schedule,
                          am: AppModel | None = None,
                          pm: PlatformModel | None = None) -> int:
        """Insert a schedule found online, deduplicating against existing nodes.

        Links ``from_node --event--> node``; when an existing node already
        holds an equal schedule the edge reconverges onto it and the node
        count is unchanged.  The schedule must be safe under the models it
        was built for (checked when they are supplied).
        """
        if from_node not in self.nodes:
            raise UnknownNodeError(f"node {from_node} not in graph")
        key = (from_node, encode_context_word(event))
        if key in self.edges:
            raise EdgeKeyConflictError(
                f"edge for node {from_node} / word {key[1]:#010x} already exists")
        if am is not None and pm is not None:
            violations = safety_check(schedule, am, pm)
            if violations:
                raise UnsafeInsertError(
                    f"{len(violations)} safety violations, first: {violations[0]}")
        existing = self.find_equal(schedule)
        if existing is not None:
            target = existing
        else:
            target = self.add_node(schedule, ORIGIN_ONLINE, am, pm)
        self.edges[key] = target
        return target

    # -- structural checks ----------------------------------------------------

    def validate(self) -> None:
        for (src, _), dst in self.edges.items():
            if src not in self.nodes or dst not in self.nodes:
                raise UnknownNodeError("edge endpoints must exist")
        sigs = [n.schedule.signature() for n in self.nodes.values()]
        if len(sigs) != len(set(sigs)):
            raise ValueError("two nodes hold equal schedules")
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        out: dict[int, set[int]] = {n: set() for n in self.nodes}
        for (src, _), dst in self.edges.items():
            if src != dst:
                out[src].add(dst)
        seen: dict[int, int] = {}  # 1 on stack, 2 done

        def visit(n: int, stack: list[int]) -> None:
            seen[n] = 1
            for m in out[n]:
                if seen.get(m) == 1:
                    raise ValueError(f"transition cycle through nodes {stack + [m]}")
                if m not in seen:
                    visit(m, stack + [m])
            seen[n] = 2

        for n in self.nodes:
            if n not in seen:
                visit(n, [n])

    def reachable_from_root(self) -> set[int]:
        out: dict[int, set[int]] = {n: set() for n in self.nodes}
        for (src, _), dst in self.edges.items():
            out[src].add(dst)
        seen = {self.root}
        frontier = [self.root]
        while frontier:
            n = frontier.pop()
            for m in out.get(n, ()):
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        return seen

    # -- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "root": self.root,
            "nodes": [
                {"id": nid, "origin": n.origin,
                 "schedule": schedule_to_dict(n.schedule)}
                for nid, n in sorted(self.nodes.items())
            ],
            "edges": [
                {"from": src, "event": f"{word:#010x}", "to": dst}
                for (src, word), dst in sorted(self.edges.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MultiScheduleGraph":
        g = cls()
        g.root = d["root"]
        for nd in sorted(d["nodes"], key=lambda x: x["id"]):
            nid = g.add_node(schedule_from_dict(nd["schedule"]), nd["origin"])
            if nid != nd["id"]:
                raise ValueError("node ids must be contiguous from 0")
        for ed in d["edges"]:
            word = int(ed["event"], 16)
            g.edges[(ed["from"], word)] = ed["to"]
        return g

    @classmethod
    def from_json(cls, text: str) -> "MultiScheduleGraph":
        return cls.from_dict(json.loads(text))


def expand_node(g: MultiScheduleGraph, node_id: int, event: ContextEvent,
                origin: str = ORIGIN_OFFLINE) -> int | None:
    """Apply one event to a node: transform models, fix the past of the
    node's schedule at the event timestamp, reconstruct, deduplicate and
    link the edge.  Returns the target node id, or None when the branch
    was pruned by a reconstruction error.
    """
    node = g.nodes[node_id]
    if node.am is None or node.pm is None:
        raise ValueError(f"node {node_id} carries no models to expand from")
    word = encode_context_word(event)
    try:
        am2, pm2 = apply_event(node.am, node.pm, event)
        snap = make_snapshot(node.schedule, event.timestamp)
        pri = infer_priorities(BottomLevelAdapter(), am2, pm2)
        sched = reconstruct(am2, pm2, pri, event_time=event.timestamp,
                            recovery=snap)
    except Exception as exc:  # branch pruned, recorded
        g.pruned.append(PrunedBranch(node_id, word, f"{type(exc).__name__}: {exc}"))
        return None
    existing = g.find_equal(sched)
    target = existing if existing is not None else g.add_node(sched, origin, am2, pm2)
    g.edges[(node_id, word)] = target
    return target


def build_offline_msg(am: AppModel, pm: PlatformModel,
                      event_catalog: list[ContextEvent],
                      depth: int) -> MultiScheduleGraph:
    """Breadth-first offline expansion up to ``depth`` event applications.

    The root schedule comes from the built-in heuristic; every catalog
    event is applied at every frontier node, equal schedules are merged,
    and failing branches are pruned and recorded on the graph.
    """
    if not event_catalog:
        raise ValueError("event catalog must be non-empty")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    g = MultiScheduleGraph()
    pri = infer_priorities(BottomLevelAdapter(), am, pm)
    root_sched = reconstruct(am, pm, pri)
    g.add_node(root_sched, ORIGIN_OFFLINE, am, pm)
    frontier = [g.root]
    for _ in range(depth):
        next_frontier: list[int] = []
        for nid in frontier:
            for event in event_catalog:
                if (nid, encode_context_word(event)) in g.edges:
                    continue
                before = len(g.nodes)
                target = expand_node(g, nid, event)
                if target is not None and len(g.nodes) > before:
                    next_frontier.append(target)
        frontier = next_frontier
        if not frontier:
            break
    return g


def replay_edge(g: MultiScheduleGraph, src: int, word: int) -> Schedule:
    """Recompute the schedule a stored edge should lead to (edge soundness)."""
    node = g.nodes[src]
    event = decode_context_word(word)
    am2, pm2 = apply_event(node.am, node.pm, event)
    snap = make_snapshot(node.schedule, event.timestamp)
    pri = infer_priorities(BottomLevelAdapter(), am2, pm2)
    return reconstruct(am2, pm2, pri, event_time=event.timestamp, recovery=snap)
