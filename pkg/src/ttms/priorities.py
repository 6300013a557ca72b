"""Temporal and spatial priority generation.

Temporal priorities come from the bottom-level of each task: its execution
time plus the largest bottom-level among its successors, i.e. the longest
execution path from the task to any exit task.  Spatial priorities come
from a least-loaded search over the available end systems.  Both are
wrapped behind a small adapter interface so a trained neural predictor can
substitute for the built-ins.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from .models import (
    AppModel,
    ContextEvent,
    PlatformModel,
    PlatformExhaustedError,
    effective_wcet,
)


class InvalidInferenceError(ValueError):
    """An adapter produced priorities violating their invariants.

    This error doubles as a trigger input for the online learning unit.
    """


@dataclass
class PriorityAssignment:
    """Temporal scores (higher runs earlier) and per-task end-system targets."""

    temporal: dict[int, float]
    spatial: dict[int, int] = field(default_factory=dict)

    def validate(self, am: AppModel, pm: PlatformModel,
                 tasks: set[int] | None = None) -> None:
        """Check coverage and spatial-target availability over ``tasks``
        (all application tasks by default)."""
        scope = set(am.tasks) if tasks is None else set(tasks)
        missing = scope - set(self.temporal)
        if missing:
            raise InvalidInferenceError(
                f"temporal priority missing for tasks {sorted(missing)}")
        if any(self.temporal[t] < 0 for t in scope):
            raise InvalidInferenceError("temporal priorities must be non-negative")
        missing = scope - set(self.spatial)
        if missing:
            raise InvalidInferenceError(
                f"spatial target missing for tasks {sorted(missing)}")
        avail = set(pm.available_es())
        bad = {t: es for t, es in self.spatial.items()
               if t in scope and es not in avail}
        if bad:
            raise InvalidInferenceError(
                f"spatial targets on unavailable end systems: {bad}")


def b_level(am: AppModel) -> dict[int, int]:
    """Bottom-level of every task.

    b(v) = wcet(v) + max over successors u of b(u), the max over an empty
    successor set being 0.  Successor edges combine declared precedence and
    message edges; messages add no weight of their own.  Raises
    CycleDetectedError on cyclic precedence.
    """
    order = am.topological_order()
    succ = am.successor_map()
    levels: dict[int, int] = {}
    for tid in reversed(order):
        below = max((levels[u] for u in succ[tid]), default=0)
        levels[tid] = am.tasks[tid].wcet + below
    return levels


def priority_order(am: AppModel, temporal: dict[int, float],
                   tasks=None) -> list[int]:
    """Task ids in descending temporal priority, equal scores by lowest id."""
    scope = am.tasks if tasks is None else tasks
    return sorted(scope, key=lambda t: (-temporal[t], t))


def least_loaded_allocation(
    am: AppModel,
    pm: PlatformModel,
    current_loads: dict[int, int] | None = None,
    temporal: dict[int, float] | None = None,
) -> dict[int, int]:
    """Greedy spatial allocation onto the least-loaded available end system.

    Tasks are visited in descending temporal priority (bottom-levels by
    default); each goes to the available end system with the smallest
    accumulated busy time, ties broken by lowest end-system id, and the
    load is bumped by the task's execution time before the next pick.
    """
    avail = pm.available_es()
    if not avail:
        raise PlatformExhaustedError("no available end system to allocate onto")
    loads = {es: 0 for es in avail}
    if current_loads:
        for es, v in current_loads.items():
            if es in loads:
                loads[es] = v
    if temporal is None:
        temporal = {t: float(v) for t, v in b_level(am).items()}
    assignment: dict[int, int] = {}
    for tid in priority_order(am, temporal):
        es = min(avail, key=lambda e: (loads[e], e))
        assignment[tid] = es
        loads[es] += effective_wcet(am.tasks[tid].wcet, pm.frequency_scale)
    return assignment


class InferenceAdapter(ABC):
    """Opaque priority source: models in, a PriorityAssignment out."""

    @abstractmethod
    def infer(self, am: AppModel, pm: PlatformModel,
              cm_window: tuple[ContextEvent, ...] = ()) -> PriorityAssignment:
        ...


class BottomLevelAdapter(InferenceAdapter):
    """Built-in heuristic: bottom-level ranking plus least-loaded placement."""

    def infer(self, am, pm, cm_window=()):
        temporal = {t: float(v) for t, v in b_level(am).items()}
        spatial = least_loaded_allocation(am, pm, temporal=temporal)
        return PriorityAssignment(temporal=temporal, spatial=spatial)


def infer_priorities(adapter: InferenceAdapter, am: AppModel, pm: PlatformModel,
                     cm_window: tuple[ContextEvent, ...] = ()) -> PriorityAssignment:
    """Run an adapter and validate its output before handing it on."""
    out = adapter.infer(am, pm, cm_window)
    out.validate(am, pm)
    return out
