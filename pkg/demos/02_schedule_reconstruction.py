#!/usr/bin/env python3
"""Reconstructing a schedule around a mid-run hardware failure.

Builds a random scenario, schedules it with the built-in inference
(bottom-level ranking + least-loaded placement), then fails an end system
while tasks are running.  Work finished before the failure stays frozen;
everything else is re-placed on the surviving hardware from the failure
tick onward, messages re-routed collision-free.
"""

from ttms import (
    BottomLevelAdapter,
    ContextEvent,
    EventKind,
    EvaluationProfile,
    ProfileKind,
    evaluate,
    infer_priorities,
    make_snapshot,
    reconstruct,
    safety_check,
)
from ttms.harness import ScenarioConfig, generate_scenario
from ttms.models import apply_failure
from ttms.reconstruction import messages_to_csv


def show(schedule, title):
    print(title)
    for tid, e in sorted(schedule.task_entries.items()):
        bar = " " * e.start + "#" * (e.end - e.start)
        print(f"  task {tid:2d} on ES{e.es}: [{e.start:3d}, {e.end:3d})  {bar}")
    print(f"  makespan {schedule.makespan}")
    print()


am, pm = generate_scenario(ScenarioConfig(n_tasks=8, n_end_systems=3,
                                          message_density=0.6,
                                          master_seed=2024))
priorities = infer_priorities(BottomLevelAdapter(), am, pm)
baseline = reconstruct(am, pm, priorities)
assert safety_check(baseline, am, pm) == []
show(baseline, f"baseline on end systems {pm.available_es()}:")

print("message timetable:")
print(messages_to_csv(baseline, am))

# fail end system 1 a third of the way through
t_fail = baseline.makespan // 3
event = ContextEvent(kind=EventKind.FAILURE, timestamp=t_fail,
                     hw_id=pm.hw_id_of("es", 1))
pm_failed = apply_failure(pm, event)
snapshot = make_snapshot(baseline, t_fail)
priorities2 = infer_priorities(BottomLevelAdapter(), am, pm_failed)
rebuilt = reconstruct(am, pm_failed, priorities2, event_time=t_fail,
                      recovery=snapshot)
assert safety_check(rebuilt, am, pm_failed) == []
show(rebuilt, f"after end system 1 fails at tick {t_fail}:")

frozen = sum(1 for tid, e in rebuilt.task_entries.items()
             if baseline.task_entries[tid] == e)
print(f"{frozen}/{len(am.tasks)} task entries carried over unchanged")

report = evaluate(rebuilt, EvaluationProfile(ProfileKind.MAKESPAN, am.deadline),
                  am, pm_failed)
print(f"makespan {report.metric:.0f}, reward {report.reward:.0f}, "
      f"deadline {am.deadline} met: {report.deadline_met}")
balance = evaluate(rebuilt, EvaluationProfile(ProfileKind.WORKLOAD, am.deadline),
                   am, pm_failed)
print(f"busy times per surviving end system: {balance.per_es_busy} "
      f"(spread {balance.metric:.2f})")
