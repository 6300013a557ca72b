#!/usr/bin/env python3
"""Context events on the wire and in the models.

Walks through the 32-bit consistency word (pack, inspect, unpack) and
shows how each event kind transforms the application or platform model:
slack shrinks a task's execution time, a failure clears availability, a
mode change rescales every execution time through the platform's
frequency factor.
"""

from ttms import (
    ContextEvent,
    EventKind,
    Task,
    AppModel,
    PlatformModel,
    apply_failure,
    apply_mode_change,
    apply_slack,
    decode_context_word,
    encode_context_word,
)
from ttms.models import context_word_to_bytes, effective_wcet

# --- the wire word ----------------------------------------------------------

event = ContextEvent(kind=EventKind.SLACK, value=4, affected_task=42,
                     timestamp=500, hw_id=0)
word = encode_context_word(event)
print(f"slack event -> word {word} = {word:#010x} = {word:032b}")
print(f"  big-endian file form: {context_word_to_bytes(word).hex()}")
print(f"  decodes back to: {decode_context_word(word)}")
print()

# --- slack: the affected task needs less time --------------------------------

tasks = {42: Task(task_id=42, wcet=10), 43: Task(task_id=43, wcet=6)}
am = AppModel(tasks=tasks, messages={}, deadline=100)
am2 = apply_slack(am, event)
print(f"slack level {event.value} (50%): task 42 wcet "
      f"{am.tasks[42].wcet} -> {am2.tasks[42].wcet}, task 43 untouched "
      f"({am2.tasks[43].wcet})")
print()

# --- failure: hardware drops out ---------------------------------------------

pm = PlatformModel(end_systems={0: True, 1: True, 2: True},
                   routers={10: True},
                   links={(0, 10): True, (1, 10): True, (2, 10): True})
print("hardware id space (end systems < routers < links):")
for hw_id, item in enumerate(pm.hardware_index()):
    print(f"  {hw_id}: {item}")
failure = ContextEvent(kind=EventKind.FAILURE, timestamp=9,
                       hw_id=pm.hw_id_of("es", 1))
pm2 = apply_failure(pm, failure)
print(f"after failing end system 1: available = {pm2.available_es()}")
print()

# --- mode change: platform-wide frequency scaling ------------------------------

mode = ContextEvent(kind=EventKind.MODE_CHANGE, value=4, timestamp=20)
am3, pm3 = apply_mode_change(am, pm, mode)
print(f"mode level {mode.value}: frequency factor {pm3.frequency_scale}")
for tid, task in sorted(am3.tasks.items()):
    print(f"  task {tid}: wcet {task.wcet} -> effective "
          f"{effective_wcet(task.wcet, pm3.frequency_scale)} ticks")
