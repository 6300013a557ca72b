#!/usr/bin/env python3
"""The multi-schedule graph: precomputed switching plus online growth.

Expands an offline graph from an event catalog (schedules as nodes,
context words as edges, equal schedules merged), then plays the runtime
game: a known event is a constant-time edge lookup, an unseen event is a
miss that hands the scenario to the online learning unit, whose best
discovery is inserted back into the graph for next time.
"""

from ttms import (
    ContextEvent,
    EventKind,
    EvaluationProfile,
    OnlineScenario,
    ProfileKind,
    build_offline_msg,
    make_snapshot,
    run_online_learning,
)
from ttms.harness import ScenarioConfig, generate_scenario, inject_events
from ttms.models import apply_event, encode_context_word

am, pm = generate_scenario(ScenarioConfig(n_tasks=8, n_end_systems=3,
                                          master_seed=7))
catalog = inject_events(am, pm, 6, seed=99).events

graph = build_offline_msg(am, pm, catalog, depth=2)
print(f"offline graph: {len(graph)} nodes, {len(graph.edges)} edges, "
      f"{len(graph.pruned)} pruned branches")
for (src, word), dst in sorted(graph.edges.items())[:8]:
    print(f"  node {src} --{word:#010x}--> node {dst}")
print()

# runtime: catalog events resolve by lookup
known = catalog[0]
print(f"known event {encode_context_word(known):#010x} -> "
      f"node {graph.transition(graph.root, known)}")

# an unseen event misses and triggers online search; an early timestamp
# leaves plenty of pending work to re-optimize
unseen = ContextEvent(kind=EventKind.SLACK, value=6,
                      affected_task=sorted(am.tasks)[-1],
                      timestamp=catalog[0].timestamp)
assert graph.transition(graph.root, unseen) is None
print(f"unseen event {encode_context_word(unseen):#010x} -> miss, "
      f"searching online...")

am2, pm2 = apply_event(am, pm, unseen)
root_schedule = graph.nodes[graph.root].schedule
scenario = OnlineScenario(am=am2, pm=pm2, event=unseen,
                          event_time=unseen.timestamp,
                          recovery=make_snapshot(root_schedule,
                                                 unseen.timestamp))
profile = EvaluationProfile(ProfileKind.MAKESPAN, am2.deadline)
result = run_online_learning(scenario, "mab", 400, profile, seed=1,
                             msg=graph, from_node=graph.root)
print(f"best reward {result.catalog.best_reward:.0f} after "
      f"{len(result.catalog.rows)} episodes; inserted node "
      f"{result.insertions}")
print(f"graph now: {len(graph)} nodes; replaying the event -> "
      f"node {graph.transition(graph.root, unseen)}")

graph.validate()
path = "/tmp/msg_demo.json"
with open(path, "w") as f:
    f.write(graph.to_json())
print(f"graph exported to {path} (nodes embed schedules, edges keyed by "
      f"hex context word)")
