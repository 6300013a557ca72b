#!/usr/bin/env python3
"""The three search models side by side on one allocation problem.

The multi-armed bandit treats whole spatial assignments as arms, the
contextual variant estimates per-arm rewards with a small network fed
scenario features, and the multi-agent model gives every task its own
agent with a coordinator merging their picks.  All three decay epsilon
geometrically and catalogue the best schedule found.
"""

from ttms import (
    EvaluationProfile,
    OnlineScenario,
    ProfileKind,
    SchedulingEnv,
    run_online_learning,
)
from ttms.harness import ScenarioConfig, generate_scenario

am, pm = generate_scenario(ScenarioConfig(n_tasks=5, n_end_systems=3,
                                          master_seed=11))
profile = EvaluationProfile(ProfileKind.MAKESPAN, am.deadline)
scenario = OnlineScenario(am=am, pm=pm)

env = SchedulingEnv(am, pm, profile)
oracle = max(env.step(a).reward for a in env.assignments())
print(f"{len(am.tasks)} tasks on {len(env.available_es)} end systems: "
      f"{env.n_actions} assignments, brute-force best reward {oracle:.0f}")
print()

for model, budget in (("mab", 600), ("cb", 600), ("marl", 1200)):
    result = run_online_learning(scenario, model, budget, profile, seed=5)
    rows = result.catalog.rows
    marks = {0, len(rows) // 4, len(rows) // 2, len(rows) - 1}
    print(f"{model}: best {result.catalog.best_reward:.0f} "
          f"(optimum {'reached' if result.catalog.best_reward == oracle else 'missed'})")
    for i in sorted(marks):
        r = rows[i]
        print(f"   episode {r.episode:4d}  epsilon {r.epsilon:6.3f}  "
              f"reward {r.reward:8.1f}  best {r.best_reward:8.1f}")
    if result.prediction_errors:
        errs = [p.abs_error for p in result.prediction_errors]
        k = max(1, len(errs) // 10)
        print(f"   predictor error: first 10% {sum(errs[:k]) / k:.3f} -> "
              f"last 10% {sum(errs[-k:]) / k:.3f}")
    print()

# seeded determinism, serial or parallel
a = run_online_learning(scenario, "marl", 300, profile, seed=9, workers=4,
                        parallel=False)
b = run_online_learning(scenario, "marl", 300, profile, seed=9, workers=4,
                        parallel=True)
assert [(r.reward, r.best_reward) for r in a.catalog.rows] == \
       [(r.reward, r.best_reward) for r in b.catalog.rows]
print("4 worker streams give identical traces run serially or in parallel")
