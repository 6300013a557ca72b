#!/usr/bin/env python3
"""Enhancement training: from missed deadlines to a committed inference.

A deliberately small version of the retraining loop: an uninformed
spatial inference misses deadlines, the multi-agent search finds
deadline-meeting allocations, a fresh network trains on those solutions,
and the commit gate adopts it only because the held-out metric improves.
Weight transfer and the binary parameter format round out the workflow.
"""

import numpy as np

from ttms.harness import RetrainConfig, retraining_pipeline
from ttms.neural import (
    Mlp,
    forward,
    load_weights,
    save_weights,
    transfer_weights,
)

cfg = RetrainConfig(n_base=6, variations=5, marl_budget=150,
                    train_iterations=2000, master_seed=3)
report = retraining_pipeline(cfg, out_dir="/tmp/retrain_demo")

held = [r for r in report.instances if r.split == "held-out"]
print(f"{len(report.instances)} instances ({len(held)} held out), "
      f"{report.training_samples} training samples, "
      f"{report.no_feasible} with no feasible discovery")
print(f"gate: candidate {report.candidate_metric:.1f} vs incumbent "
      f"{report.incumbent_metric:.1f} -> committed={report.committed}")
print(f"held-out mean makespan {report.heldout_pre_mean:.1f} -> "
      f"{report.heldout_post_mean:.1f}")
print(f"held-out deadline-met rate {report.heldout_pre_met_rate:.2f} -> "
      f"{report.heldout_post_met_rate:.2f}")
print()
print("held-out instances (deadline | before -> after):")
for r in held:
    mark = "meets" if r.post_makespan <= r.deadline else "misses"
    print(f"  base {r.base}: {r.deadline:4d} | {r.pre_makespan:4d} -> "
          f"{r.post_makespan:4d}  ({mark})")
print()

# the edge-transfer workflow: parameters travel as a flat binary blob and
# transfer bit-exactly between identical architectures
net = Mlp.initialize((8, 16, 16, 4), seed=0)
save_weights(net, "/tmp/inference_weights.bin")
loaded = load_weights("/tmp/inference_weights.bin")
twin = transfer_weights(loaded, Mlp.initialize((8, 16, 16, 4), seed=99))
x = np.linspace(0, 1, 8)
assert np.array_equal(forward(net, x), forward(twin, x))
print("weights round-tripped through /tmp/inference_weights.bin and "
      "transferred bit-exactly")
