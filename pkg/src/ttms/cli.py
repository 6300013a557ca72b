"""Command-line front end.

Subcommands: ``gen`` (scenario generation), ``inject`` (context events),
``run`` (experiment grid), ``retrain`` (enhancement-training pipeline) and
``report`` (summarize an artifact directory, optionally with plots).
``TTMS_SEED`` overrides the master seed everywhere.  Exit codes: 0 on
success, 1 on configuration errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    HorizonTooShortError,
    InfeasibleConfigError,
    RetrainConfig,
    ScenarioConfig,
    context_model_to_dict,
    generate_scenario,
    inject_events,
    retraining_pipeline,
    run_experiment,
    scenario_from_dict,
    scenario_to_dict,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _seed_override(seed: int) -> int:
    env = os.environ.get("TTMS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InfeasibleConfigError(f"TTMS_SEED={env!r} is not an integer")
    return seed


def _cmd_gen(args) -> int:
    cfg = ScenarioConfig(
        n_tasks=args.tasks, n_end_systems=args.es, n_routers=args.routers,
        edge_density=args.density, wcet_range=(args.wcet_lo, args.wcet_hi),
        message_density=args.msg_density,
        deadline_factor=args.deadline_factor,
        master_seed=_seed_override(args.seed))
    am, pm = generate_scenario(cfg)
    Path(args.out).write_text(json.dumps(scenario_to_dict(am, pm), indent=2,
                                         sort_keys=True))
    print(f"wrote {args.out}: {len(am.tasks)} tasks, {len(am.messages)} "
          f"messages, deadline {am.deadline}")
    return EXIT_OK


def _cmd_inject(args) -> int:
    doc = json.loads(Path(args.scenario).read_text())
    am, pm = scenario_from_dict(doc)
    cm = inject_events(am, pm, args.events, _seed_override(args.seed))
    Path(args.out).write_text(json.dumps(context_model_to_dict(cm), indent=2,
                                         sort_keys=True))
    print(f"wrote {args.out}: {len(cm.events)} events")
    return EXIT_OK


def _cmd_run(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    cfg = ExperimentConfig.from_dict(doc)
    if "TTMS_SEED" in os.environ:
        cfg = ExperimentConfig.from_dict(
            {**cfg.to_dict(), "master_seed": _seed_override(cfg.master_seed)})
    manifest = run_experiment(cfg, args.out)
    ok = sum(1 for c in manifest["cells"] if c["status"] == "ok")
    print(f"wrote {args.out}: {ok}/{len(manifest['cells'])} cells ok, "
          f"{len(manifest['files'])} files")
    return EXIT_OK


def _cmd_retrain(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    cfg = RetrainConfig.from_dict(doc)
    if "TTMS_SEED" in os.environ:
        cfg = RetrainConfig.from_dict(
            {**cfg.to_dict(), "master_seed": _seed_override(cfg.master_seed)})
    report = retraining_pipeline(cfg, args.out)
    print(f"wrote {args.out}: committed={report.committed} "
          f"held-out mean {report.heldout_pre_mean:.1f} -> "
          f"{report.heldout_post_mean:.1f}, deadline rate "
          f"{report.heldout_pre_met_rate:.2f} -> "
          f"{report.heldout_post_met_rate:.2f}")
    return EXIT_OK


def _read_csv_rows(path: Path) -> list[dict]:
    import csv

    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _cmd_report(args) -> int:
    out = Path(args.indir)
    manifest = json.loads((out / "manifest.json").read_text())
    print(f"artifact: {manifest.get('kind', 'experiment')} "
          f"(seed {manifest.get('master_seed', manifest.get('config', {}).get('master_seed'))})")
    if manifest.get("kind") == "retrain":
        for key in ("committed", "heldout_pre_mean", "heldout_post_mean",
                    "heldout_pre_met_rate", "heldout_post_met_rate",
                    "no_feasible", "training_samples"):
            print(f"  {key}: {manifest[key]}")
        if args.plot:
            _plot_retrain(out)
        return EXIT_OK
    cells = manifest["cells"]
    ok = [c for c in cells if c["status"] == "ok"]
    print(f"  cells: {len(ok)} ok / {len(cells)} total")
    summary = _read_csv_rows(out / "reward_summary.csv")
    by_model: dict[tuple[str, str], list[float]] = {}
    for row in summary:
        by_model.setdefault((row["model"], row["task_count"]), []).append(
            float(row["best_reward"]))
    for (model, tc) in sorted(by_model, key=lambda k: (k[0], int(k[1]))):
        vals = by_model[(model, tc)]
        print(f"  {model:5s} tasks={tc:>3s}  max best reward "
              f"{max(vals):10.2f}  mean {statistics.fmean(vals):10.2f}")
    timing = _read_csv_rows(out / "decision_time.csv")
    for row in timing:
        print(f"  {row['model']:5s} tasks={row['task_count']:>3s}  median "
              f"decision {int(row['median_decision_ns']):>10d} ns "
              f"({row['samples']} samples)")
    if manifest.get("retrain"):
        r = manifest["retrain"]
        print(f"  retrain: committed={r['committed']}  held-out mean "
              f"{r['heldout_pre_mean']:.1f} -> {r['heldout_post_mean']:.1f}  "
              f"met rate {r['heldout_pre_met_rate']:.2f} -> "
              f"{r['heldout_post_met_rate']:.2f}")
    if args.plot:
        _plot_experiment(out)
    return EXIT_OK


def _plot_experiment(out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = _read_csv_rows(out / "reward_summary.csv")
    fig, ax = plt.subplots()
    models = sorted({r["model"] for r in summary})
    for model in models:
        pts: dict[int, list[float]] = {}
        for r in summary:
            if r["model"] == model:
                pts.setdefault(int(r["task_count"]), []).append(
                    float(r["best_reward"]))
        xs = sorted(pts)
        ax.plot(xs, [max(pts[x]) for x in xs], marker="o", label=model)
    ax.set_xlabel("tasks")
    ax.set_ylabel("max best reward")
    ax.legend()
    fig.savefig(out / "max_reward.png", dpi=120)

    timing = _read_csv_rows(out / "decision_time.csv")
    fig, ax = plt.subplots()
    for model in models:
        rows = [r for r in timing if r["model"] == model]
        xs = [int(r["task_count"]) for r in rows]
        ys = [int(r["median_decision_ns"]) for r in rows]
        ax.plot(xs, ys, marker="o", label=model)
    ax.set_xlabel("tasks")
    ax.set_ylabel("median decision time (ns)")
    ax.legend()
    fig.savefig(out / "decision_time.png", dpi=120)
    print(f"  wrote {out / 'max_reward.png'} and {out / 'decision_time.png'}")


def _plot_retrain(out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _read_csv_rows(out / "retrain_report.csv")
    held = [r for r in rows if r["split"] == "held-out"]
    xs = range(len(held))
    fig, ax = plt.subplots()
    ax.plot(xs, [int(r["pre_makespan"]) for r in held], label="before")
    ax.plot(xs, [int(r["post_makespan"]) for r in held], label="after")
    ax.plot(xs, [int(r["deadline"]) for r in held], "k--", label="deadline")
    ax.set_xlabel("held-out instance")
    ax.set_ylabel("makespan")
    ax.legend()
    fig.savefig(out / "retrain_makespan.png", dpi=120)
    print(f"  wrote {out / 'retrain_makespan.png'}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ttms",
                                description="time-triggered metascheduling "
                                            "simulator")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a scenario document")
    g.add_argument("--tasks", type=int, required=True)
    g.add_argument("--es", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--routers", type=int, default=3)
    g.add_argument("--density", type=float, default=0.3)
    g.add_argument("--msg-density", type=float, default=0.5)
    g.add_argument("--wcet-lo", type=int, default=1)
    g.add_argument("--wcet-hi", type=int, default=20)
    g.add_argument("--deadline-factor", type=float, default=1.2)
    g.set_defaults(func=_cmd_gen)

    i = sub.add_parser("inject", help="inject context events into a scenario")
    i.add_argument("--scenario", required=True)
    i.add_argument("--events", type=int, default=10)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", required=True)
    i.set_defaults(func=_cmd_inject)

    r = sub.add_parser("run", help="run an experiment grid")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_run)

    t = sub.add_parser("retrain", help="run the retraining pipeline")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_retrain)

    o = sub.add_parser("report", help="summarize an artifact directory")
    o.add_argument("--in", dest="indir", required=True)
    o.add_argument("--plot", action="store_true")
    o.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InfeasibleConfigError, HorizonTooShortError, FileNotFoundError,
            json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
