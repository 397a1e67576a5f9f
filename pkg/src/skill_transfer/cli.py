"""Command line entry point: ``skill-transfer {gen-data,calibrate,run,aggregate,plot}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .datasets import VARIANTS, generate_dataset
from .experiment import (
    aggregate,
    attach_thresholds,
    calibrate_reward,
    config_hash,
    expand_config,
    run_single,
)
from .library import save_library
from .outputs import load_records, record_entry, write_aggregate, write_manifest, write_record

log = logging.getLogger("skill_transfer")


def _gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = generate_dataset(args.variant, args.seed)
    save_library(dataset.library, out / f"library_{args.variant}.json")
    with open(out / f"dataset_{args.variant}.json", "w") as fh:
        json.dump(dataset.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    log.info("wrote dataset %s (seed %d) to %s", args.variant, args.seed, out)
    return 0


def _calibrate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = generate_dataset(args.variant, args.seed)
    reward = calibrate_reward(dataset, args.s)
    with open(out / f"reward_{args.variant}.json", "w") as fh:
        json.dump({"a": reward.a, "b": reward.b}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"dataset {args.variant}: a={reward.a!r} b={reward.b!r}")
    return 0


def _run_task(task):
    config, dataset, reward, target_id, seed = task
    return run_single(config, dataset, reward, target_id, seed)[0]


def _run(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
        configs = expand_config(doc)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: invalid config {args.config}: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or configs[0].output_dir)
    digest = config_hash(doc)

    datasets, rewards = {}, {}
    for cfg in configs:
        if cfg.dataset not in datasets:
            datasets[cfg.dataset] = generate_dataset(cfg.dataset, cfg.dataset_seed, cfg.arm, cfg.sim)
            rewards[cfg.dataset] = cfg.reward or calibrate_reward(datasets[cfg.dataset], cfg.s, cfg.arm, cfg.sim)
            log.info("dataset %s reward a=%.6g b=%.6g", cfg.dataset, rewards[cfg.dataset].a, rewards[cfg.dataset].b)

    tasks = [
        (cfg, datasets[cfg.dataset], rewards[cfg.dataset], target_id, seed)
        for cfg in configs
        for target_id in datasets[cfg.dataset].library.ids
        for seed in cfg.seeds
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = []
        for i, task in enumerate(tasks):
            records.append(_run_task(task))
            log.info("run %d/%d done", i + 1, len(tasks))

    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in records:
        reward = rewards[rec.dataset]
        header = [f"config_sha256={digest}", f"dataset={rec.dataset} reward_a={reward.a!r} reward_b={reward.b!r}"]
        entries.append(record_entry(rec, write_record(out, rec, header)))
    write_manifest(
        out,
        {
            "config": doc,
            "config_sha256": digest,
            "reward": {name: {"a": r.a, "b": r.b} for name, r in sorted(rewards.items())},
            "records": entries,
        },
    )
    print(f"wrote {len(records)} runs to {out}")
    return 0


def _aggregate(args) -> int:
    run_dir = Path(args.out)
    with open(run_dir / "manifest.json") as fh:
        digest = json.load(fh)["config_sha256"]
    records = load_records(run_dir)
    attach_thresholds(records)
    summaries = aggregate(records)
    write_aggregate(run_dir, summaries, [f"config_sha256={digest}"])
    for g in summaries:
        its = "n/a" if g.iterations_to_threshold is None else f"{g.iterations_to_threshold:.1f}"
        print(
            f"{g.dataset} {g.mode:8s} k={g.k}: final={g.final_reward:.4f} start={g.initial_reward:.4f} "
            f"iters_to_threshold={its} similarity={g.similarity_to_init:.4f} (n={g.count})"
        )
    return 0


def _plot(args) -> int:
    from .plotting import plot_learning_curves

    for path in plot_learning_curves(Path(args.out)):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skill-transfer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="synthesize a skill dataset and write its library file")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_gen_data)

    p = sub.add_parser("calibrate", help="fit the reward weights a, b for a dataset")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s", type=float, default=0.05, help="baseline search variance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_calibrate)

    p = sub.add_parser("run", help="run the transfer experiment matrix from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_run)

    p = sub.add_parser("aggregate", help="summarize the runs in an output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_aggregate)

    p = sub.add_parser("plot", help="render aggregated learning curves to SVG")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
