"""CSV and manifest files written by experiment runs."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiment import GroupSummary, RunRecord
from .reps import CURVE_COLUMNS, IterationStats, curve_rows

MANIFEST = "manifest.json"
AGGREGATE_CSV = "aggregate.csv"
SUMMARY_CSV = "summary.csv"
AGGREGATE_COLUMNS = ("mode", "k", "dataset", "iteration", "mean", "std")
SUMMARY_COLUMNS = (
    "mode", "k", "dataset", "count", "final_reward", "iterations_to_threshold",
    "reached_threshold", "initial_reward", "similarity_to_init",
)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], header: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def record_filename(r: RunRecord) -> str:
    return f"{r.dataset}_{r.mode}_k{r.k}_N{r.library_size}_{r.target_id}_s{r.seed}.csv"


def write_record(out_dir: Path, record: RunRecord, header: Sequence[str]) -> str:
    name = record_filename(record)
    write_csv(out_dir / name, CURVE_COLUMNS, curve_rows(record.curve), header)
    return name


def record_entry(record: RunRecord, filename: str) -> dict:
    return {
        "file": filename,
        "dataset": record.dataset,
        "mode": record.mode,
        "k": record.k,
        "library_size": record.library_size,
        "seed": record.seed,
        "target_id": record.target_id,
        "source_ids": list(record.source_ids),
        "initial_reward": record.initial_reward,
        "init_mean": record.init_mean.tolist(),
        "final_mean": record.final_mean.tolist(),
    }


def write_manifest(out_dir: Path, payload: dict) -> None:
    with open(out_dir / MANIFEST, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_records(run_dir: Path) -> list[RunRecord]:
    with open(run_dir / MANIFEST) as fh:
        manifest = json.load(fh)
    records = []
    for entry in manifest["records"]:
        rows = read_csv(run_dir / entry["file"])
        curve = [
            IterationStats(
                float(row["mean_reward"]), float(row["max_reward"]), float(row["eta"]),
                float(row["kl"]), float(row["ess"]),
            )
            for row in rows
        ]
        records.append(
            RunRecord(
                dataset=entry["dataset"],
                mode=entry["mode"],
                k=int(entry["k"]),
                library_size=int(entry["library_size"]),
                seed=int(entry["seed"]),
                target_id=entry["target_id"],
                source_ids=tuple(entry["source_ids"]),
                curve=curve,
                init_mean=np.array(entry["init_mean"], dtype=float),
                final_mean=np.array(entry["final_mean"], dtype=float),
                initial_reward=float(entry["initial_reward"]),
            )
        )
    return records


def write_aggregate(run_dir: Path, summaries: Sequence[GroupSummary], header: Sequence[str] = ()) -> None:
    rows = []
    for g in summaries:
        for i, (m, s) in enumerate(zip(g.mean_curve, g.std_curve)):
            rows.append((g.mode, g.k, g.dataset, i, m, s))
    write_csv(run_dir / AGGREGATE_CSV, AGGREGATE_COLUMNS, rows, header)
    write_csv(
        run_dir / SUMMARY_CSV,
        SUMMARY_COLUMNS,
        [
            (g.mode, g.k, g.dataset, g.count, g.final_reward, g.iterations_to_threshold,
             g.reached_threshold, g.initial_reward, g.similarity_to_init)
            for g in summaries
        ],
        header,
    )
