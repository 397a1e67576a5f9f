from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .outputs import AGGREGATE_CSV, read_csv  # noqa: E402

_COLORS = {"partial": "tab:blue", "full": "tab:green", "baseline": "tab:red"}
_STYLES = ["-", "--", ":", "-."]


def plot_learning_curves(run_dir: Path) -> list[Path]:
    """One SVG per dataset with mean +- std reward curves for every (mode, k) group."""
    rows = read_csv(Path(run_dir) / AGGREGATE_CSV)
    curves: dict[str, dict[tuple[str, int], list[tuple[int, float, float]]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        curves[row["dataset"]][(row["mode"], int(row["k"]))].append(
            (int(row["iteration"]), float(row["mean"]), float(row["std"]))
        )
    plt.rcParams["svg.hashsalt"] = "skill-transfer"
    written = []
    for dataset in sorted(curves):
        fig, ax = plt.subplots(figsize=(6, 4))
        ks = sorted({k for _, k in curves[dataset]})
        for (mode, k), pts in sorted(curves[dataset].items()):
            pts.sort()
            it = np.array([p[0] for p in pts])
            mean = np.array([p[1] for p in pts])
            std = np.array([p[2] for p in pts])
            color = _COLORS.get(mode, "k")
            ax.plot(it, mean, _STYLES[ks.index(k) % len(_STYLES)], color=color, label=f"{mode} k={k}")
            ax.fill_between(it, mean - std, mean + std, color=color, alpha=0.15, linewidth=0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean reward")
        ax.set_title(f"dataset {dataset}")
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = Path(run_dir) / f"learning_curves_{dataset}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
