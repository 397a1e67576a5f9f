"""Run, aggregate and plot a transfer-experiment config in one go.

Equivalent to ``skill-transfer run``, ``aggregate`` and ``plot`` in sequence.
"""
import argparse
import json
import sys

from skill_transfer.cli import main as cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("configs", nargs="*", default=["configs/desk_A.json", "configs/desk_B.json"])
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    for path in args.configs:
        with open(path) as fh:
            out = json.load(fh).get("output_dir", "runs")
        for argv in (
            ["run", "--config", path, "--out", out, "--jobs", str(args.jobs)],
            ["aggregate", "--out", out],
            ["plot", "--out", out],
        ):
            code = cli(argv)
            if code:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
