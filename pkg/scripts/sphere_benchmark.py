"""REPS on the negated squared distance to a random point in the unit ball."""
import argparse
import time

import numpy as np

from skill_transfer.reps import RepsConfig, SearchDistribution, optimize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=5)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=100)
    parser.add_argument("--samples", type=int, default=60)
    parser.add_argument("--epsilon", type=float, default=0.5)
    args = parser.parse_args()

    config = RepsConfig(args.epsilon, args.samples, args.iterations)
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        target = rng.standard_normal(args.dim)
        target *= rng.uniform() ** (1 / args.dim) / np.linalg.norm(target)
        start = time.perf_counter()
        final, curve = optimize(
            SearchDistribution(np.zeros(args.dim), np.eye(args.dim)),
            lambda th: -float(np.sum((th - target) ** 2)),
            config,
            rng,
        )
        kl = np.array([s.kl_to_previous for s in curve])
        print(
            f"seed {seed}: distance {np.linalg.norm(final.mean - target):.2e}  "
            f"max KL {kl.max():.3f}  mean ESS {np.mean([s.effective_sample_size for s in curve]):.1f}  "
            f"{time.perf_counter() - start:.2f}s"
        )


if __name__ == "__main__":
    main()
