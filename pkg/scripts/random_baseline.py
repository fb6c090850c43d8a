"""Random-reward baseline on the pick-1-of-10 benchmark protocol.

With iid uniform rewards and the strict-max rule, the probability that the
single correct candidate out of c gets the highest score is exactly 1/c, so
10 candidates give 10%. This script measures it by simulation.

Usage:
    python scripts/random_baseline.py [--items 10000] [--candidates 10] [--seed 17]
"""

import argparse
import random

from boxconf.datasets import BenchCandidate, BenchItem, Question
from boxconf.pipelines import eval_reward_bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=10_000)
    parser.add_argument("--candidates", type=int, default=10)
    parser.add_argument("--seed", type=int, default=17)
    args = parser.parse_args()

    items = [
        BenchItem(
            question=Question(id=f"item-{i}", problem=f"problem {i}"),
            candidates=[
                BenchCandidate(text=f"candidate {j} \\boxed{{{j}}}", correct=(j == i % args.candidates))
                for j in range(args.candidates)
            ],
        )
        for i in range(args.items)
    ]
    rng = random.Random(args.seed)
    report = eval_reward_bench(items, lambda item, j, text: rng.random())
    expected = 1.0 / args.candidates
    print(
        f"items={args.items} candidates={args.candidates} "
        f"accuracy={report.accuracy:.4f} expected={expected:.4f} "
        f"delta={report.accuracy - expected:+.4f}"
    )


if __name__ == "__main__":
    main()
