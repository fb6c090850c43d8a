"""Optional live smoke test against a real logprob-capable endpoint.

Runs 20 MATH500-format questions end-to-end (sample -> confidence ->
reward-weighted vote and best-of-N) and asserts only that the pipeline
completes without error; it makes no accuracy claims. Not part of the test
suite: it needs a reachable endpoint.

Usage:
    python scripts/live_smoke.py --backend-url http://localhost:8000/v1 \
        --model my-model [--api-key-env OPENAI_API_KEY] [--n 4] \
        [--questions data/demo/smoke_questions.jsonl] [--out runs/smoke]
"""

import argparse
import os
import sys

from boxconf.backend import HttpBackend
from boxconf.cache import ResponseCache
from boxconf.datasets import load_questions
from boxconf.pipelines import eval_task_accuracy


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--backend-url", required=True)
    parser.add_argument("--model", required=True)
    parser.add_argument("--api-key-env", default="OPENAI_API_KEY")
    parser.add_argument("--api", choices=["completions", "chat"], default="completions")
    parser.add_argument("--questions", default="data/demo/smoke_questions.jsonl")
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--temperature", type=float, default=1.0)
    parser.add_argument("--max-tokens", type=int, default=1024)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--parallelism", type=int, default=8)
    parser.add_argument("--cache-dir", default="runs/smoke-cache")
    parser.add_argument("--out", default="runs/smoke")
    args = parser.parse_args()

    questions = load_questions(args.questions)[:20]
    backend = HttpBackend(
        base_url=args.backend_url,
        model=args.model,
        api_key=os.environ.get(args.api_key_env),
        api=args.api,
        cache=ResponseCache(args.cache_dir),
        parallelism=args.parallelism,
    )
    for strategy in ("sc_reward", "bon"):
        report = eval_task_accuracy(
            questions,
            backend,
            strategy=strategy,
            n=args.n,
            temperature=args.temperature,
            reward_method="confidence",
            max_tokens=args.max_tokens,
            seed=args.seed,
            parallelism=args.parallelism,
        )
        failed = [s for s in report.selections if "error" in s]
        report.write(f"{args.out}/{strategy}")
        print(
            f"{strategy}: completed {len(report.selections)} questions "
            f"({len(failed)} flagged), accuracy {report.accuracy:.3f} "
            f"(informational only)"
        )
        if failed:
            for record in failed:
                print(f"  {record['question_id']}: {record['error']}", file=sys.stderr)
            return 1
    print("smoke test completed without error")
    return 0


if __name__ == "__main__":
    sys.exit(main())
