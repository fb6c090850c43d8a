"""Regenerate the bundled demo inputs under data/demo/.

Deterministic: running it twice produces identical files. The generate
fixture carries 30 samples per question so every CLI command works at its
default sample count, and score records for every bench candidate so
eval-bench works with teacher-forced rewards.

Usage:
    python scripts/make_demo_data.py [--out data/demo]
"""

import argparse
import json
import math
import random
from pathlib import Path

from boxconf.prompts import render_zero_shot

QUESTIONS = [
    {"id": "demo-1", "problem": "Compute $441+2(21)(19)+361$.", "gold_answer": "1600"},
    {"id": "demo-2", "problem": "A deck has 13 hearts among 52 cards. What is the probability that the top card is a heart?", "gold_answer": "\\dfrac14"},
    {"id": "demo-3", "problem": "Solve for $x$: $3x - 5 = 16$.", "gold_answer": "7"},
    {"id": "demo-4", "problem": "What is $2^{10}$?", "gold_answer": "1024"},
]

WRONG_ANSWERS = {
    "demo-1": ["1602", "1190", "1594", "1620"],
    "demo-2": ["\\frac{1}{2}", "\\frac{13}{51}", "0.2"],
    "demo-3": ["6", "21/3", "8"],
    "demo-4": ["100", "512", "2048"],
}


def token_pieces(answer, prob, index):
    pieces = [
        (f"Sample {index}: let me work through this.\n", -0.25),
        ("The final answer is $\\boxed{", -0.25),
        (answer, math.log(prob) if prob < 1.0 else 0.0),
        ("}$.\n", -0.25),
    ]
    return [{"text": t, "logprob": lp} for t, lp in pieces]


def generate_records(rng, question, n=30):
    prompt = render_zero_shot(question["problem"])
    gold = question["gold_answer"]
    wrong = WRONG_ANSWERS[question["id"]]
    records = []
    for i in range(n):
        if rng.random() < 0.55:
            answer, prob = gold, round(rng.uniform(0.55, 0.98), 3)
        else:
            answer, prob = rng.choice(wrong), round(rng.uniform(0.15, 0.75), 3)
        records.append(
            {"kind": "generate", "prompt": prompt, "sample_index": i, "tokens": token_pieces(answer, prob, i)}
        )
    return records


def bench_items_and_scores(rng):
    items, score_records = [], []
    for qi, question in enumerate(QUESTIONS[:2]):
        prompt = render_zero_shot(question["problem"])
        candidates = []
        answers = [question["gold_answer"]] + (WRONG_ANSWERS[question["id"]] * 3)[:9]
        for j, answer in enumerate(answers):
            prob = round(rng.uniform(0.7, 0.95), 3) if j == 0 else round(rng.uniform(0.1, 0.6), 3)
            tokens = token_pieces(answer, prob, 100 + j)
            text = "".join(t["text"] for t in tokens)
            candidates.append({"text": text, "correct": j == 0})
            score_records.append({"kind": "score", "prompt": prompt, "completion": text, "tokens": tokens})
        items.append({"id": f"bench-{qi}", "problem": question["problem"], "candidates": candidates})
    return items, score_records


POINTS = [
    {"label": "family-a-small", "reasoning_score": 28.4, "eval_score": 6.2},
    {"label": "family-a-medium", "reasoning_score": 45.1, "eval_score": 14.8},
    {"label": "family-a-large", "reasoning_score": 61.7, "eval_score": 25.3},
    {"label": "family-a-xl", "reasoning_score": 72.9, "eval_score": 35.6},
    {"label": "family-b-small", "reasoning_score": 33.0, "eval_score": 11.5},
    {"label": "family-b-medium", "reasoning_score": 52.6, "eval_score": 16.9},
    {"label": "family-b-large", "reasoning_score": 66.2, "eval_score": 31.0},
    {"label": "family-b-xl", "reasoning_score": 75.4, "eval_score": 33.8},
]

TOY_MODELS = [
    {"rationales": [{"p": 0.5}, {"p": 0.5}], "table": [[0.6, 0.3, 0.1], [0.5, 0.25, 0.25]], "gold_index": 0},
    {"rationales": [{"p": 0.5}, {"p": 0.5}], "table": [[0.9, 0.05, 0.05], [0.8, 0.1, 0.1]], "gold_index": 0},
]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    print(f"wrote {path} ({len(records)} records)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/demo")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(20250809)
    fixture = []
    for question in QUESTIONS:
        fixture.extend(generate_records(rng, question))
    bench, score_records = bench_items_and_scores(rng)
    fixture.extend(score_records)

    # externally supplied solutions that score-solutions can teacher-force:
    # reuse the first bench candidates, which have score records above
    external = []
    for item, question in zip(bench, QUESTIONS[:2]):
        for candidate in item["candidates"][:3]:
            external.append({"question_id": question["id"], "text": candidate["text"]})

    write_jsonl(out / "questions.jsonl", QUESTIONS)
    write_jsonl(out / "fixture.jsonl", fixture)
    write_jsonl(out / "bench.jsonl", bench)
    write_jsonl(out / "external_solutions.jsonl", external)
    write_jsonl(out / "points.jsonl", POINTS)
    write_jsonl(out / "toymodels.jsonl", TOY_MODELS)


if __name__ == "__main__":
    main()
