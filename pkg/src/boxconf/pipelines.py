"""End-to-end procedures.

* :func:`eval_reward_bench` — pick-1-of-10 style benchmark: a reward method
  scores an item iff the flagged-correct candidate gets the strictly
  highest reward.
* :func:`eval_task_accuracy` — sample n solutions per question, select one
  answer (self-consistency, reward-weighted voting, or best-of-N), verify
  against gold.
* :func:`build_dpo_pairs` — sample, verify, pair every correct solution
  with every incorrect one, keep the top-k pairs by confidence gap, and emit
  a preference dataset plus training metadata for an external DPO trainer.
* :func:`filter_data` — per question keep the single verified-correct
  solution with the highest (or lowest) confidence, as an SFT dataset.
* :func:`correlation_report` — Pearson correlation between model-level
  reasoning and evaluation scores.

Per-question work runs concurrently up to ``parallelism``; results are
aggregated in (question, sample_index) order so outputs are byte-identical
across parallelism settings.
"""

from __future__ import annotations

import csv
import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from .answers import answers_equivalent
from .backend import GENERATE, SCORE, GenerationRequest
from .datasets import (
    BenchItem,
    Question,
    SampleRecord,
    sample_to_record,
    write_jsonl,
)
from .errors import (
    AllAnswerlessError,
    BackendError,
    CapabilityError,
    DatasetError,
    DegenerateSeriesError,
    NoValidRewardError,
)
from .prompts import render_zero_shot
from .rewards import (
    RewardScore,
    ScoredSolution,
    attach_answer,
    compute_reward,
    score_external_solution,
)
from .selection import SampleSet, best_of_n, normalize_rewards, self_consistency, weighted_vote

STRATEGIES = ("sc", "sc_reward", "bon")

# Recorded defaults for the emitted preference datasets; consumed verbatim
# by external trainers.
DEFAULT_BETA = 0.3
DEFAULT_LEARNING_RATE = 5e-7
DEFAULT_BATCH_SIZE = 128
DEFAULT_EPOCHS = 2
DEFAULT_PAIR_SAMPLES = 30
DEFAULT_PAIRS_PER_QUESTION = 10


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _run_indexed(worker: Callable[[int], object], count: int, parallelism: int) -> list:
    """Run worker(0..count-1), possibly in parallel, preserving index order."""
    if parallelism <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(parallelism, count)) as pool:
        return list(pool.map(worker, range(count)))


def _require_capability(backend, capability: str, why: str) -> None:
    have = getattr(backend, "capabilities", frozenset())
    if capability not in have:
        raise CapabilityError(f"{why} requires backend capability {capability!r}, got {sorted(have)}")


# ---------------------------------------------------------------------------
# Reward-model benchmark
# ---------------------------------------------------------------------------

Scorer = Callable[[BenchItem, int, str], Union[RewardScore, float]]


def backend_scorer(backend, method: str) -> Scorer:
    """Scorer closure routing one bench candidate through the named reward method."""
    if method in ("confidence", "perplexity"):
        _require_capability(backend, SCORE, f"reward method {method!r}")

        def scorer(item: BenchItem, index: int, text: str) -> RewardScore:
            sol = score_external_solution(backend, item.question, text)
            return compute_reward(method, backend, item.question, sol)

    elif method in ("generative_verifier", "judge"):
        _require_capability(backend, GENERATE, f"reward method {method!r}")

        def scorer(item: BenchItem, index: int, text: str) -> RewardScore:
            sol = ScoredSolution(
                question_id=item.question.id, text=text, sample_index=index, source="external"
            )
            return compute_reward(method, backend, item.question, sol)

    else:
        raise ValueError(f"unknown reward method {method!r}")
    return scorer


@dataclass
class BenchReport:
    accuracy: float
    reward_method: str
    per_item: list[dict]

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_jsonl(out / "per_item.jsonl", self.per_item)
        _write_text(
            out / "summary.txt",
            f"reward_method = {self.reward_method}\n"
            f"items = {len(self.per_item)}\n"
            f"accuracy = {self.accuracy:.6f}\n",
        )
        with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["reward_method", "items", "accuracy"])
            writer.writerow([self.reward_method, len(self.per_item), f"{self.accuracy:.6f}"])


def eval_reward_bench(
    items: Sequence[BenchItem],
    reward_method: Union[str, Scorer],
    backend=None,
    parallelism: int = 1,
) -> BenchReport:
    """Score every candidate of every item; an item counts correct iff the
    flagged-correct candidate's reward is strictly greater than all others.

    ``reward_method`` is a method name (needs ``backend``) or a scorer
    callable (backend-free, used for oracles and simulations).
    """
    if not items:
        raise DatasetError("no bench items to evaluate")
    if callable(reward_method):
        scorer, method_name = reward_method, getattr(reward_method, "__name__", "custom")
    else:
        if backend is None:
            raise ValueError("a named reward method needs a backend")
        scorer, method_name = backend_scorer(backend, reward_method), reward_method

    def run_item(i: int) -> dict:
        item = items[i]
        scored = []
        for j, cand in enumerate(item.candidates):
            score = scorer(item, j, cand.text)
            if not isinstance(score, RewardScore):
                score = RewardScore(method=method_name, value=float(score))
            scored.append(
                {"index": j, "correct_flag": cand.correct, "value": score.value, "valid": score.valid}
            )
        correct_value = scored[item.correct_index]["value"]
        item_correct = all(
            correct_value > entry["value"]
            for entry in scored
            if not entry["correct_flag"]
        )
        return {
            "question_id": item.question.id,
            "item_correct": item_correct,
            "candidates": scored,
        }

    per_item = _run_indexed(run_item, len(items), parallelism)
    accuracy = sum(rec["item_correct"] for rec in per_item) / len(per_item)
    return BenchReport(accuracy=accuracy, reward_method=method_name, per_item=per_item)


# ---------------------------------------------------------------------------
# Task accuracy (sample + select + verify)
# ---------------------------------------------------------------------------


@dataclass
class QuestionSamples:
    question: Question
    solutions: list[ScoredSolution] = field(default_factory=list)
    rewards: dict[str, list[RewardScore]] = field(default_factory=dict)
    error: Optional[str] = None

    def sample_records(self) -> list[dict]:
        records = []
        for i, sol in enumerate(self.solutions):
            correct = (
                sol.answer is not None
                and self.question.gold_answer is not None
                and answers_equivalent(sol.answer, self.question.gold_answer)
            )
            records.append(
                sample_to_record(
                    question_id=self.question.id,
                    sample_index=sol.sample_index,
                    text=sol.text,
                    correct=correct,
                    answer_raw=sol.answer_span.raw if sol.answer_span else None,
                    answer_canonical=sol.answer.text if sol.answer else None,
                    rewards={m: scores[i] for m, scores in self.rewards.items()},
                )
            )
        return records


def collect_samples(
    questions: Sequence[Question],
    backend,
    n: int,
    temperature: float,
    max_tokens: int = 1024,
    seed: Optional[int] = None,
    reward_methods: Sequence[str] = (),
    parallelism: int = 1,
) -> list[QuestionSamples]:
    """Sample n solutions per question under the zero-shot prompt and attach
    answers plus any requested rewards. Backend failures are captured per
    question, not raised."""
    _require_capability(backend, GENERATE, "sampling")

    def worker(i: int) -> QuestionSamples:
        question = questions[i]
        result = QuestionSamples(question=question)
        req = GenerationRequest(
            prompt=render_zero_shot(question.problem),
            n=n,
            temperature=temperature,
            max_tokens=max_tokens,
            seed=seed,
        )
        try:
            solutions = backend.generate(req)
            for sol in solutions:
                sol.question_id = question.id
                attach_answer(sol)
            result.solutions = solutions
            for method in reward_methods:
                result.rewards[method] = [
                    compute_reward(method, backend, question, sol) for sol in solutions
                ]
        except BackendError as exc:
            result.error = f"{type(exc).__name__}: {exc}"
        return result

    return _run_indexed(worker, len(questions), parallelism)


@dataclass
class TaskReport:
    accuracy: float
    strategy: str
    selections: list[dict]
    samples: list[dict]

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_jsonl(out / "samples.jsonl", self.samples)
        write_jsonl(out / "selections.jsonl", self.selections)
        _write_text(
            out / "summary.txt",
            f"strategy = {self.strategy}\n"
            f"questions = {len(self.selections)}\n"
            f"accuracy = {self.accuracy:.6f}\n",
        )
        with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strategy", "questions", "accuracy"])
            writer.writerow([self.strategy, len(self.selections), f"{self.accuracy:.6f}"])


def select_answer(
    question: Question,
    solutions: Sequence[ScoredSolution],
    rewards: Optional[Sequence[RewardScore]],
    strategy: str,
) -> dict:
    """Apply one selection strategy; returns a selection record with
    winner/correct plus strategy-specific diagnostics."""
    sample_set = SampleSet(question=question, solutions=list(solutions), rewards=list(rewards) if rewards else None)
    record: dict = {"question_id": question.id, "strategy": strategy}
    if strategy == "sc":
        outcome = self_consistency(sample_set)
    elif strategy == "sc_reward":
        if rewards is None:
            raise ValueError("sc_reward needs rewards")
        outcome = weighted_vote(sample_set, normalize_rewards(list(rewards)))
    elif strategy == "bon":
        winner = best_of_n(sample_set)
        record["chosen_sample_index"] = winner.sample_index
        record["winner"] = winner.answer.text if winner.answer else None
        record["correct"] = (
            winner.answer is not None
            and question.gold_answer is not None
            and answers_equivalent(winner.answer, question.gold_answer)
        )
        return record
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    record["winner"] = outcome.winner.text
    record["winner_first_index"] = outcome.winner_first_index
    record["class_weights"] = outcome.class_weights
    record["correct"] = question.gold_answer is not None and answers_equivalent(
        outcome.winner, question.gold_answer
    )
    return record


def eval_task_accuracy(
    questions: Sequence[Question],
    backend,
    strategy: str = "sc_reward",
    n: int = 16,
    temperature: float = 1.0,
    reward_method: str = "confidence",
    max_tokens: int = 1024,
    seed: Optional[int] = None,
    parallelism: int = 1,
) -> TaskReport:
    """Sample, select, verify; accuracy is the mean over questions.

    A question whose backend call or selection fails counts incorrect and
    its selection record carries the error.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    for q in questions:
        if q.gold_answer is None:
            raise DatasetError(f"question {q.id!r} has no gold answer")
    methods = [reward_method] if strategy in ("sc_reward", "bon") else []
    collected = collect_samples(
        questions,
        backend,
        n=n,
        temperature=temperature,
        max_tokens=max_tokens,
        seed=seed,
        reward_methods=methods,
        parallelism=parallelism,
    )
    selections, samples = [], []
    for qs in collected:
        samples.extend(qs.sample_records())
        if qs.error is not None:
            selections.append(
                {"question_id": qs.question.id, "strategy": strategy, "correct": False, "error": qs.error}
            )
            continue
        rewards = qs.rewards.get(reward_method) if methods else None
        try:
            selections.append(select_answer(qs.question, qs.solutions, rewards, strategy))
        except (AllAnswerlessError, NoValidRewardError) as exc:
            selections.append(
                {
                    "question_id": qs.question.id,
                    "strategy": strategy,
                    "correct": False,
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
    accuracy = sum(rec["correct"] for rec in selections) / len(selections)
    return TaskReport(accuracy=accuracy, strategy=strategy, selections=selections, samples=samples)


# ---------------------------------------------------------------------------
# Preference-pair construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingMeta:
    """Hyperparameters emitted verbatim alongside every pair dataset."""

    beta: float = DEFAULT_BETA
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    n: int = DEFAULT_PAIR_SAMPLES
    k: int = DEFAULT_PAIRS_PER_QUESTION

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "n": self.n,
            "k": self.k,
        }


@dataclass(frozen=True)
class PreferencePair:
    question_id: str
    prompt: str
    chosen_text: str
    chosen_confidence: float
    rejected_text: str
    rejected_confidence: float
    gap: float
    iteration: int

    def to_record(self) -> dict:
        return {
            "prompt": self.prompt,
            "chosen": self.chosen_text,
            "rejected": self.rejected_text,
            "meta": {
                "question_id": self.question_id,
                "chosen_confidence": self.chosen_confidence,
                "rejected_confidence": self.rejected_confidence,
                "gap": self.gap,
                "iteration": self.iteration,
            },
        }


def pair_candidates(
    chosen: Sequence[tuple[int, float]],
    rejected: Sequence[tuple[int, float]],
    k: int,
) -> list[tuple[int, int, float]]:
    """All chosen x rejected pairs sorted by confidence gap descending,
    truncated to k. Ties break by (chosen index, rejected index) ascending.

    Inputs are (sample_index, confidence) tuples; output tuples are
    (chosen_index, rejected_index, gap).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs = [
        (c_idx, r_idx, c_conf - r_conf)
        for c_idx, c_conf in chosen
        for r_idx, r_conf in rejected
    ]
    pairs.sort(key=lambda t: (-t[2], t[0], t[1]))
    return pairs[:k]


@dataclass
class PairBuildResult:
    pairs: list[PreferencePair]
    meta: TrainingMeta
    skipped: list[dict]
    samples: list[dict]

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_jsonl(out / "pairs.jsonl", [p.to_record() for p in self.pairs])
        write_jsonl(out / "samples.jsonl", self.samples)
        write_jsonl(out / "skipped.jsonl", self.skipped)
        _write_text(
            out / "training_meta.json",
            json.dumps(self.meta.to_record(), sort_keys=True) + "\n",
        )
        _write_text(
            out / "summary.txt",
            f"pairs = {len(self.pairs)}\n"
            f"skipped_questions = {len(self.skipped)}\n",
        )


def build_dpo_pairs(
    questions: Sequence[Question],
    backend,
    n: int = DEFAULT_PAIR_SAMPLES,
    k: int = DEFAULT_PAIRS_PER_QUESTION,
    temperature: float = 1.0,
    max_tokens: int = 1024,
    seed: Optional[int] = None,
    iteration: int = 1,
    parallelism: int = 1,
) -> PairBuildResult:
    """Sample n solutions per question, split by correctness, pair all
    chosen x rejected combinations, and keep the top-k by confidence gap.

    Questions with zero correct or zero incorrect solutions emit no pairs
    and are listed in the skip report; membership in a pair is decided by
    correctness, ranking purely by the confidence gap (which may be
    negative).
    """
    for q in questions:
        if q.gold_answer is None:
            raise DatasetError(f"question {q.id!r} has no gold answer")
    collected = collect_samples(
        questions,
        backend,
        n=n,
        temperature=temperature,
        max_tokens=max_tokens,
        seed=seed,
        reward_methods=("confidence",),
        parallelism=parallelism,
    )
    all_pairs: list[PreferencePair] = []
    skipped: list[dict] = []
    samples: list[dict] = []
    for qs in collected:
        samples.extend(qs.sample_records())
        if qs.error is not None:
            skipped.append({"question_id": qs.question.id, "reason": qs.error})
            continue
        confidences = qs.rewards["confidence"]
        chosen, rejected = [], []
        by_index: dict[int, ScoredSolution] = {}
        for sol, conf in zip(qs.solutions, confidences):
            by_index[sol.sample_index] = sol
            is_correct = (
                sol.answer is not None
                and answers_equivalent(sol.answer, qs.question.gold_answer)
            )
            (chosen if is_correct else rejected).append((sol.sample_index, conf.value))
        if not chosen or not rejected:
            skipped.append(
                {
                    "question_id": qs.question.id,
                    "reason": "no_correct_solutions" if not chosen else "no_incorrect_solutions",
                    "n_correct": len(chosen),
                    "n_incorrect": len(rejected),
                }
            )
            continue
        prompt = render_zero_shot(qs.question.problem)
        conf_by_index = {idx: value for idx, value in chosen + rejected}
        for c_idx, r_idx, gap in pair_candidates(chosen, rejected, k):
            all_pairs.append(
                PreferencePair(
                    question_id=qs.question.id,
                    prompt=prompt,
                    chosen_text=by_index[c_idx].text,
                    chosen_confidence=conf_by_index[c_idx],
                    rejected_text=by_index[r_idx].text,
                    rejected_confidence=conf_by_index[r_idx],
                    gap=gap,
                    iteration=iteration,
                )
            )
    meta = TrainingMeta(n=n, k=k)
    return PairBuildResult(pairs=all_pairs, meta=meta, skipped=skipped, samples=samples)


# ---------------------------------------------------------------------------
# Confidence-based data filtering
# ---------------------------------------------------------------------------


@dataclass
class FilterResult:
    records: list[dict]
    skipped: list[dict]
    mode: str

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_jsonl(out / "sft.jsonl", self.records)
        write_jsonl(out / "skipped.jsonl", self.skipped)
        _write_text(
            out / "summary.txt",
            f"mode = {self.mode}\n"
            f"records = {len(self.records)}\n"
            f"skipped_questions = {len(self.skipped)}\n",
        )


def filter_data(
    questions: Sequence[Question],
    samples: Sequence[SampleRecord],
    mode: str,
) -> FilterResult:
    """Per question emit the one verified-correct solution with the highest
    (mode="highest") or lowest (mode="lowest") confidence; ties go to the
    smallest sample index. Questions without a correct solution are omitted
    and counted."""
    if mode not in ("highest", "lowest"):
        raise ValueError(f"mode must be 'highest' or 'lowest', got {mode!r}")
    by_qid: dict[str, list[SampleRecord]] = {}
    known = {q.id for q in questions}
    for sample in samples:
        if sample.question_id not in known:
            raise DatasetError(f"sample references unknown question {sample.question_id!r}")
        by_qid.setdefault(sample.question_id, []).append(sample)
    records, skipped = [], []
    for question in questions:
        correct = [s for s in by_qid.get(question.id, []) if s.correct]
        if not correct:
            skipped.append({"question_id": question.id, "reason": "no_correct_solutions"})
            continue
        for s in correct:
            if "confidence" not in s.rewards:
                raise DatasetError(
                    f"sample {question.id!r}/{s.sample_index} has no confidence reward; "
                    "run the reward step first"
                )
        sign = -1.0 if mode == "highest" else 1.0
        pick = min(correct, key=lambda s: (sign * s.rewards["confidence"].value, s.sample_index))
        records.append(
            {
                "prompt": render_zero_shot(question.problem),
                "solution": pick.text,
                "meta": {
                    "question_id": question.id,
                    "sample_index": pick.sample_index,
                    "confidence": pick.rewards["confidence"].value,
                },
            }
        )
    return FilterResult(records=records, skipped=skipped, mode=mode)


# ---------------------------------------------------------------------------
# Correlation reporting
# ---------------------------------------------------------------------------


@dataclass
class CorrelationReport:
    pearson_r: float
    rows: list[tuple[str, float, float]]
    table: str

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "correlation.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "reasoning_score", "eval_score"])
            for label, x, y in self.rows:
                writer.writerow([label, x, y])
            writer.writerow(["pearson_r", f"{self.pearson_r:.6f}", ""])
        _write_text(out / "summary.txt", self.table)


def correlation_report(
    points: Sequence[tuple[float, float]],
    labels: Optional[Sequence[str]] = None,
) -> CorrelationReport:
    """Pearson correlation between (reasoning_score, eval_score) pairs plus a
    rendered table. Fewer than two points or a constant coordinate raises
    DegenerateSeriesError."""
    if len(points) < 2:
        raise DegenerateSeriesError(f"need at least 2 points, got {len(points)}")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    if min(xs) == max(xs):
        raise DegenerateSeriesError("reasoning_score is constant")
    if min(ys) == max(ys):
        raise DegenerateSeriesError("eval_score is constant")
    r = statistics.correlation(xs, ys)
    if labels is None:
        labels = [f"point-{i}" for i in range(len(points))]
    rows = [(label, x, y) for label, x, y in zip(labels, xs, ys)]
    width = max(5, *(len(label) for label in labels))
    lines = [f"{'label':<{width}}  reasoning_score  eval_score"]
    for label, x, y in rows:
        lines.append(f"{label:<{width}}  {x:>15.4f}  {y:>10.4f}")
    lines.append(f"pearson_r = {r:.6f}")
    return CorrelationReport(pearson_r=r, rows=rows, table="\n".join(lines) + "\n")
