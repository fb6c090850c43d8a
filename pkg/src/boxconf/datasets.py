"""Dataset records and JSONL file I/O.

File schemas (one JSON object per line):

* questions:  {"id", "problem", "gold_answer", "gold_solution"?, "subject"?, "level"?}
* bench:      {"id", "problem", "candidates": [{"text", "correct"}, ...]}
              with exactly one candidate flagged correct
* solutions:  {"question_id", "text", "sample_index"?}   (externally supplied)
* samples:    {"question_id", "sample_index", "text", "answer_raw"?,
               "answer_canonical"?, "correct", "rewards": {method: {"value", "valid"}}}
* points:     {"label"?, "reasoning_score", "eval_score"}

All output files are written with sorted keys and ASCII escapes so repeated
runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .answers import CanonicalAnswer, normalize_answer
from .errors import DatasetError, EmptyAnswerError
from .rewards import RewardScore


@dataclass
class Question:
    id: str
    problem: str
    gold_answer: Optional[CanonicalAnswer] = None
    gold_solution: Optional[str] = None
    subject: Optional[str] = None
    level: Optional[str] = None


@dataclass
class BenchCandidate:
    text: str
    correct: bool


@dataclass
class BenchItem:
    """One benchmark unit: a question with exactly one correct candidate solution."""

    question: Question
    candidates: list[BenchCandidate]

    @property
    def correct_index(self) -> int:
        return next(i for i, c in enumerate(self.candidates) if c.correct)


@dataclass
class SampleRecord:
    """One persisted sample, as read back from a samples file."""

    question_id: str
    sample_index: int
    text: str
    correct: bool
    answer_raw: Optional[str] = None
    answer_canonical: Optional[str] = None
    rewards: dict[str, RewardScore] = field(default_factory=dict)

    def answer(self) -> Optional[CanonicalAnswer]:
        if self.answer_canonical is None:
            return None
        return normalize_answer(self.answer_canonical)  # idempotent, so text survives


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc})")
    return records


def write_jsonl(path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=True) + "\n")


def load_questions(path) -> list[Question]:
    questions = []
    seen = set()
    for i, rec in enumerate(read_jsonl(path)):
        for key in ("id", "problem", "gold_answer"):
            if not rec.get(key):
                raise DatasetError(f"{path}: record {i} missing {key!r}")
        qid = str(rec["id"])
        if qid in seen:
            raise DatasetError(f"{path}: duplicate question id {qid!r}")
        seen.add(qid)
        try:
            gold = normalize_answer(str(rec["gold_answer"]))
        except EmptyAnswerError:
            raise DatasetError(f"{path}: question {qid!r} has an empty gold answer")
        questions.append(
            Question(
                id=qid,
                problem=rec["problem"],
                gold_answer=gold,
                gold_solution=rec.get("gold_solution"),
                subject=rec.get("subject"),
                level=rec.get("level"),
            )
        )
    if not questions:
        raise DatasetError(f"{path}: no questions")
    return questions


def load_bench(path, expected_candidates: Optional[int] = None) -> list[BenchItem]:
    """Load benchmark items, validating the one-correct-candidate contract.

    ``expected_candidates`` additionally pins the candidate count (10 for
    benchmark-shaped files); None skips the count check for small fixtures.
    """
    items = []
    seen = set()
    for i, rec in enumerate(read_jsonl(path)):
        qid = str(rec.get("id", ""))
        if not qid or not rec.get("problem") or "candidates" not in rec:
            raise DatasetError(f"{path}: record {i} needs id, problem, candidates")
        if qid in seen:
            raise DatasetError(f"{path}: duplicate item id {qid!r}")
        seen.add(qid)
        candidates = [
            BenchCandidate(text=c["text"], correct=bool(c["correct"]))
            for c in rec["candidates"]
        ]
        n_correct = sum(c.correct for c in candidates)
        if n_correct != 1:
            raise DatasetError(
                f"{path}: item {qid!r} flags {n_correct} candidates correct, expected exactly 1"
            )
        if expected_candidates is not None and len(candidates) != expected_candidates:
            raise DatasetError(
                f"{path}: item {qid!r} has {len(candidates)} candidates, expected {expected_candidates}"
            )
        if any(not c.text for c in candidates):
            raise DatasetError(f"{path}: item {qid!r} has an empty candidate text")
        items.append(BenchItem(question=Question(id=qid, problem=rec["problem"]), candidates=candidates))
    if not items:
        raise DatasetError(f"{path}: no bench items")
    return items


def load_external_solutions(path) -> list[dict]:
    """Load externally supplied solutions: {"question_id", "text", "sample_index"?}."""
    records = []
    for i, rec in enumerate(read_jsonl(path)):
        if not rec.get("question_id") or not rec.get("text"):
            raise DatasetError(f"{path}: record {i} needs question_id and text")
        records.append(
            {
                "question_id": str(rec["question_id"]),
                "text": rec["text"],
                "sample_index": int(rec.get("sample_index", i)),
            }
        )
    if not records:
        raise DatasetError(f"{path}: no solutions")
    return records


def sample_to_record(
    question_id: str,
    sample_index: int,
    text: str,
    correct: bool,
    answer_raw: Optional[str] = None,
    answer_canonical: Optional[str] = None,
    rewards: Optional[dict[str, RewardScore]] = None,
) -> dict:
    record = {
        "question_id": question_id,
        "sample_index": sample_index,
        "text": text,
        "correct": correct,
        "rewards": {
            method: {"value": score.value, "valid": score.valid}
            for method, score in (rewards or {}).items()
        },
    }
    if answer_raw is not None:
        record["answer_raw"] = answer_raw
    if answer_canonical is not None:
        record["answer_canonical"] = answer_canonical
    return record


def load_samples(path) -> list[SampleRecord]:
    samples = []
    for i, rec in enumerate(read_jsonl(path)):
        if "question_id" not in rec or "sample_index" not in rec or "text" not in rec:
            raise DatasetError(f"{path}: record {i} needs question_id, sample_index, text")
        rewards = {
            method: RewardScore(method=method, value=float(r["value"]), valid=bool(r["valid"]))
            for method, r in rec.get("rewards", {}).items()
        }
        samples.append(
            SampleRecord(
                question_id=str(rec["question_id"]),
                sample_index=int(rec["sample_index"]),
                text=rec["text"],
                correct=bool(rec.get("correct", False)),
                answer_raw=rec.get("answer_raw"),
                answer_canonical=rec.get("answer_canonical"),
                rewards=rewards,
            )
        )
    if not samples:
        raise DatasetError(f"{path}: no samples")
    return samples


def load_points(path) -> tuple[list[tuple[float, float]], list[str]]:
    """Load correlation points; returns (points, labels)."""
    points, labels = [], []
    for i, rec in enumerate(read_jsonl(path)):
        if "reasoning_score" not in rec or "eval_score" not in rec:
            raise DatasetError(f"{path}: record {i} needs reasoning_score and eval_score")
        points.append((float(rec["reasoning_score"]), float(rec["eval_score"])))
        labels.append(str(rec.get("label", f"point-{i}")))
    return points, labels
