"""Exact enumeration checks on finite toy models.

A ToyModel is a finite distribution over rationales with, per rationale, a
conditional distribution over a finite answer set containing the gold
answer. For two models sharing the same outcome space we check, with exact
rational arithmetic:

* hypothesis — model 2 answers correctly with higher probability than
  model 1;
* requirement — the expected conditional answer probability of model 2
  exceeds model 1's over correct outcomes and falls below it over incorrect
  ones (what a better reward function must do).

Expectations are taken over the shared outcome space, weighted by the
shared rationale marginal with an indicator on correct/incorrect answers,
which makes the identity ``e_plus_diff == p_correct_2 - p_correct_1`` exact
rather than approximate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Sequence, Union

from .errors import InvalidDistributionError, MismatchedSupportError

_TOL = Fraction(1, 10**12)

Probability = Union[int, float, str, Fraction]


def _to_fraction(value: Probability) -> Fraction:
    # floats are taken at decimal face value (0.9 means 9/10, not the nearest
    # binary double); strings accept exact forms like "1/3"
    if isinstance(value, float):
        frac = Fraction(Decimal(str(value)))
    else:
        frac = Fraction(value)
    if frac < 0 or frac > 1:
        raise InvalidDistributionError(f"probability {value!r} outside [0, 1]")
    return frac


def _check_sums_to_one(probs: Sequence[Fraction], what: str) -> None:
    total = sum(probs, start=Fraction(0))
    if abs(total - 1) > _TOL:
        raise InvalidDistributionError(f"{what} sums to {float(total)}, not 1")


@dataclass(frozen=True)
class ToyModel:
    """Finite rationale marginal + per-rationale answer conditionals + gold index."""

    rationale_probs: tuple[Fraction, ...]
    answer_table: tuple[tuple[Fraction, ...], ...]
    gold_index: int

    @classmethod
    def build(
        cls,
        rationale_probs: Sequence[Probability],
        answer_table: Sequence[Sequence[Probability]],
        gold_index: int,
    ) -> "ToyModel":
        if not rationale_probs or len(answer_table) != len(rationale_probs):
            raise InvalidDistributionError(
                "answer_table must have one row per rationale probability"
            )
        marginal = tuple(_to_fraction(p) for p in rationale_probs)
        _check_sums_to_one(marginal, "rationale marginal")
        rows = tuple(tuple(_to_fraction(p) for p in row) for row in answer_table)
        n_answers = len(rows[0])
        if n_answers == 0 or any(len(row) != n_answers for row in rows):
            raise InvalidDistributionError("answer_table rows must share one answer set")
        for i, row in enumerate(rows):
            _check_sums_to_one(row, f"conditional row {i}")
        if not 0 <= gold_index < n_answers:
            raise InvalidDistributionError(
                f"gold_index {gold_index} outside answer set of size {n_answers}"
            )
        return cls(rationale_probs=marginal, answer_table=rows, gold_index=gold_index)

    @property
    def n_answers(self) -> int:
        return len(self.answer_table[0])


@dataclass(frozen=True)
class DominanceReport:
    p_correct_1: Fraction
    p_correct_2: Fraction
    e_plus_diff: Fraction
    e_minus_diff: Fraction
    hypothesis_holds: bool
    requirement_holds: bool


def solve_probability_of_correct(model: ToyModel) -> Fraction:
    """Exact P(final answer == gold): sum over rationales of marginal times
    the gold conditional."""
    return sum(
        (p * row[model.gold_index] for p, row in zip(model.rationale_probs, model.answer_table)),
        start=Fraction(0),
    )


def check_requirement(m1: ToyModel, m2: ToyModel) -> DominanceReport:
    """Enumerate both difference expectations exactly and test the strict signs.

    ``hypothesis_holds`` iff model 2's probability of answering correctly
    strictly exceeds model 1's. ``requirement_holds`` iff the conditional-
    probability difference is strictly positive in expectation over correct
    outcomes and strictly negative over incorrect ones. The construction
    guarantees e_plus_diff == p_correct_2 - p_correct_1 (asserted here) and
    e_minus_diff == -e_plus_diff, so on this outcome space the hypothesis
    and the requirement coincide.
    """
    if (
        len(m1.rationale_probs) != len(m2.rationale_probs)
        or m1.n_answers != m2.n_answers
        or m1.gold_index != m2.gold_index
    ):
        raise MismatchedSupportError(
            "models must share rationale count, answer set size, and gold index"
        )
    if m1.rationale_probs != m2.rationale_probs:
        raise MismatchedSupportError(
            "models must share the rationale marginal; the difference expectations "
            "are weighted by it"
        )
    marginal = m1.rationale_probs
    gold = m1.gold_index
    e_plus = Fraction(0)
    e_minus = Fraction(0)
    for p, row1, row2 in zip(marginal, m1.answer_table, m2.answer_table):
        for a in range(m1.n_answers):
            diff = p * (row2[a] - row1[a])
            if a == gold:
                e_plus += diff
            else:
                e_minus += diff
    p1 = solve_probability_of_correct(m1)
    p2 = solve_probability_of_correct(m2)
    if abs(e_plus - (p2 - p1)) > _TOL:
        raise AssertionError("enumeration violated e_plus_diff == p2 - p1")
    return DominanceReport(
        p_correct_1=p1,
        p_correct_2=p2,
        e_plus_diff=e_plus,
        e_minus_diff=e_minus,
        hypothesis_holds=p2 > p1,
        requirement_holds=e_plus > 0 and e_minus < 0,
    )


def load_toy_models(path) -> list[ToyModel]:
    """Load models from JSONL: {"rationales": [{"p": ...}], "table": [[...]],
    "gold_index": ...}. Probabilities may be numbers or exact strings ("1/3")."""
    models = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            try:
                models.append(
                    ToyModel.build(
                        rationale_probs=[r["p"] for r in rec["rationales"]],
                        answer_table=rec["table"],
                        gold_index=int(rec["gold_index"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise InvalidDistributionError(f"{path}:{lineno}: malformed toy model ({exc})")
    if not models:
        raise InvalidDistributionError(f"{path}: no toy models")
    return models
