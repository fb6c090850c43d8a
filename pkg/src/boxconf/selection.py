"""Answer selection over a question's sample set.

Three strategies: plain self-consistency (majority vote over final
answers), reward-weighted self-consistency (each sample votes with its
per-question min-max normalized reward), and best-of-N (argmax reward).
Outcomes depend only on (answers, weights, sample_index), never on list
order, and all ties break toward the smallest sample index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .answers import CanonicalAnswer, answers_equivalent
from .datasets import Question
from .errors import AllAnswerlessError, NoValidRewardError
from .rewards import RewardScore, ScoredSolution


@dataclass
class SampleSet:
    """A question's sampled solutions plus (optionally) one reward per solution."""

    question: Question
    solutions: list[ScoredSolution]
    rewards: Optional[list[RewardScore]] = None

    def __post_init__(self):
        if not self.solutions:
            raise ValueError("SampleSet needs at least one solution")
        if self.rewards is not None and len(self.rewards) != len(self.solutions):
            raise ValueError("rewards must align 1:1 with solutions")


@dataclass
class VoteOutcome:
    winner: CanonicalAnswer
    class_weights: dict[str, float] = field(default_factory=dict)
    winner_first_index: int = 0


def normalize_rewards(values: Sequence[Union[RewardScore, float]]) -> list[float]:
    """Min-max normalize reward values to [0, 1] voting weights.

    Invalid rewards get weight 0 and are excluded from the min/max; when all
    valid values are equal every valid entry gets weight 1 (uniform
    fallback, so degenerate rewards reduce to plain majority voting).
    """
    if not values:
        raise ValueError("normalize_rewards needs at least one value")
    pairs = [
        (v.value, v.valid) if isinstance(v, RewardScore) else (float(v), True)
        for v in values
    ]
    valid_vals = [v for v, ok in pairs if ok]
    if not valid_vals:
        return [0.0] * len(pairs)
    lo, hi = min(valid_vals), max(valid_vals)
    if hi == lo:
        return [1.0 if ok else 0.0 for _, ok in pairs]
    return [(v - lo) / (hi - lo) if ok else 0.0 for v, ok in pairs]


def weighted_vote(sample_set: SampleSet, weights: Sequence[float]) -> VoteOutcome:
    """Group samples by equivalent final answer and sum their weights per class.

    Answerless solutions abstain (no class, no weight). Winner is the class
    with maximal total weight; exact ties go to the class containing the
    smallest sample index.
    """
    if len(weights) != len(sample_set.solutions):
        raise ValueError("weights must align 1:1 with solutions")
    classes: list[dict] = []
    ordered = sorted(zip(sample_set.solutions, weights), key=lambda p: p[0].sample_index)
    for sol, w in ordered:
        if sol.answer is None:
            continue
        for cls in classes:
            if answers_equivalent(cls["rep"], sol.answer):
                cls["weight"] += w
                break
        else:
            classes.append({"rep": sol.answer, "weight": float(w), "first_index": sol.sample_index})
    if not classes:
        raise AllAnswerlessError(
            f"question {sample_set.question.id!r}: no solution produced an extractable answer"
        )
    best = min(classes, key=lambda c: (-c["weight"], c["first_index"]))
    return VoteOutcome(
        winner=best["rep"],
        class_weights={c["rep"].text: c["weight"] for c in classes},
        winner_first_index=best["first_index"],
    )


def self_consistency(sample_set: SampleSet) -> VoteOutcome:
    """Majority vote: weighted_vote with all weights 1."""
    return weighted_vote(sample_set, [1.0] * len(sample_set.solutions))


def best_of_n(sample_set: SampleSet) -> ScoredSolution:
    """The solution with maximal valid reward; ties go to the smallest sample index."""
    if sample_set.rewards is None:
        raise ValueError("best_of_n needs rewards")
    candidates = [
        (score.value, sol.sample_index, sol)
        for sol, score in zip(sample_set.solutions, sample_set.rewards)
        if score.valid
    ]
    if not candidates:
        raise NoValidRewardError(
            f"question {sample_set.question.id!r}: no valid reward among {len(sample_set.solutions)} solutions"
        )
    _, _, winner = min(candidates, key=lambda t: (-t[0], t[1]))
    return winner
