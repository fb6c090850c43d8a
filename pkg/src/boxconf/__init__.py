"""boxconf: training-free confidence rewards over boxed final answers.

The reward of a solution is the mean probability the model assigned to the
tokens of its final boxed answer. On top of that primitive: weighted
self-consistency and best-of-N selection, pick-best-candidate reward
benchmarking, confidence-gap preference-pair construction, and
confidence-based data filtering.
"""

from .answers import (
    AnswerSpan,
    CanonicalAnswer,
    VerifyResult,
    answers_equivalent,
    extract_boxed,
    normalize_answer,
    verify,
)
from .backend import GenerationRequest, HttpBackend, MockBackend
from .cache import ResponseCache, cache_key
from .datasets import BenchItem, Question, SampleRecord
from .dominance import DominanceReport, ToyModel, check_requirement, solve_probability_of_correct
from .pipelines import (
    PreferencePair,
    TrainingMeta,
    build_dpo_pairs,
    correlation_report,
    eval_reward_bench,
    eval_task_accuracy,
    filter_data,
)
from .rewards import (
    RewardScore,
    ScoredSolution,
    attach_answer,
    confidence,
    generative_verifier_reward,
    judge_reward,
    perplexity_reward,
    score_external_solution,
)
from .selection import (
    SampleSet,
    VoteOutcome,
    best_of_n,
    normalize_rewards,
    self_consistency,
    weighted_vote,
)
from .tokens import TokenLogprob, TokenSpan, align_answer_tokens, build_tokens, token_probabilities

__version__ = "0.1.0"
