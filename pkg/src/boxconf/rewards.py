"""Training-free reward functions over scored solutions.

Four rewards, all mapped into [0, 1] so selection and reporting share one
scale:

* ``confidence`` — arithmetic mean of the model's probabilities for the
  tokens that constitute the boxed final answer.
* ``perplexity`` — exp(mean logprob) over ALL completion tokens (inverse
  perplexity, higher is better).
* ``generative_verifier`` — probability of the Yes/No verdict token the
  model emits when asked to grade the solution.
* ``judge`` — additive 5-point self-scoring, divided by 5.

Invalid scores carry value 0.0 with ``valid=False``; validity always travels
with the value so downstream consumers can distinguish "scored 0" from
"could not score".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .answers import (
    AnswerSpan,
    CanonicalAnswer,
    EmptyAnswerError,
    NoAnswerError,
    UnbalancedBracesError,
    extract_boxed,
    normalize_answer,
)
from .errors import EmptySpanError
from .prompts import render_judge, render_verifier, render_zero_shot
from .tokens import TokenLogprob, align_answer_tokens, token_probabilities

if TYPE_CHECKING:
    from .datasets import Question

REWARD_METHODS = ("confidence", "perplexity", "generative_verifier", "judge")

# Decoding settings for the verifier/judge calls: greedy for determinism.
CRITIC_TEMPERATURE = 0.0
CRITIC_MAX_TOKENS = 1024


@dataclass
class ScoredSolution:
    """A solution text plus the per-token logprobs that produced it.

    ``source`` is "generated" for sampled completions and "external" for
    supplied texts scored teacher-forced. ``answer_span``/``answer`` are
    filled by :func:`attach_answer`; ``answer_error`` records why they are
    absent when extraction failed.
    """

    question_id: str
    text: str
    tokens: list[TokenLogprob] = field(default_factory=list)
    sample_index: int = 0
    source: str = "generated"
    answer_span: Optional[AnswerSpan] = None
    answer: Optional[CanonicalAnswer] = None
    answer_error: Optional[str] = None


@dataclass(frozen=True)
class RewardScore:
    method: str
    value: float
    valid: bool = True
    detail: Optional[str] = None


def attach_answer(sol: ScoredSolution) -> ScoredSolution:
    """Locate and normalize the boxed answer of ``sol`` in place.

    Extraction or normalization failures leave ``answer`` absent and store
    the reason; they never raise.
    """
    try:
        span = extract_boxed(sol.text)
    except NoAnswerError:
        sol.answer_error = "no_answer"
        return sol
    except UnbalancedBracesError:
        sol.answer_error = "unbalanced_braces"
        return sol
    except ValueError:
        sol.answer_error = "empty_text"
        return sol
    sol.answer_span = span
    try:
        sol.answer = normalize_answer(span.raw)
    except EmptyAnswerError:
        sol.answer_error = "empty_answer"
    return sol


def _invalid(method: str, reason: str) -> RewardScore:
    return RewardScore(method=method, value=0.0, valid=False, detail=reason)


def confidence(sol: ScoredSolution) -> RewardScore:
    """Mean probability of the answer-span tokens.

    Depends only on the tokens overlapping the boxed answer; every other
    token's logprob is irrelevant.
    """
    if sol.answer_span is None:
        return _invalid("confidence", sol.answer_error or "no_answer")
    try:
        span = align_answer_tokens(sol.tokens, sol.answer_span)
    except EmptySpanError:
        return _invalid("confidence", "empty_span")
    if sol.answer is None:  # span exists but normalizes to nothing, e.g. \boxed{$}
        return _invalid("confidence", sol.answer_error or "empty_answer")
    probs = token_probabilities(sol.tokens, span)
    return RewardScore(method="confidence", value=math.fsum(probs) / len(probs))


def perplexity_reward(sol: ScoredSolution) -> RewardScore:
    """Inverse perplexity of the whole completion: exp(mean logprob) in (0, 1]."""
    if not sol.tokens:
        raise ValueError("perplexity_reward needs a non-empty token sequence")
    mean_lp = math.fsum(t.logprob for t in sol.tokens) / len(sol.tokens)
    return RewardScore(method="perplexity", value=math.exp(mean_lp))


def _verdict_probability(critique: ScoredSolution) -> tuple[str, float]:
    span = extract_boxed(critique.text)
    token_span = align_answer_tokens(critique.tokens, span)
    probs = token_probabilities(critique.tokens, token_span)
    return span.raw.strip().lower(), math.fsum(probs) / len(probs)


def generative_verifier_reward(backend, question: "Question", sol: ScoredSolution) -> RewardScore:
    """Ask the backend to grade the solution; reward from the verdict token.

    The verdict is the boxed X of ``Verification: \\boxed{X}``. Yes with
    token probability p scores p; No scores 1 - p; anything else is invalid.
    Backend errors propagate.
    """
    from .backend import GenerationRequest  # local import to avoid a cycle

    prompt = render_verifier(question.problem, sol.text)
    req = GenerationRequest(
        prompt=prompt, n=1, temperature=CRITIC_TEMPERATURE, max_tokens=CRITIC_MAX_TOKENS
    )
    critique = backend.generate(req)[0]
    try:
        verdict, prob = _verdict_probability(critique)
    except (NoAnswerError, UnbalancedBracesError, EmptySpanError, ValueError):
        return _invalid("generative_verifier", "no_verdict")
    if verdict == "yes":
        value = prob
    elif verdict == "no":
        value = 1.0 - prob
    else:
        return _invalid("generative_verifier", f"verdict_not_yes_no:{verdict!r}")
    return RewardScore(
        method="generative_verifier",
        value=value,
        detail=f"verdict={verdict} p={prob:.6f}",
    )


_SCORE_RE = re.compile(r"Score:\s*\\boxed\{\s*(-?\d+)\s*\}")


def judge_reward(backend, question: "Question", sol: ScoredSolution) -> RewardScore:
    """Additive 5-point judging: parse N from ``Score: \\boxed{N}``, reward N/5."""
    from .backend import GenerationRequest

    prompt = render_judge(question.problem, sol.text)
    req = GenerationRequest(
        prompt=prompt, n=1, temperature=CRITIC_TEMPERATURE, max_tokens=CRITIC_MAX_TOKENS
    )
    critique = backend.generate(req)[0]
    matches = _SCORE_RE.findall(critique.text)
    if not matches:
        return _invalid("judge", "no_score")
    points = int(matches[-1])
    if not 0 <= points <= 5:
        return _invalid("judge", f"score_out_of_range:{points}")
    return RewardScore(method="judge", value=points / 5.0, detail=f"points={points}")


def score_external_solution(backend, question: "Question", solution_text: str) -> ScoredSolution:
    """Teacher-force an externally supplied solution to obtain its token probabilities.

    The text is scored under the zero-shot solving prompt, exactly as if the
    model had produced it, so ``confidence`` of external candidates is
    commensurable with generated ones. Raises NoScoringError (from the
    backend) when the endpoint cannot return logprobs for supplied text.
    """
    if not solution_text:
        raise ValueError("solution_text must be non-empty")
    prompt = render_zero_shot(question.problem)
    tokens = backend.score(prompt, solution_text)
    sol = ScoredSolution(
        question_id=question.id,
        text=solution_text,
        tokens=tokens,
        sample_index=0,
        source="external",
    )
    return attach_answer(sol)


def compute_reward(method: str, backend, question: "Question", sol: ScoredSolution) -> RewardScore:
    """Dispatch a reward method by name."""
    if method == "confidence":
        return confidence(sol)
    if method == "perplexity":
        return perplexity_reward(sol)
    if method == "generative_verifier":
        return generative_verifier_reward(backend, question, sol)
    if method == "judge":
        return judge_reward(backend, question, sol)
    raise ValueError(f"unknown reward method {method!r}")
