"""Per-token logprobs and character-span alignment.

Backends hand us a token sequence that reconstructs the completion text;
here we locate which tokens produced a given character span (the boxed
answer) and turn their logprobs into probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .answers import AnswerSpan
from .errors import EmptySpanError, TokenTextMismatchError

# Providers occasionally report float noise slightly above logprob 0.
_LOGPROB_SLACK = 1e-6


@dataclass(frozen=True)
class TokenLogprob:
    """One completion token: surface text, ln-probability, char extent."""

    text: str
    logprob: float
    char_start: int
    char_end: int


@dataclass(frozen=True)
class TokenSpan:
    """Strictly increasing token positions into a completion's token list."""

    indices: tuple[int, ...]


def build_tokens(
    texts: Sequence[str],
    logprobs: Sequence[float],
    offsets: Optional[Sequence[int]] = None,
    completion: Optional[str] = None,
) -> list[TokenLogprob]:
    """Assemble TokenLogprobs with contiguous character extents.

    Extents are the cumulative lengths of the token texts. When the provider
    supplied character offsets they are checked against that reconstruction
    (after rebasing so the first token starts at 0); when ``completion`` is
    given the concatenated token texts must reproduce it exactly. Either
    mismatch is a backend inconsistency and raises TokenTextMismatchError.
    """
    if len(texts) != len(logprobs):
        raise ValueError(f"{len(texts)} token texts vs {len(logprobs)} logprobs")
    cursor = 0
    out: list[TokenLogprob] = []
    base = offsets[0] if offsets else 0
    for i, (text, lp) in enumerate(zip(texts, logprobs)):
        if lp is None:
            raise TokenTextMismatchError(f"token {i} has no logprob")
        if lp > _LOGPROB_SLACK:
            raise ValueError(f"token {i} has logprob {lp} > 0")
        lp = min(float(lp), 0.0)
        if offsets is not None and offsets[i] - base != cursor:
            raise TokenTextMismatchError(
                f"token {i} offset {offsets[i] - base} != reconstructed {cursor}"
            )
        out.append(TokenLogprob(text=text, logprob=lp, char_start=cursor, char_end=cursor + len(text)))
        cursor += len(text)
    if completion is not None and "".join(texts) != completion:
        raise TokenTextMismatchError(
            "token texts do not reconstruct the completion text"
        )
    return out


def align_answer_tokens(tokens: Sequence[TokenLogprob], span: AnswerSpan) -> TokenSpan:
    """Indices of every token whose extent intersects the answer span.

    Overlap (not containment): a token covering ``{16`` still carries
    probability mass for the answer ``1600`` and is included. Raises
    EmptySpanError when nothing overlaps (e.g. the span of ``\\boxed{}``).
    """
    if not tokens:
        raise EmptySpanError("no tokens to align against")
    total_end = tokens[-1].char_end
    if span.char_start < 0 or span.char_end > total_end:
        raise ValueError(
            f"span [{span.char_start}, {span.char_end}) outside text of length {total_end}"
        )
    indices = tuple(
        i
        for i, tok in enumerate(tokens)
        if tok.char_start < span.char_end and span.char_start < tok.char_end
    )
    if not indices:
        raise EmptySpanError(
            f"no token overlaps span [{span.char_start}, {span.char_end})"
        )
    return TokenSpan(indices=indices)


def token_probabilities(tokens: Sequence[TokenLogprob], span: TokenSpan) -> list[float]:
    """exp(logprob) for each token in the span, order preserved."""
    for i in span.indices:
        if i < 0 or i >= len(tokens):
            raise ValueError(f"token index {i} out of range for {len(tokens)} tokens")
    return [math.exp(tokens[i].logprob) for i in span.indices]
