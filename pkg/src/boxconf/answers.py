"""Final-answer extraction, normalization, and equivalence.

The contract: a solution states its final answer inside the last
``\\boxed{...}`` of the text. We pull that content out (with its character
span, which token alignment needs later), normalize it into a canonical
string plus an optional exact rational value, and compare canonical answers
either textually or by exact rational equality. No floats, no CAS.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import EmptyAnswerError, NoAnswerError, UnbalancedBracesError

BOXED_MARKER = "\\boxed{"


@dataclass(frozen=True)
class AnswerSpan:
    """Content of a ``\\boxed{...}`` plus its [char_start, char_end) location.

    ``raw`` is the inner content only (braces excluded) and has balanced
    braces. ``raw`` may be empty for a literal ``\\boxed{}``; downstream
    stages reject that case (EmptyAnswer / EmptySpan).
    """

    raw: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class CanonicalAnswer:
    """A normalized answer string, with an exact rational value when one parses.

    ``numeric`` is a ``Fraction`` for pure numbers (integers, decimals,
    ``p/q``, simple ``\\frac{p}{q}``) and None otherwise.
    """

    text: str
    numeric: Optional[Fraction] = None


@dataclass(frozen=True)
class VerifyResult:
    correct: bool
    span: Optional[AnswerSpan] = None
    reason: Optional[str] = None


def extract_boxed(solution_text: str) -> AnswerSpan:
    """Return the content of the LAST ``\\boxed{...}`` in ``solution_text``.

    Brace matching tolerates nested balanced braces, so
    ``\\boxed{\\frac{1}{4}}`` yields ``\\frac{1}{4}``. Raises NoAnswerError
    when no marker is present and UnbalancedBracesError when the last opener
    never closes (truncated output must not silently become an answer).
    """
    if not solution_text:
        raise ValueError("solution_text must be non-empty")
    idx = solution_text.rfind(BOXED_MARKER)
    if idx < 0:
        raise NoAnswerError("no \\boxed{ found in solution text")
    start = idx + len(BOXED_MARKER)
    depth = 1
    for pos in range(start, len(solution_text)):
        ch = solution_text[pos]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return AnswerSpan(raw=solution_text[start:pos], char_start=start, char_end=pos)
    raise UnbalancedBracesError(
        f"\\boxed{{ at char {idx} has no matching closing brace"
    )


_VAR_PREFIX = re.compile(r"^[A-Za-z]\s*=\s*")
_TEXT_WRAP = re.compile(r"\\text\{([^{}]*)\}")
_FRAC_PQ = re.compile(r"^(-?)\\frac\{(-?\d+)\}\{(-?\d+)\}$")


def _brace_frac_args(text: str) -> str:
    """Rewrite bare single-character \\frac arguments: \\frac14 -> \\frac{1}{4}."""
    parts = text.split("\\frac")
    out = parts[0]
    for part in parts[1:]:
        out += "\\frac"
        if not part or part[0] == "{":
            out += part
            continue
        first, rest = part[0], part[1:]
        if not rest:
            out += "{" + first + "}"
        elif rest[0] == "{":
            out += "{" + first + "}" + rest
        else:
            out += "{" + first + "}{" + rest[0] + "}" + rest[1:]
    return out


def _normalize_once(text: str) -> str:
    text = text.strip()
    text = text.strip("$").strip()
    for junk in ("\\left", "\\right", "\\!"):
        text = text.replace(junk, "")
    text = text.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    text = _brace_frac_args(text)
    while _TEXT_WRAP.search(text):
        text = _TEXT_WRAP.sub(r"\1", text)
    text = text.rstrip(".")
    while True:
        m = _VAR_PREFIX.match(text)
        if not m:
            break
        text = text[m.end():]
    text = re.sub(r"\s+", "", text)
    return text


def _parse_rational(text: str) -> Optional[Fraction]:
    m = _FRAC_PQ.match(text)
    if m:
        try:
            value = Fraction(int(m.group(2)), int(m.group(3)))
        except ZeroDivisionError:
            return None
        return -value if m.group(1) else value
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


def normalize_answer(raw: str) -> CanonicalAnswer:
    """Normalize a raw answer string into its canonical form.

    Applies, in order: whitespace trim; surrounding ``$`` removal;
    ``\\left``/``\\right``/``\\!`` removal; ``\\dfrac``/``\\tfrac`` ->
    ``\\frac``; bracing of bare ``\\frac`` arguments; ``\\text{...}``
    unwrapping and trailing-period removal; leading ``<var>=`` removal;
    internal whitespace removal. The pass is iterated to a fixed point so
    normalization is idempotent (e.g. a ``$`` exposed by ``\\text{$5$}``
    unwrapping still gets stripped). Finally the text is parsed as an exact
    rational when it is a pure number, ``p/q``, or simple ``\\frac{p}{q}``.
    """
    text = raw.strip()
    if not text:
        raise EmptyAnswerError("answer is empty after whitespace strip")
    for _ in range(10):  # fixed point; each pass only shrinks or stabilizes
        new = _normalize_once(text)
        if new == text:
            break
        text = new
    if not text:
        raise EmptyAnswerError(f"answer {raw!r} is empty after normalization")
    return CanonicalAnswer(text=text, numeric=_parse_rational(text))


def answers_equivalent(x: CanonicalAnswer, y: CanonicalAnswer) -> bool:
    """True iff canonical texts match, or both parse to the same exact rational."""
    if x.text == y.text:
        return True
    return x.numeric is not None and y.numeric is not None and x.numeric == y.numeric


def verify(solution_text: str, gold: CanonicalAnswer) -> VerifyResult:
    """Decide whether a solution's boxed final answer equals the gold answer.

    Never raises: extraction/normalization failures yield correct=False with
    the failure reason attached.
    """
    try:
        span = extract_boxed(solution_text)
    except NoAnswerError:
        return VerifyResult(correct=False, span=None, reason="no_answer")
    except UnbalancedBracesError:
        return VerifyResult(correct=False, span=None, reason="unbalanced_braces")
    except ValueError:
        return VerifyResult(correct=False, span=None, reason="empty_text")
    try:
        candidate = normalize_answer(span.raw)
    except EmptyAnswerError:
        return VerifyResult(correct=False, span=span, reason="empty_answer")
    return VerifyResult(correct=answers_equivalent(candidate, gold), span=span)
