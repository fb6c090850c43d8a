"""Answer extraction, normalization, and equivalence."""

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxconf.answers import (
    CanonicalAnswer,
    answers_equivalent,
    extract_boxed,
    normalize_answer,
    verify,
)
from boxconf.errors import EmptyAnswerError, NoAnswerError, UnbalancedBracesError

# --- extract_boxed ----------------------------------------------------------


def test_extract_simple():
    text = "Therefore, the solution for x is \\boxed{1600}."
    span = extract_boxed(text)
    assert span.raw == "1600"
    assert text[span.char_start : span.char_end] == "1600"


def test_extract_nested_braces():
    span = extract_boxed("The final answer is: $\\boxed{\\frac{1}{4}}$")
    assert span.raw == "\\frac{1}{4}"


def test_extract_last_occurrence_wins():
    assert extract_boxed("a \\boxed{1} then \\boxed{2}").raw == "2"


def test_extract_no_box():
    with pytest.raises(NoAnswerError):
        extract_boxed("no box here")


def test_extract_unbalanced():
    with pytest.raises(UnbalancedBracesError):
        extract_boxed("truncated: \\boxed{\\frac{1}{4}")


def test_extract_empty_text_rejected():
    with pytest.raises(ValueError):
        extract_boxed("")


def test_extract_empty_content():
    span = extract_boxed("nothing in \\boxed{} at all")
    assert span.raw == ""
    assert span.char_start == span.char_end


_PLAIN = st.text(
    alphabet=st.characters(blacklist_characters="{}\\", min_codepoint=32, max_codepoint=0x24F),
    max_size=8,
)
_BALANCED = st.recursive(
    _PLAIN,
    lambda inner: st.builds(lambda a, b, c: a + "{" + b + "}" + c, inner, inner, inner),
    max_leaves=5,
)


@given(_BALANCED)
def test_extract_round_trip(payload):
    span = extract_boxed("prefix \\boxed{" + payload + "} suffix")
    assert span.raw == payload


@given(_BALANCED)
def test_extracted_span_addresses_raw(payload):
    text = "lead-in \\boxed{" + payload + "} tail"
    span = extract_boxed(text)
    assert text[span.char_start : span.char_end] == span.raw


def test_round_trip_bulk_random_balanced():
    """1000 generated brace-balanced payloads (backslashes allowed, but no
    inner \\boxed, which would win the last-box rule)."""
    rng = random.Random(20240601)
    alphabet = "abcxyz0123456789 +-*/\\$.,^_"

    def balanced(depth=0):
        parts = []
        for _ in range(rng.randint(1, 3)):
            if depth < 3 and rng.random() < 0.35:
                parts.append("{" + balanced(depth + 1) + "}")
            else:
                parts.append("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 6))))
        return "".join(parts)

    checked = 0
    while checked < 1000:
        payload = balanced()
        if "\\boxed" in payload:
            continue
        assert extract_boxed("\\boxed{" + payload + "}").raw == payload
        checked += 1


# --- normalize_answer -------------------------------------------------------


@pytest.mark.parametrize(
    "raw, text, numeric",
    [
        ("\\dfrac14", "\\frac{1}{4}", Fraction(1, 4)),
        (" 1600 ", "1600", Fraction(1600)),
        ("\\left(3, \\frac{\\pi}{2}\\right)", "(3,\\frac{\\pi}{2})", None),
        ("$\\frac{1}{2}$", "\\frac{1}{2}", Fraction(1, 2)),
        ("\\tfrac{3}{4}", "\\frac{3}{4}", Fraction(3, 4)),
        ("0.25", "0.25", Fraction(1, 4)),
        ("-3/4", "-3/4", Fraction(-3, 4)),
        ("x = 5", "5", Fraction(5)),
        ("1600.", "1600", Fraction(1600)),
        ("\\text{east}", "east", None),
        ("\\frac1{72}", "\\frac{1}{72}", Fraction(1, 72)),
        ("-\\frac{2}{3}", "-\\frac{2}{3}", Fraction(-2, 3)),
        ("2^{10}", "2^{10}", None),
    ],
)
def test_normalize_cases(raw, text, numeric):
    got = normalize_answer(raw)
    assert got.text == text
    assert got.numeric == numeric


def test_normalize_empty():
    with pytest.raises(EmptyAnswerError):
        normalize_answer("   ")


def test_normalize_only_junk_becomes_empty():
    with pytest.raises(EmptyAnswerError):
        normalize_answer("$ $")


def test_normalize_unwraps_text_then_strips_dollars():
    # the fixed-point pass must re-strip what unwrapping exposes
    assert normalize_answer("\\text{$5$}").text == "5"


@given(st.text(min_size=1, max_size=30))
def test_normalize_idempotent(raw):
    try:
        once = normalize_answer(raw)
    except EmptyAnswerError:
        return
    again = normalize_answer(once.text)
    assert again.text == once.text
    assert again.numeric == once.numeric


def test_numeric_rerender_stays_equivalent():
    for raw in ["0.25", "\\frac{1}{4}", "-3/4", "1600"]:
        canonical = normalize_answer(raw)
        rerendered = normalize_answer(str(canonical.numeric))
        assert answers_equivalent(canonical, rerendered)


# --- answers_equivalent -----------------------------------------------------


def test_equivalent_dfrac_forms():
    assert answers_equivalent(normalize_answer("\\frac{1}{4}"), normalize_answer("\\dfrac14"))


def test_not_equivalent_1602_1600():
    assert not answers_equivalent(normalize_answer("1602"), normalize_answer("1600"))


def test_equivalent_decimal_vs_frac():
    # independent oracle: parse both sides as exact rationals
    assert Fraction("0.25") == Fraction(1, 4)
    assert answers_equivalent(normalize_answer("0.25"), normalize_answer("\\frac{1}{4}"))


_POOL = ["1600", "1602", "0.25", "\\frac{1}{4}", "\\dfrac14", "x=5", "(3,\\frac{\\pi}{2})", "-7"]


@given(st.sampled_from(_POOL), st.sampled_from(_POOL))
def test_equivalence_reflexive_symmetric(a, b):
    x, y = normalize_answer(a), normalize_answer(b)
    assert answers_equivalent(x, x)
    assert answers_equivalent(x, y) == answers_equivalent(y, x)


def test_equal_text_implies_equivalent():
    x = CanonicalAnswer(text="anything", numeric=None)
    y = CanonicalAnswer(text="anything", numeric=Fraction(3))
    assert answers_equivalent(x, y)


# --- verify -----------------------------------------------------------------

APPENDIX_SOLUTION = (
    "Let's break down the problem step by step:\n"
    "P(top card is hearts) = 13/52\n\n"
    "The final answer without units is: $\\boxed{\\frac{1}{4}}$\n"
)


def test_verify_appendix_example_correct():
    gold = normalize_answer("\\dfrac14")
    result = verify(APPENDIX_SOLUTION, gold)
    assert result.correct
    assert result.span is not None and result.span.raw == "\\frac{1}{4}"


def test_verify_wrong_solution():
    gold = normalize_answer("1600")
    result = verify("Therefore, the value of $x$ is \\boxed{1190}.", gold)
    assert not result.correct
    assert result.span is not None and result.span.raw == "1190"
    assert result.reason is None


def test_verify_no_box():
    result = verify("I give up.", normalize_answer("1600"))
    assert not result.correct and result.span is None and result.reason == "no_answer"


def test_verify_unbalanced():
    result = verify("so x is \\boxed{16", normalize_answer("16"))
    assert not result.correct and result.reason == "unbalanced_braces"


def test_verify_empty_box():
    result = verify("so x is \\boxed{}", normalize_answer("16"))
    assert not result.correct and result.reason == "empty_answer"


def test_verify_never_raises_and_matches_pipeline():
    gold = normalize_answer("2")
    for text in ["\\boxed{2}", "\\boxed{2.0}", "\\boxed{4/2}", "\\boxed{3}", "nothing"]:
        result = verify(text, gold)
        try:
            expected = answers_equivalent(normalize_answer(extract_boxed(text).raw), gold)
        except Exception:
            expected = False
        assert result.correct == expected
