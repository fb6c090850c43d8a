"""Shared test helpers: mock-fixture builders and a fake OpenAI endpoint."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Optional, Sequence

import pytest

from boxconf.prompts import render_judge, render_verifier, render_zero_shot

FILLER_LOGPROB = -0.25


def pieces_to_tokens(pieces: Sequence[tuple[str, float]]) -> list[dict]:
    return [{"text": text, "logprob": logprob} for text, logprob in pieces]


def split_chunks(text: str, count: int) -> list[str]:
    """Split text into `count` non-empty contiguous chunks."""
    assert 1 <= count <= len(text), (text, count)
    base, extra = divmod(len(text), count)
    chunks, pos = [], 0
    for i in range(count):
        size = base + (1 if i < extra else 0)
        chunks.append(text[pos : pos + size])
        pos += size
    return chunks


def solution_pieces(
    answer: Optional[str],
    answer_probs: Sequence[float] = (),
    index: int = 0,
) -> list[tuple[str, float]]:
    """Token pieces for a synthetic solution whose boxed answer gets its own
    tokens with the given probabilities. answer=None omits the box."""
    if answer is None:
        return [
            (f"Sample {index}: I could not settle", FILLER_LOGPROB),
            (" on a final value.\n", FILLER_LOGPROB),
        ]
    pieces = [
        (f"Sample {index}: working it out.\n", FILLER_LOGPROB),
        ("The final answer is $\\boxed{", FILLER_LOGPROB),
    ]
    for chunk, prob in zip(split_chunks(answer, len(answer_probs)), answer_probs):
        pieces.append((chunk, math.log(prob) if prob < 1.0 else 0.0))
    pieces.append(("}$.\n", FILLER_LOGPROB))
    return pieces


def generate_record(prompt: str, sample_index: int, pieces: Sequence[tuple[str, float]]) -> dict:
    return {"kind": "generate", "prompt": prompt, "sample_index": sample_index, "tokens": pieces_to_tokens(pieces)}


def score_record(prompt: str, pieces: Sequence[tuple[str, float]]) -> dict:
    completion = "".join(text for text, _ in pieces)
    return {
        "kind": "score",
        "prompt": prompt,
        "completion": completion,
        "tokens": pieces_to_tokens(pieces),
    }


def question_generation_records(
    problem: str,
    samples: Sequence[tuple[Optional[str], Sequence[float]]],
) -> list[dict]:
    """Generate-records for one question: per sample an (answer, probs) spec."""
    prompt = render_zero_shot(problem)
    return [
        generate_record(prompt, i, solution_pieces(answer, probs, index=i))
        for i, (answer, probs) in enumerate(samples)
    ]


def verifier_record(problem: str, solution_text: str, verdict: str, prob: float) -> dict:
    prompt = render_verifier(problem, solution_text)
    pieces = [
        ("Checked every step.\n", FILLER_LOGPROB),
        ("Verification: \\boxed{", FILLER_LOGPROB),
        (verdict, math.log(prob) if prob < 1.0 else 0.0),
        ("}\n", FILLER_LOGPROB),
    ]
    return generate_record(prompt, 0, pieces)


def judge_record(problem: str, solution_text: str, conclusion: str) -> dict:
    prompt = render_judge(problem, solution_text)
    pieces = [
        ("The response is well organized.\n", FILLER_LOGPROB),
        (conclusion, FILLER_LOGPROB),
    ]
    return generate_record(prompt, 0, pieces)


def write_jsonl_file(path, records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


# ---------------------------------------------------------------------------
# Fake OpenAI-compatible endpoint (plugs into HttpBackend as `transport`)
# ---------------------------------------------------------------------------


def _stable_hash(text: str) -> int:
    return int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:8], 16)


def fake_tokenize(text: str) -> list[str]:
    """Cut after every whitespace character (and cap chunks at 8 chars), so a
    prompt ending in a newline always ends on a token boundary."""
    tokens, current = [], ""
    for ch in text:
        current += ch
        if ch.isspace() or len(current) >= 8:
            tokens.append(current)
            current = ""
    if current:
        tokens.append(current)
    return tokens


class FakeOpenAI:
    """Deterministic stand-in for an OpenAI-compatible /completions endpoint.

    Completions are synthesized from a hash of (prompt, seed), logprobs from
    a hash of (token, position), so responses are stable across runs and
    processes. Supports scripted failures and a hard-down mode for cache
    tests.
    """

    def __init__(self):
        self.calls = 0
        self.scripted_statuses: list[int] = []
        self.down = False

    def transport(self, url: str, payload: dict, headers: dict, timeout: float):
        self.calls += 1
        if self.scripted_statuses:
            return self.scripted_statuses.pop(0), "scripted failure"
        if self.down:
            import requests

            raise requests.ConnectionError("endpoint is down")
        if url.endswith("/chat/completions"):
            return 200, self._chat_response(payload)
        if payload.get("echo"):
            return 200, self._echo_response(payload)
        return 200, self._generate_response(payload)

    @staticmethod
    def _token_logprob(token: str, position: int) -> float:
        return -(_stable_hash(f"{token}|{position}") % 400) / 1000.0

    def _logprob_block(self, text: str, start_offset: int, first_none: bool) -> dict:
        tokens = fake_tokenize(text)
        offsets, cursor = [], start_offset
        for tok in tokens:
            offsets.append(cursor)
            cursor += len(tok)
        logprobs = [self._token_logprob(tok, i) for i, tok in enumerate(tokens)]
        if first_none:
            logprobs[0] = None
        return {"tokens": tokens, "token_logprobs": logprobs, "text_offset": offsets}

    def _completion_text(self, prompt: str, seed) -> str:
        h = _stable_hash(f"{prompt}|{seed}")
        answer = 10 + h % 90
        return f"Working on it ({h % 7} steps).\nThe final answer is $\\boxed{{{answer}}}$.\n"

    def _generate_response(self, payload: dict) -> dict:
        text = self._completion_text(payload["prompt"], payload.get("seed"))
        block = self._logprob_block(text, start_offset=len(payload["prompt"]), first_none=False)
        return {"choices": [{"text": text, "logprobs": block}]}

    def _echo_response(self, payload: dict) -> dict:
        full = payload["prompt"]
        block = self._logprob_block(full, start_offset=0, first_none=True)
        return {"choices": [{"text": full, "logprobs": block}]}

    def _chat_response(self, payload: dict) -> dict:
        prompt = payload["messages"][0]["content"]
        text = self._completion_text(prompt, payload.get("seed"))
        entries = [
            {"token": tok, "logprob": self._token_logprob(tok, i)}
            for i, tok in enumerate(fake_tokenize(text))
        ]
        return {"choices": [{"message": {"content": text}, "logprobs": {"content": entries}}]}


@pytest.fixture
def fake_openai():
    return FakeOpenAI()
