"""Inference backends: OpenAI-compatible HTTP client and a fixture-replay mock.

Both expose the same two capabilities:

* ``generate(req)`` — sample ``req.n`` completions with per-token logprobs,
  returned in sample-index order regardless of network completion order.
* ``score(prompt, completion)`` — teacher-forced per-token logprobs for a
  SUPPLIED completion (echo-style), needed to score external candidates.

The HTTP client retries transient failures (transport errors, 429, 5xx) with
exponential backoff plus jitter, bounds in-flight requests with a semaphore,
and writes every response through a content-addressed cache keyed per
sample, so an interrupted N=30 sampling run resumes without duplicating
samples and a warm cache replays byte-identically with zero network calls.
"""

from __future__ import annotations

import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import requests

from .cache import ResponseCache, cache_key
from .errors import (
    CapabilityError,
    FixtureMissError,
    HttpError,
    MissingLogprobsError,
    NoScoringError,
    RequestTimeout,
    TokenTextMismatchError,
)
from .rewards import ScoredSolution
from .tokens import TokenLogprob, build_tokens

GENERATE = "generate"
SCORE = "score"

# Transport returns (status_code, parsed_json_body_or_error_text).
Transport = Callable[[str, dict, dict, float], tuple[int, object]]


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    n: int = 1
    temperature: float = 1.0
    max_tokens: int = 1024
    seed: Optional[int] = None
    want_logprobs: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def cache_payload(self) -> dict:
        return {
            "prompt": self.prompt,
            "n": self.n,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
            "want_logprobs": self.want_logprobs,
        }


def _record_from_tokens(text: str, tokens: Sequence[TokenLogprob]) -> dict:
    return {
        "text": text,
        "tokens": [
            {"text": t.text, "logprob": t.logprob, "char_start": t.char_start, "char_end": t.char_end}
            for t in tokens
        ],
    }


def _tokens_from_record(record: dict) -> list[TokenLogprob]:
    return build_tokens(
        [t["text"] for t in record["tokens"]],
        [t["logprob"] for t in record["tokens"]],
        completion=record["text"],
    )


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, object]:
    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    try:
        body = resp.json()
    except ValueError:
        body = resp.text
    return resp.status_code, body


class HttpBackend:
    """Client for an OpenAI-compatible completions or chat-completions endpoint.

    ``api="completions"`` supports both capabilities; ``api="chat"`` cannot
    echo supplied text, so ``score`` raises NoScoringError there. The
    declared ``capabilities`` come from config and may be narrower than what
    the endpoint could do; pipelines check them before issuing any request.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        api: str = "completions",
        capabilities: Sequence[str] = (GENERATE, SCORE),
        cache: Optional[ResponseCache] = None,
        parallelism: int = 8,
        timeout: float = 120.0,
        max_attempts: int = 5,
        backoff_base: float = 0.5,
        transport: Optional[Transport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if api not in ("completions", "chat"):
            raise ValueError(f"unknown api kind {api!r}")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api = api
        self.api_key = api_key
        capabilities = frozenset(capabilities)
        if api == "chat":
            capabilities -= {SCORE}  # chat endpoints cannot echo-score
        self.capabilities = capabilities
        self.cache = cache
        self.parallelism = max(1, parallelism)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.transport = transport or _requests_transport
        self.sleep = sleep
        self._inflight = threading.BoundedSemaphore(self.parallelism)
        self._jitter = random.Random(0x5EED)

    # -- plumbing ------------------------------------------------------------

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_error: Optional[str] = None
        timed_out = False
        for attempt in range(1, self.max_attempts + 1):
            try:
                with self._inflight:
                    status, body = self.transport(url, payload, self._headers(), self.timeout)
            except requests.Timeout as exc:
                last_error, timed_out = f"timeout: {exc}", True
            except requests.RequestException as exc:
                last_error, timed_out = f"transport: {exc}", False
            else:
                if status == 200 and isinstance(body, dict):
                    return body
                last_error, timed_out = f"HTTP {status}: {str(body)[:200]}", False
                if status not in (429,) and not 500 <= status < 600:
                    raise HttpError(f"{url}: {last_error}")
            if attempt < self.max_attempts:
                delay = self.backoff_base * (2 ** (attempt - 1))
                self.sleep(delay * (0.5 + self._jitter.random()))
        if timed_out:
            raise RequestTimeout(f"{url}: {last_error} (after {self.max_attempts} attempts)")
        raise HttpError(f"{url}: {last_error} (after {self.max_attempts} attempts)")

    @staticmethod
    def _completion_choice(data: dict) -> dict:
        try:
            return data["choices"][0]
        except (KeyError, IndexError) as exc:
            raise HttpError(f"malformed response: no choices ({exc})")

    def _parse_completion(self, data: dict) -> dict:
        choice = self._completion_choice(data)
        text = choice.get("text", "")
        lp = choice.get("logprobs") or {}
        texts, logprobs = lp.get("tokens"), lp.get("token_logprobs")
        if not texts or logprobs is None:
            raise MissingLogprobsError("provider returned no token logprobs")
        tokens = build_tokens(texts, logprobs, offsets=lp.get("text_offset"), completion=text)
        return _record_from_tokens(text, tokens)

    def _parse_chat(self, data: dict) -> dict:
        choice = self._completion_choice(data)
        content = (choice.get("message") or {}).get("content", "")
        entries = (choice.get("logprobs") or {}).get("content")
        if not entries:
            raise MissingLogprobsError("provider returned no token logprobs")
        tokens = build_tokens(
            [e["token"] for e in entries],
            [e["logprob"] for e in entries],
            completion=content,
        )
        return _record_from_tokens(content, tokens)

    def _parse_echo_score(self, data: dict, prompt: str, completion: str) -> dict:
        choice = self._completion_choice(data)
        lp = choice.get("logprobs") or {}
        texts, logprobs, offsets = lp.get("tokens"), lp.get("token_logprobs"), lp.get("text_offset")
        if not texts or logprobs is None:
            raise MissingLogprobsError("provider returned no token logprobs")
        if offsets is None:
            offsets, cursor = [], 0
            for t in texts:
                offsets.append(cursor)
                cursor += len(t)
        boundary = len(prompt)
        starts = [o - offsets[0] for o in offsets]
        if boundary not in starts:
            raise TokenTextMismatchError(
                "prompt/completion boundary falls inside a token; cannot isolate completion logprobs"
            )
        first = starts.index(boundary)
        tokens = build_tokens(
            texts[first:], logprobs[first:], offsets=starts[first:], completion=completion
        )
        return _record_from_tokens(completion, tokens)

    # -- capabilities ----------------------------------------------------------

    def _fetch_sample(self, req: GenerationRequest, sample_index: int) -> dict:
        payload = {
            "model": self.model,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "n": 1,
        }
        if req.seed is not None:
            payload["seed"] = req.seed + sample_index
        if self.api == "chat":
            payload["messages"] = [{"role": "user", "content": req.prompt}]
            payload["logprobs"] = True
            data = self._post("/chat/completions", payload)
            return self._parse_chat(data)
        payload["prompt"] = req.prompt
        payload["logprobs"] = 0
        data = self._post("/completions", payload)
        return self._parse_completion(data)

    def generate(self, req: GenerationRequest) -> list[ScoredSolution]:
        records: dict[int, dict] = {}
        keys = {
            i: cache_key(GENERATE, self.model, req.cache_payload(), sample_index=i)
            for i in range(req.n)
        }
        if self.cache is not None:
            for i, key in keys.items():
                cached = self.cache.get(key)
                if cached is not None:
                    records[i] = cached
        missing = [i for i in range(req.n) if i not in records]
        if missing:
            with ThreadPoolExecutor(max_workers=min(self.parallelism, len(missing))) as pool:
                fetched = pool.map(lambda i: (i, self._fetch_sample(req, i)), missing)
                for i, record in fetched:
                    records[i] = record
                    if self.cache is not None:
                        self.cache.put(keys[i], record)
        return [
            ScoredSolution(
                question_id="",
                text=records[i]["text"],
                tokens=_tokens_from_record(records[i]),
                sample_index=i,
                source="generated",
            )
            for i in range(req.n)
        ]

    def score(self, prompt: str, completion: str) -> list[TokenLogprob]:
        if not completion:
            raise ValueError("completion must be non-empty")
        if self.api == "chat":
            raise NoScoringError("chat endpoints cannot echo-score supplied text")
        key = cache_key(SCORE, self.model, {"prompt": prompt, "completion": completion})
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return _tokens_from_record(cached)
        payload = {
            "model": self.model,
            "prompt": prompt + completion,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
            "temperature": 0.0,
        }
        data = self._post("/completions", payload)
        record = self._parse_echo_score(data, prompt, completion)
        if self.cache is not None:
            self.cache.put(key, record)
        return _tokens_from_record(record)


class MockBackend:
    """Deterministic fixture-replay backend for offline runs and tests.

    The fixture is a JSONL file; each record is either

        {"kind": "generate", "prompt": ..., "sample_index": i,
         "tokens": [{"text": ..., "logprob": ...}, ...]}

    or

        {"kind": "score", "prompt": ..., "completion": ...,
         "tokens": [...]}

    Completion text is the concatenation of the token texts (validated for
    score records). Requests with no matching record raise FixtureMissError:
    fixtures must be total so tests never silently fall through.
    """

    def __init__(self, records: Sequence[dict], capabilities: Sequence[str] = (GENERATE, SCORE)):
        self.capabilities = frozenset(capabilities)
        self._generate: dict[tuple[str, int], dict] = {}
        self._score: dict[tuple[str, str], dict] = {}
        for record in records:
            kind = record.get("kind")
            tokens = record.get("tokens")
            if not tokens:
                raise ValueError(f"fixture record without tokens: {record!r}")
            text = "".join(t["text"] for t in tokens)
            if kind == GENERATE:
                key = (record["prompt"], int(record.get("sample_index", 0)))
                self._generate[key] = {"text": text, "tokens": tokens}
            elif kind == SCORE:
                completion = record["completion"]
                if text != completion:
                    raise ValueError(
                        f"score fixture tokens do not reconstruct completion {completion!r}"
                    )
                self._score[(record["prompt"], completion)] = {"text": completion, "tokens": tokens}
            else:
                raise ValueError(f"unknown fixture record kind {kind!r}")

    @classmethod
    def from_file(cls, path, capabilities: Sequence[str] = (GENERATE, SCORE)) -> "MockBackend":
        import json

        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return cls(records, capabilities=capabilities)

    def _build(self, record: dict) -> list[TokenLogprob]:
        tokens = record["tokens"]
        offsets = None
        if all("char_start" in t for t in tokens):
            offsets = [t["char_start"] for t in tokens]
        return build_tokens(
            [t["text"] for t in tokens],
            [t["logprob"] for t in tokens],
            offsets=offsets,
            completion=record["text"],
        )

    def generate(self, req: GenerationRequest) -> list[ScoredSolution]:
        if GENERATE not in self.capabilities:
            raise CapabilityError("mock backend declared without generate capability")
        out = []
        for i in range(req.n):
            record = self._generate.get((req.prompt, i))
            if record is None:
                raise FixtureMissError(
                    f"no generate fixture for sample {i} of prompt {req.prompt[:80]!r}..."
                )
            out.append(
                ScoredSolution(
                    question_id="",
                    text=record["text"],
                    tokens=self._build(record),
                    sample_index=i,
                    source="generated",
                )
            )
        return out

    def score(self, prompt: str, completion: str) -> list[TokenLogprob]:
        if not completion:
            raise ValueError("completion must be non-empty")
        if SCORE not in self.capabilities:
            raise NoScoringError("mock backend declared without score capability")
        record = self._score.get((prompt, completion))
        if record is None:
            raise FixtureMissError(
                f"no score fixture for completion {completion[:80]!r}..."
            )
        return self._build(record)
