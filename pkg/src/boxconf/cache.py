"""Content-addressed response cache: one file per request digest.

Keys are SHA-256 over the canonical JSON serialization of (endpoint kind,
model id, request fields, sample index), so identical requests always map to
the same file across runs and platforms, and any field change moves the
request to a new file. Writes are atomic (temp file + rename) so concurrent
writers of the same key leave exactly one valid file. Concurrent readers and
writers within one process are safe; cross-process locking is not provided.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping, Optional


def canonical_json(payload: Any) -> str:
    """Deterministic JSON: sorted keys, no whitespace, ASCII only."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def cache_key(kind: str, model: str, request: Mapping[str, Any], sample_index: int = 0) -> str:
    """SHA-256 digest identifying one response."""
    blob = canonical_json(
        {"kind": kind, "model": model, "request": dict(request), "sample_index": sample_index}
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> Optional[dict]:
        path = self.path(digest)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        return json.loads(raw)

    def put(self, digest: str, record: Mapping[str, Any]) -> None:
        data = canonical_json(record)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(data)
            os.replace(tmp, self.path(digest))
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
