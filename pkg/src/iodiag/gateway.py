"""Single egress point for chat-completion and embedding providers.

Speaks the de-facto OpenAI-compatible HTTP wire format (``/chat/completions``
and ``/embeddings``) so both proprietary and locally served open-source
backbones work behind one configurable base URL. Three model roles are
configured: a reasoning model for description/diagnosis/merge calls, a
cheaper filter model for relevance judgments, and an embedding model.

No other module performs network I/O. ``MockGateway`` provides a
deterministic, scriptable stand-in so the whole pipeline runs offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import requests

logger = logging.getLogger(__name__)

DEFAULT_EMBEDDING_DIM = 64
_TRANSIENT_STATUSES = {408, 429, 500, 502, 503, 504}


class ProviderError(Exception):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider error {status}: {body[:500]}")
        self.status = status
        self.body = body


class DimensionInconsistency(Exception):
    """Provider returned embedding vectors of mixed dimensions."""


@dataclass
class ProviderConfig:
    endpoint_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    reasoning_model: str = "gpt-4o"
    filter_model: str = "gpt-4o-mini"
    embedding_model: str = "text-embedding-3-large"
    temperature: float = 0.0
    timeout_s: float = 60.0
    max_retries: int = 3
    max_inflight: int = 8

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")


@dataclass
class ChatExchange:
    messages: list[tuple[str, str]]
    model: str
    temperature: float = 0.0

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        roles = {role for role, _ in self.messages}
        if not roles <= {"system", "user", "assistant"}:
            raise ValueError(f"unknown roles: {roles}")
        if self.messages[-1][0] != "user":
            raise ValueError("last message must have role 'user'")

    def concatenated_text(self) -> str:
        return "\n".join(text for _, text in self.messages)


class HttpGateway:
    """Chat/embedding client with bounded concurrency and retry-on-transient.

    Transient failures (connection errors, timeouts, 408/429/5xx) are retried
    with exponential backoff up to ``max_retries`` extra attempts; anything
    else raises ProviderError immediately. A timeout on every attempt raises
    TimeoutError.
    """

    def __init__(
        self,
        config: ProviderConfig,
        api_key: str | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        import os

        self.config = config
        self.api_key = api_key or os.environ.get(config.api_key_env, "")
        self._sleep = sleep
        self._inflight = threading.BoundedSemaphore(config.max_inflight)
        self._lock = threading.Lock()
        self.call_counts = {"chat": 0, "embed": 0}

    def _count(self, kind: str) -> None:
        with self._lock:
            self.call_counts[kind] += 1

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.endpoint_url.rstrip("/") + path
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        attempts = self.config.max_retries + 1
        timed_out = False
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(0.5 * 2 ** (attempt - 1))
            try:
                with self._inflight:
                    resp = requests.post(
                        url, headers=headers, json=payload, timeout=self.config.timeout_s
                    )
            except requests.Timeout as exc:
                timed_out = True
                last_error = exc
                continue
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in _TRANSIENT_STATUSES:
                last_error = ProviderError(resp.status_code, resp.text)
                continue
            if resp.status_code >= 400:
                raise ProviderError(resp.status_code, resp.text)
            return resp.json()
        if timed_out:
            raise TimeoutError(
                f"request to {url} timed out after {attempts} attempts"
            ) from last_error
        if isinstance(last_error, ProviderError):
            raise last_error
        raise ProviderError(0, str(last_error))

    def chat(self, exchange: ChatExchange) -> str:
        self._count("chat")
        data = self._post(
            "/chat/completions",
            {
                "model": exchange.model,
                "temperature": exchange.temperature,
                "messages": [
                    {"role": role, "content": text} for role, text in exchange.messages
                ],
            },
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(0, f"malformed chat response: {data!r}") from exc

    def embed(self, texts: list[str], model: str | None = None) -> list[list[float]]:
        if not texts or any(not t for t in texts):
            raise ValueError("texts must be non-empty and contain no empty strings")
        self._count("embed")
        data = self._post(
            "/embeddings",
            {"model": model or self.config.embedding_model, "input": texts},
        )
        try:
            rows = sorted(data["data"], key=lambda d: d["index"])
            vectors = [row["embedding"] for row in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderError(0, f"malformed embeddings response: {data!r}") from exc
        if len(vectors) != len(texts):
            raise ProviderError(
                0, f"expected {len(texts)} embeddings, got {len(vectors)}"
            )
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            raise DimensionInconsistency(f"mixed embedding dimensions: {dims}")
        return vectors


def chat(config: ProviderConfig, exchange: ChatExchange) -> str:
    return HttpGateway(config).chat(exchange)


def embed(config: ProviderConfig, texts: list[str]) -> list[list[float]]:
    return HttpGateway(config).embed(texts)


def hash_embedding(text: str, dim: int = DEFAULT_EMBEDDING_DIM) -> list[float]:
    """Deterministic bag-of-words embedding used by the mock provider.

    Each whitespace token hashes to a fixed pseudo-random unit vector; the
    text embeds to the normalized token-vector sum, so identical texts map to
    identical vectors and texts sharing vocabulary land close together.
    """
    tokens = text.split() or [""]
    total = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        seed = int.from_bytes(hashlib.sha256(token.encode()).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(dim)
        total += v / np.linalg.norm(v)
    norm = np.linalg.norm(total)
    if norm == 0:
        total[0] = 1.0
        norm = 1.0
    return list(total / norm)


@dataclass
class MockRule:
    """First rule whose pattern matches the request text supplies the response.

    ``response`` may be a callable taking the full request text, which lets
    tests build content-dependent responses (e.g. echoing reference keys).
    ``raises`` aborts the call with "provider" or "timeout" errors instead.
    """

    pattern: str
    response: str | Callable[[str], str] = ""
    regex: bool = False
    echo: bool = False
    raises: str | None = None

    def matches(self, text: str) -> bool:
        if self.regex:
            import re

            return re.search(self.pattern, text) is not None
        return self.pattern in text


@dataclass
class MockScript:
    rules: list[MockRule] = field(default_factory=list)
    default: str = "OK"

    def respond(self, text: str) -> str:
        for rule in self.rules:
            if rule.matches(text):
                if rule.raises == "provider":
                    raise ProviderError(500, f"scripted failure for {rule.pattern!r}")
                if rule.raises == "timeout":
                    raise TimeoutError(f"scripted timeout for {rule.pattern!r}")
                if rule.echo:
                    return text
                if callable(rule.response):
                    return rule.response(text)
                return rule.response
        return self.default


class MockGateway:
    """Deterministic offline provider: scripted chat, hash-based embeddings."""

    def __init__(
        self, script: MockScript | None = None, embedding_dim: int = DEFAULT_EMBEDDING_DIM
    ):
        self.script = script or MockScript()
        self.embedding_dim = embedding_dim
        self._lock = threading.Lock()
        self.call_counts = {"chat": 0, "embed": 0}
        self.chat_requests: list[str] = []

    def chat(self, exchange: ChatExchange) -> str:
        text = exchange.concatenated_text()
        with self._lock:
            self.call_counts["chat"] += 1
            self.chat_requests.append(text)
        return self.script.respond(text)

    def embed(self, texts: list[str], model: str | None = None) -> list[list[float]]:
        if not texts or any(not t for t in texts):
            raise ValueError("texts must be non-empty and contain no empty strings")
        with self._lock:
            self.call_counts["embed"] += 1
        return [hash_embedding(t, self.embedding_dim) for t in texts]


def load_mock_script(path: Path | str) -> MockScript:
    """Load a MockScript from a JSON file.

    Format: ``{"default": "...", "rules": [{"pattern": ..., "response": ...,
    "regex": false, "echo": false, "raises": null}, ...]}``.
    """
    data = json.loads(Path(path).read_text())
    rules = [
        MockRule(
            pattern=r["pattern"],
            response=r.get("response", ""),
            regex=r.get("regex", False),
            echo=r.get("echo", False),
            raises=r.get("raises"),
        )
        for r in data.get("rules", [])
    ]
    return MockScript(rules=rules, default=data.get("default", "OK"))
