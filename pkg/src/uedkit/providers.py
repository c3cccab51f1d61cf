"""Clients for the two external services: a text-embedding endpoint and a
chat-completion LLM endpoint, plus deterministic in-process mocks of both.

Wire formats::

    embedding  POST {"texts": [str, ...]}  ->  {"vectors": [[float, ...], ...]}
    chat       POST {"model", "temperature", "messages": [{"role", "content"}]}
               ->  {"choices": [{"message": {"content": str}}]}
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import ConfigError, ProviderError
from .lexicon import tokenize

logger = logging.getLogger(__name__)


class TransientError(Exception):
    """A provider call failed in a way worth retrying."""


def with_retries(call, retries: int, backoff: float, what: str):
    """Run ``call`` up to ``retries + 1`` times with exponential backoff."""
    for attempt in range(retries + 1):
        try:
            return call()
        except (TransientError, httpx.TransportError) as exc:
            if attempt == retries:
                raise ProviderError(f"{what} failed after {retries + 1} attempts: {exc}") from exc
            delay = backoff * (2 ** attempt)
            logger.warning("%s failed (%s); retry %d/%d in %.2fs",
                           what, exc, attempt + 1, retries, delay)
            if delay > 0:
                time.sleep(delay)


def _post_json(client: httpx.Client, url: str, payload: dict, headers=None) -> dict:
    resp = client.post(url, json=payload, headers=headers)
    if resp.status_code == 429 or resp.status_code >= 500:
        raise TransientError(f"HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise ProviderError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise TransientError(f"invalid JSON body: {exc}") from exc


# -- embeddings ---------------------------------------------------------------

class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HttpEmbeddingProvider:
    def __init__(self, url: str, batch_size: int = 64, retries: int = 3,
                 backoff: float = 1.0, timeout: float = 60.0,
                 transport: httpx.BaseTransport | None = None):
        if not url:
            raise ConfigError("embedding.url is required for the http embedding provider")
        self.url = url
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _embed_batch(self, texts):
        def call():
            body = _post_json(self._client, self.url, {"texts": list(texts)})
            vectors = body.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(texts):
                raise TransientError("response 'vectors' missing or wrong length")
            return vectors
        return with_retries(call, self.retries, self.backoff, "embedding request")

    def embed(self, texts):
        out = []
        for i in range(0, len(texts), self.batch_size):
            out.extend(self._embed_batch(texts[i:i + self.batch_size]))
        arr = np.asarray(out, dtype=float)
        if arr.ndim != 2:
            raise ProviderError("embedding vectors have inconsistent dimensions")
        return arr


def _bucket(token: str, dim: int) -> int:
    return int.from_bytes(hashlib.sha1(token.encode()).digest()[:8], "big") % dim


class MockEmbeddingProvider:
    """Hashed bag-of-words vectors, L2-normalised.

    Cosine similarity between two texts is then the normalised overlap of
    their token counts, which makes filter outcomes easy to reason about.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def vector(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        for tok in tokenize(text):
            v[_bucket(tok, self.dim)] += 1.0
        norm = math.sqrt(float(v @ v))
        return v / norm if norm else v

    def embed(self, texts):
        if not texts:
            return np.zeros((0, self.dim))
        return np.vstack([self.vector(t) for t in texts])


# -- chat LLM -----------------------------------------------------------------

class ChatClient(Protocol):
    model: str

    def complete(self, messages: list[dict], temperature: float, run_id: str = "") -> str: ...


class HttpChatClient:
    def __init__(self, url: str, model: str, api_key_env: str = "UEDKIT_LLM_API_KEY",
                 retries: int = 3, backoff: float = 1.0, timeout: float = 120.0,
                 transport: httpx.BaseTransport | None = None):
        if not url:
            raise ConfigError("llm.url is required for the http LLM provider")
        self.url = url
        self.model = model
        self.retries = retries
        self.backoff = backoff
        key = os.environ.get(api_key_env)
        self._headers = {"Authorization": f"Bearer {key}"} if key else None
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, messages, temperature, run_id=""):
        payload = {"model": self.model, "temperature": temperature, "messages": messages}

        def call():
            body = _post_json(self._client, self.url, payload, self._headers)
            try:
                return body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise TransientError("response missing choices[0].message.content") from None
        return with_retries(call, self.retries, self.backoff, "chat request")


AGAINST_CUES = frozenset("""
    poison poisoned toxic dangerous danger forced mandatory mandate mandates
    refuse refused hoax scam fake injury injured harm harmful experimental
    antivax antivaxx never lies lie autism microchip depopulation
    """.split())
FAVOR_CUES = frozenset("""
    protect protects protected safe effective grateful thankful thanks
    vaccinated boosted lifesaving science saves save get getting booked
    proud relief happy please
    """.split())


class MockChatClient:
    """Deterministic keyword-cue stance annotator.

    The label comes from counting favor/against cue words in the post. A
    temperature above zero flips a fraction ``0.1 * temperature`` of labels,
    chosen by hashing (post text, run id), so repeated runs differ in a
    reproducible way.
    """

    model = "mock-stance-v1"

    def __init__(self, fail_after: int | None = None):
        self.calls = 0
        self.fail_after = fail_after

    @staticmethod
    def _post_text(messages):
        content = messages[-1]["content"]
        marker = "Post: "
        i = content.rfind(marker)
        if i < 0:
            return content
        return content[i + len(marker):].rsplit("\n\nAnswer:", 1)[0]

    def complete(self, messages, temperature, run_id=""):
        self.calls += 1
        if self.fail_after is not None and self.calls > self.fail_after:
            raise ProviderError("mock endpoint unavailable")
        text = self._post_text(messages)
        toks = tokenize(text)
        against = sum(t in AGAINST_CUES for t in toks)
        favor = sum(t in FAVOR_CUES for t in toks)
        labels = ["favor", "against", "neither"]
        if against > favor:
            label = 1
        elif favor > against:
            label = 0
        else:
            label = 2
        if temperature > 0:
            h = hashlib.sha256(f"{run_id}\x00{text}".encode()).digest()
            u = int.from_bytes(h[:8], "big") / 2 ** 64
            if u < 0.1 * temperature:
                label = (label + 1 + h[8] % 2) % 3
        return labels[label]
