"""Text-embedding provider interface plus a deterministic offline stub."""

from __future__ import annotations

import hashlib
import time
from typing import Protocol, Sequence

import numpy as np

from .errors import ProviderUnavailable


class EmbeddingProvider(Protocol):
    """Text in, fixed-length real vectors out. Implementations may batch."""

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HashEmbeddingProvider:
    """Deterministic token-hashing embedder for hermetic tests.

    Tokens are hashed into a fixed-dimension signed bag; cosine similarity
    then reflects token overlap. No network, no model weights.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        vec = np.zeros(self.dim)
        for i in range(0, 8, 2):
            idx = int.from_bytes(digest[i * 4:i * 4 + 4], "big") % self.dim
            sign = 1.0 if digest[16 + i] % 2 == 0 else -1.0
            vec[idx] += sign
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            for token in text.lower().split():
                out[row] += self._token_vector(token)
        return out


class RetryingProvider:
    """Wrap a provider with bounded retries; persistent failure surfaces as
    ProviderUnavailable."""

    def __init__(self, inner: EmbeddingProvider, retries: int = 3, backoff_s: float = 0.0):
        self.inner = inner
        self.retries = retries
        self.backoff_s = backoff_s

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                return self.inner.embed(texts)
            except Exception as exc:  # provider errors are opaque to us
                last = exc
                if self.backoff_s:
                    time.sleep(self.backoff_s * (2 ** attempt))
        raise ProviderUnavailable(f"embedding provider failed after {self.retries} attempts") from last


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities; zero vectors yield similarity 0."""
    norm_a = np.linalg.norm(a, axis=1, keepdims=True)
    norm_b = np.linalg.norm(b, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = (a @ b.T) / (norm_a * norm_b.T)
    return np.nan_to_num(sims, nan=0.0)
