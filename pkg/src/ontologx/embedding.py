"""Text embeddings: the deterministic reference embedder and the remote hook.

The hashing embedder keeps CI hermetic: no model downloads, identical
vectors on every machine. Anything that honours the same contract
(deterministic output, unit L2 norm) can be plugged into the index instead;
``HTTPEmbedder`` adapts a remote embeddings endpoint.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, EmbedderUnavailable, EmptyInput, ZeroVector

__all__ = [
    "Embedding",
    "Embedder",
    "HashingEmbedder",
    "HTTPEmbedder",
    "cosine_sim",
    "cosine_distance",
]

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True, eq=False)
class Embedding:
    """A fixed-length real vector; float64, one-dimensional.

    Equality is identity: compare ``values`` arrays explicitly when needed.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("embedding values must be one-dimensional")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def tolist(self) -> list[float]:
        return self.values.tolist()

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Embedding":
        return cls(np.asarray(values, dtype=np.float64))


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> Embedding: ...


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class HashingEmbedder:
    """Bag-of-tokens feature hashing into a fixed-width unit vector.

    Tokenisation lowercases and splits on non-alphanumerics, so token order
    never matters: embed("a b") == embed("b a"). A text without any token
    (empty or punctuation-only) raises ``EmptyInput``.
    """

    def __init__(self, dim: int = 256):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed(self, text: str) -> Embedding:
        tokens = [t for t in _TOKEN_SPLIT.split(text.lower()) if t]
        if not tokens:
            raise EmptyInput("cannot embed a text without any token")
        counts = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            counts[_bucket(token, self.dim)] += 1.0
        counts /= np.linalg.norm(counts)
        return Embedding(counts)


class HTTPEmbedder:
    """Remote embeddings endpoint speaking ``POST {"model": ..., "input": [text]}``
    and answering ``{"data": [{"embedding": [...]}]}``.

    Credentials come from the environment only. Output is re-normalised so
    the embed contract (unit L2 norm) holds regardless of the backend.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        session=None,
    ):
        import requests

        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.timeout = timeout
        self._api_key = api_key
        self._session = session if session is not None else requests.Session()

    def embed(self, text: str) -> Embedding:
        import requests

        if not text:
            raise EmptyInput("cannot embed an empty text")
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._session.post(
                self.endpoint,
                json={"model": self.model, "input": [text]},
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise EmbedderUnavailable(f"embedding endpoint failed: {exc}") from exc
        try:
            values = np.asarray(payload["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as exc:
            raise EmbedderUnavailable(f"malformed embedding response: {exc}") from exc
        if values.shape != (self.dim,):
            raise EmbedderUnavailable(
                f"expected dimension {self.dim}, got {values.shape}"
            )
        norm = np.linalg.norm(values)
        if norm == 0.0:
            raise EmbedderUnavailable("embedding endpoint returned a zero vector")
        return Embedding(values / norm)


def cosine_sim(a: Embedding, b: Embedding) -> float:
    """dot(a, b) / (|a| |b|), in [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero vectors")
    return float(np.dot(a.values, b.values) / (na * nb))


def cosine_distance(a: Embedding, b: Embedding) -> float:
    return 1.0 - cosine_sim(a, b)
