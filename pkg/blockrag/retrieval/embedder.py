# Embedders map text to d-dimensional L2-normalized vectors.
#
# HashingEmbedder is the deterministic local stand-in for a pre-trained
# encoder: character 3-grams of the lowercased text hashed with FNV-1a-64
# into d buckets. Texts shorter than 3 characters count as one gram.
# RemoteEmbedder speaks {"texts": [...]} -> {"vectors": [[...], ...]}.

import logging
from collections.abc import Sequence
from typing import Protocol

import httpx
import numpy as np
import numpy.typing as npt

from blockrag.core import messages
from blockrag.core.config import Embedder as EmbedderSettings
from blockrag.core.config import EmbedderKind
from blockrag.core.errors import ConfigError, RemoteServiceError, UsageError
from blockrag.core.http import new_async_client, request_with_retry

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK_64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    value = FNV_OFFSET_BASIS
    for byte in data:
        value ^= byte
        value = (value * FNV_PRIME) & _MASK_64
    return value


def l2_normalize(vector: Vector) -> Vector:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return vector
    return vector / norm


def mock_embed(text: str, d: int) -> Vector:
    if d < 1:
        raise UsageError(messages.EMBED_DIMENSION_INVALID.format(dimension=d))
    vector = np.zeros(d, dtype=np.float64)
    lowered = text.lower()
    if not lowered:
        return vector
    grams = [lowered[i : i + 3] for i in range(len(lowered) - 2)] or [lowered]
    for gram in grams:
        vector[fnv1a_64(gram.encode("utf-8")) % d] += 1.0
    return l2_normalize(vector)


class Embedder(Protocol):
    dimension: int

    async def embed(self, texts: Sequence[str]) -> list[Vector]: ...

    async def aclose(self) -> None: ...


class HashingEmbedder:
    def __init__(self, dimension: int = 256) -> None:
        if dimension < 1:
            raise UsageError(messages.EMBED_DIMENSION_INVALID.format(dimension=dimension))
        self.dimension = dimension

    async def embed(self, texts: Sequence[str]) -> list[Vector]:
        return [mock_embed(text, self.dimension) for text in texts]

    async def aclose(self) -> None:
        return None


class RemoteEmbedder:
    def __init__(
        self,
        settings: EmbedderSettings,
        dimension: int,
        *,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        if not settings.url:
            raise ConfigError(messages.CONFIG_REMOTE_URL_MISSING.format(service="embedder"))
        self.dimension = dimension
        self._settings = settings
        self._url = settings.url
        self._client = new_async_client(
            settings.url,
            api_key=settings.api_key,
            timeout_secs=settings.timeout_secs,
            transport=transport,
        )

    async def embed(self, texts: Sequence[str]) -> list[Vector]:
        response = await request_with_retry(
            self._client,
            "POST",
            self._url,
            json={"texts": list(texts)},
            max_retries=self._settings.max_retries,
            backoff_base_secs=self._settings.backoff_base_secs,
        )
        try:
            raw = response.json()["vectors"]
            vectors = [np.asarray(values, dtype=np.float64) for values in raw]
        except (ValueError, KeyError, TypeError) as e:
            raise RemoteServiceError(
                messages.REMOTE_BAD_PAYLOAD.format(url=self._url, error=e)
            ) from e
        if len(vectors) != len(texts) or any(v.shape != (self.dimension,) for v in vectors):
            raise RemoteServiceError(
                messages.REMOTE_BAD_PAYLOAD.format(
                    url=self._url, error=f"expected {len(texts)} vectors of dim {self.dimension}"
                )
            )
        return [l2_normalize(vector) for vector in vectors]

    async def aclose(self) -> None:
        await self._client.aclose()


def new_embedder(kind: EmbedderKind, dimension: int, settings: EmbedderSettings) -> Embedder:
    if kind is EmbedderKind.REMOTE:
        return RemoteEmbedder(settings, dimension)
    return HashingEmbedder(dimension)
