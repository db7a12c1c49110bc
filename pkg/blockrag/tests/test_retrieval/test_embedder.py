import json

import httpx
import numpy as np
import pytest

from blockrag.core.config import Embedder as EmbedderSettings
from blockrag.core.errors import ConfigError, RemoteServiceError, UsageError
from blockrag.retrieval.embedder import (
    HashingEmbedder,
    RemoteEmbedder,
    fnv1a_64,
    mock_embed,
)


def test_fnv1a_64_known_vectors() -> None:
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


def test_empty_text_embeds_to_zero_vector() -> None:
    vector = mock_embed("", 16)

    assert vector.shape == (16,)
    assert not vector.any()


def test_single_trigram_hits_one_bucket_with_unit_norm() -> None:
    vector = mock_embed("abc", 8)

    assert np.count_nonzero(vector) == 1
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    assert vector[fnv1a_64(b"abc") % 8] == pytest.approx(1.0)


def test_embedding_is_case_insensitive_and_deterministic() -> None:
    first = mock_embed("Apple iPad Air", 256)

    assert np.array_equal(first, mock_embed("Apple iPad Air", 256))
    assert np.array_equal(first, mock_embed("apple ipad air", 256))
    assert np.linalg.norm(first) == pytest.approx(1.0)


def test_short_text_counts_as_single_gram() -> None:
    vector = mock_embed("ab", 8)

    assert vector[fnv1a_64(b"ab") % 8] == pytest.approx(1.0)


def test_dimension_must_be_positive() -> None:
    with pytest.raises(UsageError):
        mock_embed("abc", 0)
    with pytest.raises(UsageError):
        HashingEmbedder(0)


async def test_hashing_embedder_embeds_in_order() -> None:
    embedder = HashingEmbedder(32)

    vectors = await embedder.embed(["abc", "", "xyz"])

    assert len(vectors) == 3
    assert np.array_equal(vectors[0], mock_embed("abc", 32))
    assert not vectors[1].any()


async def test_remote_embedder_posts_texts_and_normalizes() -> None:
    seen: list[dict[str, list[str]]] = []

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        seen.append(body)
        return httpx.Response(200, json={"vectors": [[3.0, 4.0] for _ in body["texts"]]})

    embedder = RemoteEmbedder(
        EmbedderSettings(url="http://embed.test/v1/embed"),
        2,
        transport=httpx.MockTransport(handler),
    )

    vectors = await embedder.embed(["one", "two"])

    assert seen == [{"texts": ["one", "two"]}]
    assert [v.tolist() for v in vectors] == [[0.6, 0.8], [0.6, 0.8]]
    await embedder.aclose()


async def test_remote_embedder_rejects_wrong_dimension() -> None:
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"vectors": [[1.0, 0.0, 0.0]]})

    embedder = RemoteEmbedder(
        EmbedderSettings(url="http://embed.test/v1/embed"),
        2,
        transport=httpx.MockTransport(handler),
    )

    with pytest.raises(RemoteServiceError):
        await embedder.embed(["one"])
    await embedder.aclose()


def test_remote_embedder_needs_url() -> None:
    with pytest.raises(ConfigError):
        RemoteEmbedder(EmbedderSettings(), 2)
