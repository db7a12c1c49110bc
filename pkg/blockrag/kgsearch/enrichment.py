# Identifier enrichment: "ID (description)" for nodes and
# "<H (dh), P (dp), T (dt)>" for triples.
#
# Lookup order per id: catalog description, remote description (only when a
# provider is configured), catalog label, then the bare id.

import json
import logging
from pathlib import Path
from typing import Protocol

import httpx

from blockrag.core.config import Wikidata
from blockrag.core.errors import RemoteServiceError
from blockrag.core.http import new_async_client, request_with_retry
from blockrag.kgsearch.graph import KnowledgeGraph
from blockrag.schemas.knowledge import Triple
from blockrag.schemas.results import RunCounters

logger = logging.getLogger(__name__)


def format_item(item_id: str, text: str = "") -> str:
    return f"{item_id} ({text})" if text else item_id


def format_triple(head: str, predicate: str, tail: str) -> str:
    return f"<{head}, {predicate}, {tail}>"


class DescriptionProvider(Protocol):
    async def describe(self, item_id: str) -> str | None: ...

    async def aclose(self) -> None: ...


class WikidataDescriptionProvider:
    """Wikidata REST description lookup with a JSON file cache.

    Misses (404) are cached as empty strings so they are not asked again.
    New entries stay in memory until `flush` or `aclose` writes the file; a
    cache that cannot be written is logged and skipped.
    """

    def __init__(
        self,
        settings: Wikidata,
        *,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        self._settings = settings
        self._client = new_async_client(
            settings.base_url, timeout_secs=settings.timeout_secs, transport=transport
        )
        self._cache_path = settings.cache_path
        self._cache = self._read_cache(settings.cache_path)
        self._dirty = False

    @staticmethod
    def _read_cache(path: Path) -> dict[str, str]:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return {}
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("ignoring unreadable description cache %s: %s", path, e)
            return {}
        return {str(key): str(value) for key, value in data.items()}

    def _endpoint(self, item_id: str) -> str:
        collection = "properties" if item_id.startswith("P") else "items"
        return f"/entities/{collection}/{item_id}/descriptions/{self._settings.language}"

    async def describe(self, item_id: str) -> str | None:
        if item_id in self._cache:
            return self._cache[item_id] or None

        try:
            response = await request_with_retry(
                self._client,
                "GET",
                self._endpoint(item_id),
                max_retries=self._settings.max_retries,
                backoff_base_secs=self._settings.backoff_base_secs,
            )
            description = response.json()
        except RemoteServiceError as e:
            if e.status_code != 404:
                raise
            description = ""
        if not isinstance(description, str):
            raise RemoteServiceError(f"description for {item_id} is not a string")

        self._cache[item_id] = description
        self._dirty = True
        return description or None

    def flush(self) -> None:
        if not self._dirty:
            return
        try:
            self._cache_path.parent.mkdir(parents=True, exist_ok=True)
            self._cache_path.write_text(
                json.dumps(self._cache, ensure_ascii=False, sort_keys=True), encoding="utf-8"
            )
        except OSError as e:
            logger.warning("could not write description cache %s: %s", self._cache_path, e)
            return
        self._dirty = False

    async def aclose(self) -> None:
        self.flush()
        await self._client.aclose()


class Enricher:
    def __init__(
        self,
        kg: KnowledgeGraph,
        provider: DescriptionProvider | None = None,
        counters: RunCounters | None = None,
    ) -> None:
        self.kg = kg
        self.provider = provider
        self.counters = counters if counters is not None else RunCounters()
        self._resolved: dict[str, str] = {}

    async def describe(self, item_id: str) -> str:
        if item_id in self._resolved:
            return self._resolved[item_id]

        item = self.kg.item(item_id)
        text = item.description if item is not None else ""
        if not text and self.provider is not None:
            try:
                text = await self.provider.describe(item_id) or ""
            except (RemoteServiceError, ValueError) as e:
                logger.warning("description lookup for %s failed: %s", item_id, e)
                text = ""
            if not text:
                self.counters.enrichment_misses += 1
        if not text and item is not None:
            text = item.label

        self._resolved[item_id] = text
        return text

    async def enrich_item(self, item_id: str) -> str:
        return format_item(item_id, await self.describe(item_id))

    async def enrich_triple(self, triple: Triple) -> str:
        return format_triple(
            await self.enrich_item(triple.head),
            await self.enrich_item(triple.predicate),
            await self.enrich_item(triple.tail),
        )
