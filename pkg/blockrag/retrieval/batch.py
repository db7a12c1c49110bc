# Query aggregation and retrieval per unit.
#
# A unit is either a (sub-)block (batch retrieval, one embed + topk per block)
# or a single pair (per-query retrieval, one call per pair). rac_count is the
# number of units a retrieval was issued for.

import asyncio
import logging
import time
from collections.abc import Sequence

from pydantic import Field

from blockrag.core import messages
from blockrag.core.config import Granularity, RetrievalConfig
from blockrag.core.errors import BlockRagError, UsageError
from blockrag.core.serialization import serialize_pair_query
from blockrag.retrieval.embedder import Embedder
from blockrag.retrieval.index import VectorIndex
from blockrag.schemas.blocks import Block
from blockrag.schemas.knowledge import ItemKind, ScoredItem
from blockrag.schemas.records import BaseSchema, Dataset, PairKey, pair_key
from blockrag.schemas.results import RunCounters

logger = logging.getLogger(__name__)

QUERY_SEPARATOR = "\n"


class AggregatedQuery(BaseSchema):
    text: str
    truncated: bool = False


class RetrievalUnit(BaseSchema):
    block: Block
    pair: PairKey | None = None


class UnitSeeds(BaseSchema):
    block: int
    pair: PairKey | None = None
    seeds: tuple[ScoredItem, ...] = ()
    truncated: bool = False
    failed: bool = False
    error: str | None = None
    seconds: float = Field(default=0.0, ge=0)


class RetrievalResult(BaseSchema):
    units: tuple[UnitSeeds, ...] = ()
    rac_count: int = 0
    seconds: float = Field(default=0.0, ge=0)

    def by_block(self) -> dict[int, UnitSeeds]:
        return {unit.block: unit for unit in self.units if unit.pair is None}

    def by_pair(self) -> dict[PairKey, UnitSeeds]:
        return {unit.pair: unit for unit in self.units if unit.pair is not None}


def aggregate_block_query(block: Block, dataset: Dataset, char_cap: int = 8000) -> AggregatedQuery:
    if not block.pairs:
        raise UsageError(messages.EMPTY_BLOCK.format(ordinal=block.ordinal))
    text = QUERY_SEPARATOR.join(serialize_pair_query(pair, dataset) for pair in block.pairs)
    if len(text) > char_cap:
        return AggregatedQuery(text=text[:char_cap], truncated=True)
    return AggregatedQuery(text=text)


def block_units(blocks: Sequence[Block]) -> list[RetrievalUnit]:
    return [RetrievalUnit(block=block) for block in blocks]


def per_query_units(blocks: Sequence[Block]) -> list[RetrievalUnit]:
    """One singleton unit per pair, keeping the parent block ordinal."""
    return [
        RetrievalUnit(
            block=Block(
                ordinal=block.ordinal,
                key=block.key,
                source_ids=(pair.source_id,),
                target_ids=(pair.target_id,),
                pairs=(pair,),
                parent_ordinal=block.parent_ordinal,
            ),
            pair=pair_key(pair),
        )
        for block in blocks
        for pair in block.pairs
    ]


def seed_kind(granularity: Granularity) -> ItemKind:
    # triple context is traversed from entity seeds
    return ItemKind.PREDICATE if granularity is Granularity.PREDICATE else ItemKind.ENTITY


async def retrieve_unit(
    unit: RetrievalUnit,
    dataset: Dataset,
    index: VectorIndex,
    embedder: Embedder,
    config: RetrievalConfig,
    counters: RunCounters,
) -> UnitSeeds:
    start = time.perf_counter()
    query = aggregate_block_query(unit.block, dataset, config.query_char_cap)
    if query.truncated:
        counters.truncated_queries += 1
        logger.debug("aggregate query of block %d truncated", unit.block.ordinal)

    try:
        counters.embed_calls += 1
        (vector,) = await embedder.embed([query.text])
        counters.topk_calls += 1
        seeds = index.topk(vector, config.k, seed_kind(config.granularity))
    except BlockRagError as e:
        counters.failed_retrievals += 1
        logger.warning("retrieval for block %d failed: %s", unit.block.ordinal, e)
        return UnitSeeds(
            block=unit.block.ordinal,
            pair=unit.pair,
            truncated=query.truncated,
            failed=True,
            error=str(e),
            seconds=time.perf_counter() - start,
        )

    return UnitSeeds(
        block=unit.block.ordinal,
        pair=unit.pair,
        seeds=tuple(seeds),
        truncated=query.truncated,
        seconds=time.perf_counter() - start,
    )


async def batch_retrieve(
    units: Sequence[RetrievalUnit],
    dataset: Dataset,
    index: VectorIndex,
    embedder: Embedder,
    config: RetrievalConfig,
    *,
    counters: RunCounters | None = None,
    parallelism: int = 4,
) -> RetrievalResult:
    counters = counters if counters is not None else RunCounters()
    semaphore = asyncio.Semaphore(parallelism)

    async def bounded(unit: RetrievalUnit) -> UnitSeeds:
        async with semaphore:
            return await retrieve_unit(unit, dataset, index, embedder, config, counters)

    start = time.perf_counter()
    results = await asyncio.gather(*(bounded(unit) for unit in units))
    seconds = time.perf_counter() - start

    logger.info(
        "retrieval: %d calls, %d failed, %d truncated queries",
        len(units),
        sum(1 for result in results if result.failed),
        sum(1 for result in results if result.truncated),
    )
    return RetrievalResult(units=tuple(results), rac_count=len(units), seconds=seconds)
