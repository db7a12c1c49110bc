# Run orchestration: blocking, retrieval, triple search, enrichment and
# refinement, generation, evaluation.
#
# Variant axes:
#   batch_retrieval  - one retrieval per (sub-)block, otherwise one per pair
#   batch_generation - one prompt per (sub-)block, otherwise one per pair
#   uses_kg          - triple context from BFS/EXP around the retrieved seeds
# llm_em skips retrieval and knowledge entirely.

import asyncio
import itertools
import logging
import random
import time
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from blockrag.blocking.blocks import plan_blocks
from blockrag.core import messages
from blockrag.core.config import (
    Granularity,
    RunConfig,
    Settings,
    Traversal,
    Variant,
    build_run_config,
    get_settings,
)
from blockrag.core.errors import BlockRagError, ConfigError, DatasetLoadError, UsageError
from blockrag.core.serialization import serialize_pair_query
from blockrag.evaluation.dataset import load_dataset
from blockrag.evaluation.metrics import amortize, block_costs, confusion, pair_costs, prf1
from blockrag.evaluation.report import DECISIONS_FILE, ReportPaths, emit_report, write_decisions
from blockrag.evaluation.timing import StageClock
from blockrag.generation.backends import CompletionBackend, new_backend
from blockrag.generation.engine import Generator
from blockrag.kgsearch.enrichment import DescriptionProvider, Enricher, WikidataDescriptionProvider
from blockrag.kgsearch.graph import KnowledgeGraph, load_edges
from blockrag.kgsearch.refinement import refine
from blockrag.kgsearch.traversal import TraversalResult, bfs_triples, exp_triples
from blockrag.retrieval.batch import (
    RetrievalResult,
    UnitSeeds,
    batch_retrieve,
    block_units,
    per_query_units,
)
from blockrag.retrieval.catalog import load_catalog
from blockrag.retrieval.embedder import Embedder, new_embedder
from blockrag.retrieval.index import VectorIndex
from blockrag.schemas.blocks import Block
from blockrag.schemas.knowledge import (
    ContextBundle,
    ContextCandidate,
    ContextItem,
    ContextSource,
)
from blockrag.schemas.records import (
    BaseSchema,
    Dataset,
    LabeledPair,
    MatchDecision,
    PairKey,
    Provenance,
    pair_key,
)
from blockrag.schemas.results import (
    BatchResult,
    BlockCost,
    CostUnit,
    PairCost,
    RunCounters,
    RunMetrics,
    StageSeconds,
)

logger = logging.getLogger(__name__)

GRID_KEYS = ("max_bs", "blocking", "granularity", "traversal", "top_k")


class RunOutcome(BaseSchema):
    metrics: RunMetrics
    decisions: tuple[MatchDecision, ...] = ()
    blocks: tuple[Block, ...] = ()
    contexts: tuple[ContextBundle, ...] = ()
    batches: tuple[BatchResult, ...] = ()
    retrieval: RetrievalResult | None = None
    pair_costs: tuple[PairCost, ...] = ()
    block_costs: tuple[BlockCost, ...] = ()


class SweepPoint(BaseSchema):
    params: dict[str, str | int]
    metrics: RunMetrics | None = None
    report: Path | None = None
    error: str | None = None


class ResourcePool:
    """Loads datasets, indexes, graphs and clients once and shares them across runs."""

    def __init__(
        self,
        settings: Settings | None = None,
        *,
        embedder: Embedder | None = None,
        backend: CompletionBackend | None = None,
        provider: DescriptionProvider | None = None,
    ) -> None:
        self.settings = settings if settings is not None else get_settings()
        self._embedder = embedder
        self._backend = backend
        self._provider = provider
        self._owned: list[Embedder | CompletionBackend | DescriptionProvider] = []
        self._datasets: dict[tuple[Any, ...], Dataset] = {}
        self._indexes: dict[tuple[Any, ...], VectorIndex] = {}
        self._graphs: dict[tuple[Any, ...], KnowledgeGraph] = {}

    def dataset(self, config: RunConfig) -> Dataset:
        key = (config.dataset_path, config.splits, config.name)
        if key not in self._datasets:
            self._datasets[key] = load_dataset(config.dataset_path, config.splits, config.name)
        return self._datasets[key]

    def embedder(self, config: RunConfig) -> Embedder:
        if self._embedder is None:
            self._embedder = new_embedder(
                config.retrieval.embedder, config.retrieval.dimension, self.settings.embedder
            )
            self._owned.append(self._embedder)
        return self._embedder

    def backend(self, config: RunConfig) -> CompletionBackend:
        if self._backend is None:
            self._backend = new_backend(config.generation, self.settings.llm)
            self._owned.append(self._backend)
        return self._backend

    def provider(self) -> DescriptionProvider | None:
        if self._provider is None and self.settings.wikidata.online:
            self._provider = WikidataDescriptionProvider(self.settings.wikidata)
            self._owned.append(self._provider)
        return self._provider

    async def index(self, config: RunConfig) -> VectorIndex:
        key = (config.kg_index, config.kg_catalog, config.retrieval.dimension)
        if key in self._indexes:
            return self._indexes[key]

        if config.kg_index is not None and (config.kg_index.is_file() or config.kg_catalog is None):
            index = VectorIndex.load(config.kg_index)
            logger.info("loaded index %s with %d items", config.kg_index, len(index))
        elif config.kg_catalog is not None:
            index = await VectorIndex.build(load_catalog(config.kg_catalog), self.embedder(config))
        else:
            raise ConfigError(
                messages.CONFIG_MISSING_KG_PATH.format(variant=config.variant, field="kg_catalog")
            )

        if index.dimension != config.retrieval.dimension:
            raise ConfigError(
                messages.INDEX_DIMENSION_MISMATCH.format(
                    found=config.retrieval.dimension, expected=index.dimension
                )
            )
        self._indexes[key] = index
        return index

    def graph(self, config: RunConfig, index: VectorIndex) -> KnowledgeGraph:
        key = (config.kg_catalog, config.kg_edges, config.kg_index)
        if key not in self._graphs:
            catalog = load_catalog(config.kg_catalog) if config.kg_catalog else index.items
            edges = load_edges(config.kg_edges) if config.kg_edges is not None else []
            try:
                self._graphs[key] = KnowledgeGraph(catalog, edges)
            except UsageError as e:
                raise DatasetLoadError(str(e), path=config.kg_edges or Path(".")) from e
        return self._graphs[key]

    async def aclose(self) -> None:
        for client in self._owned:
            await client.aclose()
        self._owned.clear()


def select_labeled(dataset: Dataset, config: RunConfig) -> list[LabeledPair]:
    labeled = list(dataset.labeled_pairs)
    if config.max_pairs is None or config.max_pairs >= len(labeled):
        return labeled
    chosen = set(random.Random(config.seed).sample(range(len(labeled)), config.max_pairs))
    return [pair for i, pair in enumerate(labeled) if i in chosen]


def merge_contexts(
    contexts: Iterable[ContextBundle], block: int, top_k: int
) -> ContextBundle | None:
    """Shared block context from per-pair contexts, at most top_k items.

    Items are taken rank by rank across the pairs (every pair's first item
    before any second one), in pair order within a rank, first occurrence of
    each text kept.
    """
    bundles = list(contexts)
    if not bundles:
        return None
    ranked = [
        (item.rank, position, item)
        for position, bundle in enumerate(bundles)
        for item in bundle.items
    ]
    items: dict[str, ContextItem] = {}
    for _, _, item in sorted(ranked, key=lambda entry: entry[:2]):
        if len(items) == top_k:
            break
        if item.text not in items:
            items[item.text] = item.model_copy(update={"rank": len(items) + 1})
    return ContextBundle(
        block=block, granularity=bundles[0].granularity, items=tuple(items.values())
    )


class ContextBuilder:
    """Turns retrieved seeds into refined, enriched context bundles."""

    def __init__(
        self,
        config: RunConfig,
        kg: KnowledgeGraph,
        enricher: Enricher,
        clock: StageClock,
        counters: RunCounters,
    ) -> None:
        self.config = config
        self.kg = kg
        self.enricher = enricher
        self.clock = clock
        self.counters = counters

    def traverse(self, seeds: Sequence[str]) -> TraversalResult:
        self.counters.kg_calls += 1
        if self.config.traversal is Traversal.BFS:
            result = bfs_triples(self.kg, seeds, self.config.search)
            self.counters.bfs_visited += result.visited
        else:
            result = exp_triples(self.kg, seeds, self.config.search)
            self.counters.exp_visited += result.visited
        self.counters.missing_seeds += len(result.missing_seeds)
        return result

    async def node_candidates(self, unit: UnitSeeds) -> list[ContextCandidate]:
        return [
            ContextCandidate(
                text=await self.enricher.enrich_item(seed.item_id),
                source=ContextSource.VECTOR,
                seed_rank=rank,
                position=rank - 1,
                score=seed.score,
            )
            for rank, seed in enumerate(unit.seeds, start=1)
        ]

    async def triple_candidates(self, traversal: TraversalResult) -> list[ContextCandidate]:
        source = ContextSource.BFS if self.config.traversal is Traversal.BFS else ContextSource.EXP
        return [
            ContextCandidate(
                text=await self.enricher.enrich_triple(found.triple),
                source=source,
                seed_rank=found.seed_rank,
                position=found.position,
            )
            for found in traversal.triples
        ]

    async def build(self, unit: UnitSeeds) -> ContextBundle:
        if self.config.granularity is Granularity.TRIPLE:
            with self.clock.measure("expansion"):
                traversal = self.traverse([seed.item_id for seed in unit.seeds])
            with self.clock.measure("enrichment"):
                candidates = await self.triple_candidates(traversal)
        else:
            with self.clock.measure("enrichment"):
                candidates = await self.node_candidates(unit)
        return refine(
            candidates,
            self.config.granularity,
            self.config.context_top_k,
            block=unit.block,
            pair=unit.pair,
        )


async def run_pipeline(config: RunConfig, pool: ResourcePool) -> RunOutcome:
    started = time.perf_counter()
    clock = StageClock()
    counters = RunCounters()
    variant = config.variant

    dataset = pool.dataset(config)
    labeled = select_labeled(dataset, config)
    allowed = {pair.key for pair in labeled} if config.blocking.restrict_to_labeled else None

    with clock.measure("blocking"):
        blocks = plan_blocks(dataset, config.blocking, allowed)
    queries = {
        pair_key(pair): serialize_pair_query(pair, dataset) for block in blocks for pair in block.pairs
    }

    retrieval: RetrievalResult | None = None
    block_context: dict[int, ContextBundle] = {}
    pair_context: dict[PairKey, ContextBundle] = {}
    merged_context: dict[int, ContextBundle] = {}
    retrieval_seconds: dict[CostUnit, float] = {}
    context_seconds: dict[CostUnit, float] = {}
    if variant.uses_retrieval:
        index = await pool.index(config)
        units = block_units(blocks) if variant.batch_retrieval else per_query_units(blocks)
        retrieval = await batch_retrieve(
            units,
            dataset,
            index,
            pool.embedder(config),
            config.retrieval,
            counters=counters,
            parallelism=config.parallelism,
        )
        clock.add("retrieval", retrieval.seconds)
        retrieval_seconds = {(unit.block, unit.pair): unit.seconds for unit in retrieval.units}

        builder = ContextBuilder(
            config,
            pool.graph(config, index),
            Enricher(pool.graph(config, index), pool.provider(), counters),
            clock,
            counters,
        )
        for unit in retrieval.units:
            start = time.perf_counter()
            bundle = await builder.build(unit)
            context_seconds[(unit.block, unit.pair)] = time.perf_counter() - start
            if unit.pair is None:
                block_context[unit.block] = bundle
            else:
                pair_context[unit.pair] = bundle

    def context_for(block: Block, key: PairKey) -> ContextBundle | None:
        if key in pair_context:
            return pair_context[key]
        return block_context.get(block.ordinal)

    generator = Generator(
        pool.backend(config), config.generation, counters=counters, parallelism=config.parallelism
    )

    async def generate(block: Block) -> tuple[list[MatchDecision], BatchResult | None]:
        keys = [pair_key(pair) for pair in block.pairs]
        block_queries = [queries[key] for key in keys]
        if variant.batch_generation:
            if block.ordinal in block_context:
                shared: ContextBundle | None = block_context[block.ordinal]
            else:
                shared = merge_contexts(
                    (pair_context[key] for key in keys if key in pair_context),
                    block.ordinal,
                    config.context_top_k,
                )
                if shared is not None:
                    merged_context[block.ordinal] = shared
            result = await generator.decide_block(
                block.pairs, block_queries, shared, block=block.ordinal
            )
            return list(result.decisions), result
        decisions = await generator.decide_pairs(
            block.pairs,
            block_queries,
            [context_for(block, key) for key in keys],
            block=block.ordinal,
        )
        return decisions, None

    generation_start = time.perf_counter()
    generated = await asyncio.gather(*(generate(block) for block in blocks))
    clock.add("generation", time.perf_counter() - generation_start)

    decisions = [decision for block_decisions, _ in generated for decision in block_decisions]
    batches = [batch for _, batch in generated if batch is not None]
    counters.parsed = sum(1 for d in decisions if d.provenance is Provenance.PARSED)
    counters.fallback_default = len(decisions) - counters.parsed

    costs = pair_costs(
        blocks,
        retrieval=retrieval_seconds,
        context=context_seconds,
        generation=generator.unit_seconds,
    )

    counts = confusion(decisions, labeled)
    scores = prf1(counts)
    pair_count = len(decisions)
    stage_seconds = clock.stage_seconds()
    per_pair = (
        StageSeconds(
            **{
                stage: amortize(seconds, pair_count)
                for stage, seconds in stage_seconds.model_dump().items()
            }
        )
        if pair_count
        else StageSeconds()
    )

    metrics = RunMetrics(
        tp=counts.tp,
        fp=counts.fp,
        fn=counts.fn,
        tn=counts.tn,
        precision=scores.precision,
        recall=scores.recall,
        f1=scores.f1,
        rac_count=retrieval.rac_count if retrieval is not None else 0,
        pair_count=pair_count,
        block_count=len(blocks),
        labeled_pairs=len(labeled),
        seconds_total=time.perf_counter() - started,
        stage_seconds=stage_seconds,
        per_pair_seconds=per_pair,
        counters=counters,
    )
    logger.info(
        "%s: P=%.4f R=%.4f F1=%.4f rac=%d pairs=%d blocks=%d",
        config.run_label(),
        metrics.precision,
        metrics.recall,
        metrics.f1,
        metrics.rac_count,
        metrics.pair_count,
        metrics.block_count,
    )
    return RunOutcome(
        metrics=metrics,
        decisions=tuple(decisions),
        blocks=tuple(blocks),
        contexts=tuple(block_context.values())
        + tuple(pair_context.values())
        + tuple(merged_context.values()),
        batches=tuple(batches),
        retrieval=retrieval,
        pair_costs=tuple(costs),
        block_costs=tuple(block_costs(costs)),
    )


async def run(config: RunConfig, pool: ResourcePool) -> tuple[RunOutcome, ReportPaths]:
    """One full run plus its decisions file and reports."""
    outcome = await run_pipeline(config, pool)
    write_decisions(
        config.output_dir / config.run_label() / DECISIONS_FILE,
        outcome.decisions,
        {cost.key: cost for cost in outcome.pair_costs},
    )
    paths = emit_report(outcome.metrics, config, blocks=outcome.block_costs)
    logger.info("report written to %s", paths.json_path)
    return outcome, paths


def parse_grid(raw: Mapping[str, Sequence[str | int]]) -> dict[str, list[str | int]]:
    if not raw or any(len(values) == 0 for values in raw.values()):
        raise UsageError(messages.EMPTY_GRID)
    unknown = [key for key in raw if key not in GRID_KEYS]
    if unknown:
        raise UsageError(
            messages.UNKNOWN_GRID_KEY.format(key=unknown[0], allowed=", ".join(GRID_KEYS))
        )
    return {key: list(values) for key, values in raw.items()}


def grid_points(grid: Mapping[str, Sequence[str | int]]) -> list[dict[str, str | int]]:
    keys = list(grid)
    return [dict(zip(keys, values, strict=True)) for values in itertools.product(*grid.values())]


def apply_grid_point(config: RunConfig, point: Mapping[str, str | int]) -> RunConfig:
    """Config for one sweep point; granularity first, then traversal, then budgets."""
    data = config.model_dump()
    data["sweep"] = {}

    if "granularity" in point:
        granularity = Granularity(str(point["granularity"]))
        data["retrieval"]["granularity"] = granularity
        data["variant"] = Variant(data["variant"]).with_granularity(granularity)
        if granularity is Granularity.TRIPLE:
            data["traversal"] = data["traversal"] or Traversal.EXP
        else:
            data["traversal"] = None
    if "traversal" in point:
        data["traversal"] = point["traversal"]
    if "max_bs" in point:
        data["blocking"]["max_bs"] = point["max_bs"]
    if "blocking" in point:
        data["blocking"]["method"] = point["blocking"]
    if "top_k" in point:
        if data["retrieval"]["granularity"] is Granularity.TRIPLE:
            data["search"]["triple_top_k"] = point["top_k"]
        else:
            data["retrieval"]["k"] = point["top_k"]
    return build_run_config(data)


async def sweep(
    config: RunConfig,
    grid: Mapping[str, Sequence[str | int]],
    pool: ResourcePool,
) -> list[SweepPoint]:
    """One run per grid point sharing dataset, index and clients; failures are recorded."""
    points = []
    for params in grid_points(parse_grid(grid)):
        try:
            point_config = apply_grid_point(config, params)
            outcome, paths = await run(point_config, pool)
        except (BlockRagError, ValidationError) as e:
            logger.warning("sweep point %s failed: %s", params, e)
            points.append(SweepPoint(params=params, error=str(e)))
            continue
        points.append(SweepPoint(params=params, metrics=outcome.metrics, report=paths.json_path))

    failed = sum(1 for point in points if point.error is not None)
    logger.info("sweep finished: %d points, %d failed", len(points), failed)
    return points


async def index_kg(config: RunConfig, pool: ResourcePool, output: Path) -> VectorIndex:
    if config.kg_catalog is None:
        raise ConfigError(
            messages.CONFIG_MISSING_KG_PATH.format(variant=config.variant, field="kg_catalog")
        )
    index = await VectorIndex.build(load_catalog(config.kg_catalog), pool.embedder(config))
    index.save(output)
    logger.info("saved %d items to %s", len(index), output)
    return index
