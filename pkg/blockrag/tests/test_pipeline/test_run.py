import json
import re
from collections.abc import Callable

import pytest

from blockrag.core.config import Granularity, RunConfig
from blockrag.core.errors import ConfigError
from blockrag.evaluation.report import DECISIONS_FILE, read_decisions
from blockrag.pipeline import ResourcePool, merge_contexts, run, run_pipeline, select_labeled
from blockrag.schemas.knowledge import ContextBundle, ContextItem, ContextSource
from blockrag.schemas.records import Dataset, PairKey
from blockrag.schemas.results import RunMetrics

ID_RE = re.compile(r"(?:^<|, )([QP]\d+)")


async def test_llm_em_makes_no_retrieval_calls(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config(variant="llm_em"), pool)

    counters = outcome.metrics.counters
    assert outcome.metrics.rac_count == 0
    assert (counters.embed_calls, counters.topk_calls, counters.kg_calls) == (0, 0, 0)
    assert outcome.retrieval is None
    assert outcome.contexts == ()
    assert outcome.metrics.f1 == pytest.approx(1.0)


async def test_tiny_run_scores_every_labeled_pair(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config(), pool)

    metrics = outcome.metrics
    # (a1, b2) shares no q-gram and is pruned, it counts as predicted no
    assert (metrics.tp, metrics.fp, metrics.fn, metrics.tn) == (3, 0, 0, 4)
    assert metrics.pair_count == 6
    assert metrics.labeled_pairs == 7
    assert PairKey("a1", "b2") not in {d.key for d in outcome.decisions}
    assert metrics.counters.parsed == 6
    assert metrics.counters.fallback_default == 0
    assert metrics.seconds_total >= metrics.stage_seconds.blocking


@pytest.mark.parametrize("max_bs", [1, 2, 6])
async def test_optimisations_keep_quality_and_batch_retrieval_saves_calls(
    make_config: Callable[..., RunConfig], pool: ResourcePool, max_bs: int
) -> None:
    results: dict[str, RunMetrics] = {}
    for variant in ("rag4em", "ce_rag4em_br", "ce_rag4em_bg", "ce_rag4em_br_bg"):
        config = make_config(f"blocking.max_bs={max_bs}", variant=variant)
        results[variant] = (await run_pipeline(config, pool)).metrics

    assert len({m.f1 for m in results.values()}) == 1
    assert results["rag4em"].rac_count == results["rag4em"].pair_count
    assert results["ce_rag4em_bg"].rac_count == results["rag4em"].rac_count
    assert results["ce_rag4em_br"].rac_count == results["ce_rag4em_br"].block_count
    assert results["ce_rag4em_br"].rac_count <= results["rag4em"].rac_count
    if max_bs > 1:
        assert results["ce_rag4em_br"].rac_count < results["rag4em"].rac_count
        assert (
            results["ce_rag4em_br_bg"].counters.completion_calls
            < results["ce_rag4em_br"].counters.completion_calls
        )


async def test_batch_generation_prompts_once_per_block(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config(variant="ce_rag4em_br_bg"), pool)

    assert outcome.metrics.counters.completion_calls == outcome.metrics.block_count
    assert len(outcome.batches) == outcome.metrics.block_count
    assert outcome.metrics.counters.batches_clean == outcome.metrics.block_count


async def test_node_context_is_capped_at_k(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config("retrieval.k=3", variant="ce_rag4em_br"), pool)

    assert outcome.contexts
    assert all(len(bundle) == 3 for bundle in outcome.contexts)
    assert all(ID_RE.search("<" + bundle.texts[0]) for bundle in outcome.contexts)


async def test_bfs_with_d_max_one_uses_direct_seed_edges_only(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config(
        "retrieval.granularity=triple",
        "retrieval.k=6",
        "search.d_max=1",
        "search.triple_top_k=10",
        variant="ce_kg_rag4em_br",
        traversal="bfs",
    )

    outcome = await run_pipeline(config, pool)

    assert outcome.retrieval is not None
    seeds = {unit.block: {s.item_id for s in unit.seeds} for unit in outcome.retrieval.units}
    for bundle in outcome.contexts:
        for text in bundle.texts:
            head, _, tail = ID_RE.findall(text)
            assert {head, tail} <= seeds[bundle.block]
    assert outcome.metrics.counters.kg_calls == outcome.metrics.rac_count


async def test_exp_context_holds_enriched_triples(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config(
        "retrieval.granularity=triple", variant="ce_kg_rag4em_br_bg", traversal="exp"
    )

    outcome = await run_pipeline(config, pool)

    texts = [text for bundle in outcome.contexts for text in bundle.texts]
    assert texts
    assert all(text.startswith("<") and text.endswith(">") for text in texts)
    assert all(len(bundle) <= 2 for bundle in outcome.contexts)
    assert outcome.metrics.counters.exp_visited > 0
    assert outcome.metrics.f1 == pytest.approx(1.0)


async def test_run_writes_decisions_and_report(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config()

    outcome, paths = await run(config, pool)

    decisions = read_decisions(config.output_dir / config.run_label() / DECISIONS_FILE)
    assert [d.key for d in decisions] == [d.key for d in outcome.decisions]
    assert json.loads(paths.json_path.read_text())["metrics"]["f1"] == pytest.approx(1.0)


async def test_index_dimension_must_match_config(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    index = await pool.index(make_config("retrieval.dimension=64"))

    assert index.dimension == 64
    assert await pool.index(make_config("retrieval.dimension=64")) is index
    with pytest.raises(ConfigError):
        await pool.index(make_config("retrieval.dimension=32"))


def test_select_labeled_is_seeded_and_ordered(
    make_config: Callable[..., RunConfig], tiny_dataset: Dataset
) -> None:
    first = select_labeled(tiny_dataset, make_config(max_pairs=3, seed=4))
    again = select_labeled(tiny_dataset, make_config(max_pairs=3, seed=4))
    everything = select_labeled(tiny_dataset, make_config(max_pairs=50))

    assert first == again
    assert len(first) == 3
    order = [p.key for p in tiny_dataset.labeled_pairs]
    assert [order.index(p.key) for p in first] == sorted(order.index(p.key) for p in first)
    assert everything == list(tiny_dataset.labeled_pairs)


def test_merge_contexts_interleaves_ranks_and_keeps_top_k() -> None:
    def bundle(*texts: str) -> ContextBundle:
        return ContextBundle(
            block=0,
            granularity=Granularity.ENTITY,
            items=tuple(
                ContextItem(rank=i, text=t, source=ContextSource.VECTOR, seed_rank=i)
                for i, t in enumerate(texts, start=1)
            ),
        )

    bundles = [bundle("Q1", "Q2"), bundle("Q3", "Q1"), bundle("Q2", "Q4")]

    merged = merge_contexts(bundles, block=7, top_k=2)
    wide = merge_contexts(bundles, block=7, top_k=10)

    assert merged is not None
    assert merged.block == 7
    assert merged.texts == ["Q1", "Q3"]
    assert [item.rank for item in merged.items] == [1, 2]
    assert wide is not None
    assert wide.texts == ["Q1", "Q3", "Q2", "Q4"]
    assert merge_contexts([], block=0, top_k=2) is None


async def test_per_pair_seconds_conserve_stage_totals(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    metrics = (await run_pipeline(make_config(variant="ce_rag4em_br_bg"), pool)).metrics

    for stage, total in metrics.stage_seconds.model_dump().items():
        per_pair = getattr(metrics.per_pair_seconds, stage)
        assert per_pair * metrics.pair_count == pytest.approx(total, abs=1e-9)


async def test_report_echoes_a_reparsable_config(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config("blocking.method=xqgram", "search.d_max=2", max_pairs=5, seed=3)

    outcome, paths = await run(config, pool)
    document = json.loads(paths.json_path.read_text())

    assert RunConfig.model_validate(document["config"]) == config
    assert document["seed"] == 3
    assert outcome.retrieval is not None
    assert document["metrics"]["rac_count"] == outcome.retrieval.rac_count


async def test_repeated_runs_agree_on_everything_but_timing(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config("retrieval.granularity=triple", variant="ce_kg_rag4em_br", traversal="exp")
    timing = {"seconds_total", "stage_seconds", "per_pair_seconds"}

    first = await run_pipeline(config, pool)
    second = await run_pipeline(config, pool)

    assert first.metrics.model_dump(exclude=timing) == second.metrics.model_dump(exclude=timing)
    assert first.decisions == second.decisions
    assert first.contexts == second.contexts


@pytest.mark.parametrize("variant", ["ce_rag4em_bg", "ce_kg_rag4em_bg"])
async def test_shared_block_context_stays_within_top_k(
    make_config: Callable[..., RunConfig], pool: ResourcePool, variant: str
) -> None:
    overrides = ["blocking.max_bs=6", "retrieval.k=2", "search.triple_top_k=2"]
    fields: dict[str, str] = {"variant": variant}
    if variant.startswith("ce_kg"):
        overrides.append("retrieval.granularity=triple")
        fields["traversal"] = "exp"
    config = make_config(*overrides, **fields)

    outcome = await run_pipeline(config, pool)

    shared = [bundle for bundle in outcome.contexts if bundle.pair is None]
    assert shared
    assert all(len(bundle) <= config.context_top_k for bundle in shared)


async def test_per_query_retrieval_cost_stays_with_its_pair(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config(variant="rag4em"), pool)

    assert outcome.retrieval is not None
    own = {(unit.block, unit.pair): unit.seconds for unit in outcome.retrieval.units}
    assert len(outcome.pair_costs) == outcome.metrics.pair_count
    for cost in outcome.pair_costs:
        assert cost.retrieval == own[(cost.block, cost.key)]


async def test_block_costs_split_evenly_and_conserve_block_time(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    outcome = await run_pipeline(make_config(variant="ce_rag4em_br_bg"), pool)

    assert outcome.retrieval is not None
    by_block = {unit.block: unit.seconds for unit in outcome.retrieval.units}
    sizes = {block.ordinal: block.size for block in outcome.blocks}
    assert [cost.block for cost in outcome.block_costs] == [block.ordinal for block in outcome.blocks]
    for block_cost in outcome.block_costs:
        assert block_cost.pairs == sizes[block_cost.block]
        assert block_cost.retrieval == pytest.approx(by_block[block_cost.block])
    for cost in outcome.pair_costs:
        assert cost.retrieval == pytest.approx(by_block[cost.block] / sizes[cost.block])


async def test_run_writes_pair_seconds_and_block_costs(
    make_config: Callable[..., RunConfig], pool: ResourcePool
) -> None:
    config = make_config(variant="ce_rag4em_br")

    outcome, paths = await run(config, pool)

    lines = [
        json.loads(line)
        for line in (config.output_dir / config.run_label() / DECISIONS_FILE).read_text().splitlines()
    ]
    assert all(line["seconds"] >= 0 for line in lines)
    document = json.loads(paths.json_path.read_text())
    assert len(document["blocks"]) == outcome.metrics.block_count
    assert sum(block["pairs"] for block in document["blocks"]) == outcome.metrics.pair_count
