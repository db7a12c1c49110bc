# Block construction over R = T_s + T_t, within-block Cartesian pairs,
# first-occurrence deduplication and max_bs decomposition.
#
# Ordinals follow first appearance of a key while scanning records in input
# order (keys of one record in sorted order), this defines the "earliest
# block" used by deduplicate.

import json
import logging
from collections.abc import Collection, Iterable
from pathlib import Path

from blockrag.blocking.keys import block_keys
from blockrag.core import messages
from blockrag.core.config import BlockingConfig
from blockrag.core.errors import ConfigError, UsageError
from blockrag.schemas.blocks import Block
from blockrag.schemas.records import CandidatePair, Dataset, PairKey, Record, TableSide, pair_key

logger = logging.getLogger(__name__)


def build_blocks(records: Iterable[Record], config: BlockingConfig) -> list[Block]:
    members: dict[str, tuple[list[str], list[str]]] = {}
    seen: set[tuple[TableSide, str]] = set()

    for record in records:
        if (record.table_side, record.record_id) in seen:
            raise UsageError(messages.DATASET_DUPLICATE_ID.format(record_id=record.record_id))
        seen.add((record.table_side, record.record_id))

        for key in sorted(block_keys(record, config)):
            sources, targets = members.setdefault(key, ([], []))
            if record.table_side is TableSide.SOURCE:
                sources.append(record.record_id)
            else:
                targets.append(record.record_id)

    return [
        Block(ordinal=ordinal, key=key, source_ids=tuple(sources), target_ids=tuple(targets))
        for ordinal, (key, (sources, targets)) in enumerate(members.items())
    ]


def generate_pairs(block: Block) -> list[CandidatePair]:
    return [
        CandidatePair(source_id=source_id, target_id=target_id, origin_block=block.ordinal)
        for source_id in block.source_ids
        for target_id in block.target_ids
    ]


def with_pairs(blocks: Iterable[Block], allowed: Collection[PairKey] | None = None) -> list[Block]:
    """Fill every block with its pairs, optionally keeping only allowed keys."""
    filled = []
    for block in blocks:
        pairs = generate_pairs(block)
        if allowed is not None:
            pairs = [pair for pair in pairs if pair_key(pair) in allowed]
        filled.append(block.model_copy(update={"pairs": tuple(pairs)}))
    return filled


def deduplicate(blocks: Iterable[Block]) -> list[Block]:
    seen: set[PairKey] = set()
    kept_blocks = []

    for block in sorted(blocks, key=lambda b: b.ordinal):
        kept = []
        for pair in block.pairs:
            key = pair_key(pair)
            if key in seen:
                continue
            seen.add(key)
            kept.append(pair)
        if kept:
            kept_blocks.append(block.model_copy(update={"pairs": tuple(kept)}))

    return kept_blocks


def decompose(blocks: Iterable[Block], max_bs: int) -> list[Block]:
    if max_bs < 1:
        raise ConfigError(messages.CONFIG_MAX_BS_INVALID.format(max_bs=max_bs))

    sub_blocks = []
    for block in blocks:
        for start in range(0, len(block.pairs), max_bs):
            ordinal = len(sub_blocks)
            chunk = [
                pair.model_copy(update={"origin_block": ordinal})
                for pair in block.pairs[start : start + max_bs]
            ]
            sub_blocks.append(
                Block(
                    ordinal=ordinal,
                    key=block.key,
                    source_ids=tuple(dict.fromkeys(pair.source_id for pair in chunk)),
                    target_ids=tuple(dict.fromkeys(pair.target_id for pair in chunk)),
                    pairs=tuple(chunk),
                    parent_ordinal=block.ordinal,
                )
            )
    return sub_blocks


def plan_blocks(
    dataset: Dataset,
    config: BlockingConfig,
    allowed: Collection[PairKey] | None = None,
) -> list[Block]:
    """Full blocking stage: build, pair, (restrict), dedup, decompose."""
    raw = build_blocks(dataset.records, config)
    deduplicated = deduplicate(with_pairs(raw, allowed))
    decomposed = decompose(deduplicated, config.max_bs)
    logger.info(
        "blocking %s: %d keys, %d blocks after dedup, %d sub-blocks, %d pairs",
        config.method,
        len(raw),
        len(deduplicated),
        len(decomposed),
        sum(block.size for block in decomposed),
    )
    return decomposed


def write_blocks_file(path: Path, blocks: Iterable[Block]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as f:
        for block in blocks:
            f.write(json.dumps(block.to_line(), ensure_ascii=False) + "\n")
            count += 1
    return count
