from collections.abc import Iterable, Mapping
from typing import NamedTuple

from blockrag.core import messages
from blockrag.core.errors import IntegrityError, UsageError
from blockrag.schemas.blocks import Block
from blockrag.schemas.records import Decision, LabeledPair, MatchDecision, PairKey, pair_key
from blockrag.schemas.results import BlockCost, CostUnit, PairCost


class Confusion(NamedTuple):
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class Scores(NamedTuple):
    precision: float
    recall: float
    f1: float


def decision_map(decisions: Iterable[MatchDecision]) -> dict[PairKey, Decision]:
    by_key: dict[PairKey, Decision] = {}
    for decision in decisions:
        if decision.key in by_key:
            raise IntegrityError(
                messages.DUPLICATE_DECISION.format(
                    source_id=decision.source_id, target_id=decision.target_id
                )
            )
        by_key[decision.key] = decision.decision
    return by_key


def confusion(decisions: Iterable[MatchDecision], labeled_pairs: Iterable[LabeledPair]) -> Confusion:
    """Counts over the labeled pairs; a pair without a decision is predicted no."""
    predicted = decision_map(decisions)
    tp = fp = fn = tn = 0
    for labeled in labeled_pairs:
        said_yes = predicted.get(labeled.key) is Decision.YES
        if labeled.label == 1:
            tp, fn = (tp + 1, fn) if said_yes else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if said_yes else (fp, tn + 1)
    return Confusion(tp, fp, fn, tn)


def prf1(counts: Confusion) -> Scores:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores(precision, recall, f1)


def amortize(seconds: float, pairs: int) -> float:
    if pairs < 1:
        raise UsageError(messages.ZERO_PAIRS.format(pairs=pairs))
    return seconds / pairs


def pair_share(seconds: Mapping[CostUnit, float], block: Block, key: PairKey) -> float:
    return amortize(seconds.get((block.ordinal, None), 0.0), block.size) + seconds.get(
        (block.ordinal, key), 0.0
    )


def pair_costs(
    blocks: Iterable[Block],
    *,
    retrieval: Mapping[CostUnit, float],
    context: Mapping[CostUnit, float],
    generation: Mapping[CostUnit, float],
) -> list[PairCost]:
    """Per-pair seconds: block-level costs spread uniformly, per-pair costs kept whole.

    A pair retrieved or prompted on its own is a block of one, so its cost
    passes through unchanged.
    """
    costs = []
    for block in blocks:
        for pair in block.pairs:
            key = pair_key(pair)
            costs.append(
                PairCost(
                    source_id=pair.source_id,
                    target_id=pair.target_id,
                    block=block.ordinal,
                    retrieval=pair_share(retrieval, block, key),
                    context=pair_share(context, block, key),
                    generation=pair_share(generation, block, key),
                )
            )
    return costs


def block_costs(costs: Iterable[PairCost]) -> list[BlockCost]:
    grouped: dict[int, list[PairCost]] = {}
    for cost in costs:
        grouped.setdefault(cost.block, []).append(cost)
    return [
        BlockCost(
            block=block,
            pairs=len(members),
            retrieval=sum(cost.retrieval for cost in members),
            context=sum(cost.context for cost in members),
            generation=sum(cost.generation for cost in members),
            per_pair_seconds=amortize(sum(cost.total for cost in members), len(members)),
        )
        for block, members in grouped.items()
    ]
