from collections.abc import Sequence

from blockrag.core.config import Granularity
from blockrag.schemas.knowledge import ContextBundle, ContextCandidate, ContextItem, ContextSource
from blockrag.schemas.records import PairKey


def candidate_order(candidate: ContextCandidate) -> tuple[int, ...]:
    # bfs keeps emission order, vector and exp rank by their seed first
    if candidate.source is ContextSource.BFS:
        return (candidate.position,)
    return (candidate.seed_rank, candidate.position)


def refine(
    candidates: Sequence[ContextCandidate],
    granularity: Granularity,
    top_k: int,
    *,
    block: int = 0,
    pair: PairKey | None = None,
) -> ContextBundle:
    ordered = sorted(candidates, key=candidate_order)[:top_k]
    return ContextBundle(
        block=block,
        pair=pair,
        granularity=granularity,
        items=tuple(
            ContextItem(
                rank=rank,
                text=candidate.text,
                source=candidate.source,
                seed_rank=candidate.seed_rank,
            )
            for rank, candidate in enumerate(ordered, start=1)
        ),
    )
