import random

from blockrag.core.config import Granularity
from blockrag.kgsearch.refinement import refine
from blockrag.schemas.knowledge import ContextCandidate, ContextSource
from blockrag.schemas.records import PairKey


def candidate(text: str, source: ContextSource, seed_rank: int, position: int) -> ContextCandidate:
    return ContextCandidate(text=text, source=source, seed_rank=seed_rank, position=position)


def test_exp_candidates_rank_by_seed_then_position() -> None:
    candidates = [
        candidate("c", ContextSource.EXP, 2, 0),
        candidate("a", ContextSource.EXP, 1, 1),
        candidate("b", ContextSource.EXP, 1, 2),
    ]

    bundle = refine(candidates, Granularity.TRIPLE, 2, block=3, pair=PairKey("a1", "b1"))

    assert bundle.texts == ["a", "b"]
    assert [item.rank for item in bundle.items] == [1, 2]
    assert bundle.block == 3
    assert bundle.pair == PairKey("a1", "b1")


def test_bfs_candidates_keep_emission_order() -> None:
    candidates = [
        candidate("late", ContextSource.BFS, 1, 5),
        candidate("early", ContextSource.BFS, 3, 0),
    ]

    assert refine(candidates, Granularity.TRIPLE, 5).texts == ["early", "late"]


def test_fewer_candidates_than_top_k_and_empty_input() -> None:
    one = [candidate("only", ContextSource.VECTOR, 1, 0)]

    assert len(refine(one, Granularity.ENTITY, 10)) == 1
    assert len(refine([], Granularity.ENTITY, 10)) == 0


def test_refine_is_independent_of_input_order() -> None:
    rng = random.Random(2)
    for source in ContextSource:
        candidates = [
            candidate(f"t{i}", source, rng.randint(1, 5), i) for i in rng.sample(range(40), 20)
        ]
        expected = refine(candidates, Granularity.TRIPLE, 7)
        for _ in range(10):
            shuffled = rng.sample(candidates, len(candidates))
            assert refine(shuffled, Granularity.TRIPLE, 7) == expected
