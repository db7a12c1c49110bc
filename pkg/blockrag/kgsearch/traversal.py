# Triple search from ranked entity seeds.
#
# BFS: for each unordered seed pair (i < j) in rank order, one shortest path
# of at most d_max hops (first found under the sorted visit order). Triples
# keep their stored orientation even when walked backwards.
# EXP: one-hop incident edges of every seed, sorted and capped per seed.
# Both drop duplicate triples at their first position.
#
# Cost is counted in touched nodes. BFS reads the incident edges of every
# known seed once, then each pair search adds the nodes it dequeues and the
# neighbours it scans. EXP touches each seed and its capped neighbours.

import itertools
import logging
from collections import deque
from collections.abc import Sequence

from pydantic import Field

from blockrag.core.config import SearchConfig
from blockrag.kgsearch.graph import KnowledgeGraph
from blockrag.schemas.knowledge import Triple
from blockrag.schemas.records import BaseSchema

logger = logging.getLogger(__name__)


class TraversedTriple(BaseSchema):
    triple: Triple
    seed_rank: int = Field(ge=1)
    position: int = Field(ge=0)


class SeedPath(BaseSchema):
    source: str
    target: str
    triples: tuple[Triple, ...] = ()

    @property
    def found(self) -> bool:
        return bool(self.triples)


class TraversalResult(BaseSchema):
    triples: tuple[TraversedTriple, ...] = ()
    paths: tuple[SeedPath, ...] = ()
    visited: int = 0
    missing_seeds: tuple[str, ...] = ()


def present_seeds(kg: KnowledgeGraph, seeds: Sequence[str]) -> tuple[list[tuple[int, str]], list[str]]:
    """Split seeds into (rank, id) pairs known to the graph and missing ids."""
    known, missing = [], []
    for rank, seed in enumerate(seeds, start=1):
        if seed in kg:
            known.append((rank, seed))
        else:
            missing.append(seed)
    for seed in missing:
        logger.warning("seed %s is not in the knowledge graph, skipping", seed)
    return known, missing


def shortest_path(
    kg: KnowledgeGraph, source: str, target: str, config: SearchConfig
) -> tuple[list[Triple], int]:
    """Returns the path triples (empty if none within d_max) and touched node count."""
    parents: dict[str, tuple[str, Triple] | None] = {source: None}
    depth = {source: 0}
    queue = deque([source])
    visited = 0

    while queue:
        node = queue.popleft()
        visited += 1
        if node == target:
            break
        if depth[node] >= config.d_max:
            continue
        for neighbor in kg.neighbors(node, config.direction):
            visited += 1
            if neighbor.node in parents:
                continue
            parents[neighbor.node] = (node, neighbor.triple)
            depth[neighbor.node] = depth[node] + 1
            queue.append(neighbor.node)

    if target not in parents or target == source:
        return [], visited

    path = []
    node = target
    while (link := parents[node]) is not None:
        node, triple = link
        path.append(triple)
    path.reverse()
    return path, visited


def bfs_triples(kg: KnowledgeGraph, seeds: Sequence[str], config: SearchConfig) -> TraversalResult:
    known, missing = present_seeds(kg, seeds)
    emitted: dict[Triple, TraversedTriple] = {}
    paths = []
    visited = sum(1 + len(kg.neighbors(seed)) for _, seed in known)

    for (rank, source), (_, target) in itertools.combinations(known, 2):
        triples, cost = shortest_path(kg, source, target, config)
        visited += cost
        paths.append(SeedPath(source=source, target=target, triples=tuple(triples)))
        for triple in triples:
            if triple not in emitted:
                emitted[triple] = TraversedTriple(triple=triple, seed_rank=rank, position=len(emitted))

    return TraversalResult(
        triples=tuple(emitted.values()),
        paths=tuple(paths),
        visited=visited,
        missing_seeds=tuple(missing),
    )


def exp_triples(kg: KnowledgeGraph, seeds: Sequence[str], config: SearchConfig) -> TraversalResult:
    known, missing = present_seeds(kg, seeds)
    emitted: dict[Triple, TraversedTriple] = {}
    visited = 0

    for rank, seed in known:
        # expansion is one hop over incident edges in both orientations
        incident = kg.neighbors(seed)[: config.exp_neighbor_cap]
        visited += 1 + len(incident)
        for neighbor in incident:
            if neighbor.triple not in emitted:
                emitted[neighbor.triple] = TraversedTriple(
                    triple=neighbor.triple, seed_rank=rank, position=len(emitted)
                )

    return TraversalResult(
        triples=tuple(emitted.values()), visited=visited, missing_seeds=tuple(missing)
    )
