# In-memory knowledge graph: entity and predicate catalogs plus typed edges
# with adjacency in both directions. Immutable after load.

import logging
from collections import defaultdict
from collections.abc import Iterable
from pathlib import Path
from typing import NamedTuple

from blockrag.core import messages
from blockrag.core.config import Direction
from blockrag.core.errors import DatasetLoadError, UsageError
from blockrag.retrieval.catalog import load_catalog
from blockrag.schemas.knowledge import CatalogItem, ItemKind, Triple

logger = logging.getLogger(__name__)


class Neighbor(NamedTuple):
    predicate: str
    node: str
    triple: Triple


class KnowledgeGraph:
    def __init__(self, catalog: Iterable[CatalogItem], edges: Iterable[Triple]) -> None:
        self.entities: dict[str, CatalogItem] = {}
        self.predicates: dict[str, CatalogItem] = {}
        for item in catalog:
            if item.kind is ItemKind.ENTITY:
                self.entities[item.id] = item
            else:
                self.predicates[item.id] = item

        seen: set[Triple] = set()
        kept: list[Triple] = []
        outgoing: dict[str, list[Neighbor]] = defaultdict(list)
        incoming: dict[str, list[Neighbor]] = defaultdict(list)
        for triple in edges:
            if (
                triple.head not in self.entities
                or triple.tail not in self.entities
                or triple.predicate not in self.predicates
            ):
                raise UsageError(messages.KG_DANGLING_EDGE.format(**triple._asdict()))
            if triple in seen:
                logger.debug("dropping duplicate edge %s", triple)
                continue
            seen.add(triple)
            kept.append(triple)
            outgoing[triple.head].append(Neighbor(triple.predicate, triple.tail, triple))
            incoming[triple.tail].append(Neighbor(triple.predicate, triple.head, triple))

        self.edges = tuple(kept)
        self._outgoing = {node: sorted(items) for node, items in outgoing.items()}
        self._incoming = {node: sorted(items) for node, items in incoming.items()}

    def __contains__(self, node: object) -> bool:
        return node in self.entities

    def item(self, item_id: str) -> CatalogItem | None:
        return self.entities.get(item_id) or self.predicates.get(item_id)

    def neighbors(self, node: str, direction: Direction = Direction.UNDIRECTED) -> list[Neighbor]:
        """Incident edges sorted by (predicate, other endpoint, stored triple)."""
        out = self._outgoing.get(node, [])
        if direction is Direction.DIRECTED:
            return out
        # a self-loop shows up on both sides
        return sorted(set(out) | set(self._incoming.get(node, [])))


def load_edges(path: Path) -> list[Triple]:
    if not path.is_file():
        raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)

    triples = []
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.rstrip("\r\n")
            if not stripped.strip() or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) != 3 or not all(fields):
                raise DatasetLoadError(
                    messages.KG_BAD_EDGE_LINE.format(found=len(fields)), path=path, line=line_no
                )
            triples.append(Triple(*fields))
    return triples


def load_knowledge_graph(catalog_path: Path, edges_path: Path) -> KnowledgeGraph:
    catalog = load_catalog(catalog_path)
    edges = load_edges(edges_path)
    try:
        kg = KnowledgeGraph(catalog, edges)
    except UsageError as e:
        raise DatasetLoadError(str(e), path=edges_path) from e
    logger.info(
        "knowledge graph: %d entities, %d predicates, %d edges",
        len(kg.entities),
        len(kg.predicates),
        len(kg.edges),
    )
    return kg
