from pathlib import Path

import pytest

from blockrag.core.config import Direction
from blockrag.core.errors import DatasetLoadError, UsageError
from blockrag.kgsearch.graph import KnowledgeGraph, load_edges, load_knowledge_graph
from blockrag.schemas.knowledge import CatalogItem, ItemKind, Triple


@pytest.fixture(name="tiny_kg")
def fixture_tiny_kg(tiny_dir: Path) -> KnowledgeGraph:
    return load_knowledge_graph(tiny_dir / "catalog.jsonl", tiny_dir / "edges.tsv")


def test_tiny_graph_shape(tiny_kg: KnowledgeGraph) -> None:
    assert len(tiny_kg.entities) == 12
    assert len(tiny_kg.predicates) == 3
    assert len(tiny_kg.edges) == 10
    assert "Q1" in tiny_kg
    assert "P31" not in tiny_kg
    assert tiny_kg.item("P31") is not None
    assert tiny_kg.item("Q99") is None


def test_undirected_neighbors_are_sorted_by_predicate_then_node(tiny_kg: KnowledgeGraph) -> None:
    neighbors = tiny_kg.neighbors("Q5")

    assert [(n.predicate, n.node) for n in neighbors] == [
        ("P279", "Q11"),
        ("P31", "Q2"),
        ("P31", "Q4"),
    ]
    # stored orientation is kept for incoming edges
    assert neighbors[1].triple == Triple("Q2", "P31", "Q5")


def test_directed_neighbors_are_outgoing_only(tiny_kg: KnowledgeGraph) -> None:
    assert [n.node for n in tiny_kg.neighbors("Q5", Direction.DIRECTED)] == ["Q11"]
    assert tiny_kg.neighbors("Q1", Direction.DIRECTED) == []
    assert tiny_kg.neighbors("Q404") == []


def test_duplicate_edges_are_dropped_and_order_kept() -> None:
    catalog = [
        CatalogItem(id="Q1", kind=ItemKind.ENTITY),
        CatalogItem(id="Q2", kind=ItemKind.ENTITY),
        CatalogItem(id="P1", kind=ItemKind.PREDICATE),
    ]
    edges = [Triple("Q2", "P1", "Q1"), Triple("Q1", "P1", "Q2"), Triple("Q2", "P1", "Q1")]

    kg = KnowledgeGraph(catalog, edges)

    assert kg.edges == (Triple("Q2", "P1", "Q1"), Triple("Q1", "P1", "Q2"))


def test_dangling_edge_raises() -> None:
    with pytest.raises(UsageError):
        KnowledgeGraph([CatalogItem(id="Q1", kind=ItemKind.ENTITY)], [Triple("Q1", "P1", "Q2")])


def test_edges_file_skips_comments_and_blank_lines(tmp_path: Path) -> None:
    path = tmp_path / "edges.tsv"
    path.write_text("# head\tpredicate\ttail\n\nQ1\tP1\tQ2\n")

    assert load_edges(path) == [Triple("Q1", "P1", "Q2")]


def test_bad_edge_line_reports_line(tmp_path: Path) -> None:
    path = tmp_path / "edges.tsv"
    path.write_text("Q1\tP1\tQ2\nQ1 P1 Q2\n")

    with pytest.raises(DatasetLoadError) as e:
        load_edges(path)

    assert e.value.line == 2


def test_dangling_edge_file_is_a_load_error(tiny_dir: Path, tmp_path: Path) -> None:
    path = tmp_path / "edges.tsv"
    path.write_text("Q1\tP31\tQ404\n")

    with pytest.raises(DatasetLoadError):
        load_knowledge_graph(tiny_dir / "catalog.jsonl", path)
