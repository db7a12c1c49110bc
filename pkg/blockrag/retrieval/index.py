# Exhaustive cosine top-k over the catalog embeddings.
#
# Items are stored sorted by id and every vector is L2-normalized, so the
# dot product is the cosine and a stable argsort on the negated scores yields
# (score desc, id asc). Zero vectors score 0 against anything.

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Self

import numpy as np
import numpy.typing as npt

from blockrag.core import messages
from blockrag.core.errors import DatasetLoadError, IndexDimensionError, UsageError
from blockrag.retrieval.embedder import Embedder, Vector
from blockrag.schemas.knowledge import CatalogItem, ItemKind, ScoredItem

logger = logging.getLogger(__name__)


class VectorIndex:
    def __init__(self, items: Sequence[CatalogItem], matrix: npt.NDArray[np.float64]) -> None:
        if matrix.ndim != 2 or matrix.shape[0] != len(items):
            raise UsageError(f"matrix shape {matrix.shape} does not fit {len(items)} items")

        order = sorted(range(len(items)), key=lambda i: items[i].id)
        self.items = tuple(items[i] for i in order)
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            duplicate = next(item_id for item_id in ids if ids.count(item_id) > 1)
            raise UsageError(messages.INDEX_DUPLICATE_ID.format(item_id=duplicate))

        self.matrix = np.ascontiguousarray(matrix[order], dtype=np.float64)
        self.dimension = int(matrix.shape[1])
        self._by_kind = {
            kind: np.array(
                [i for i, item in enumerate(self.items) if item.kind is kind], dtype=np.intp
            )
            for kind in ItemKind
        }

    def __len__(self) -> int:
        return len(self.items)

    @classmethod
    async def build(cls, items: Sequence[CatalogItem], embedder: Embedder) -> Self:
        vectors = await embedder.embed([item.index_text for item in items])
        matrix = (
            np.vstack(vectors) if vectors else np.zeros((0, embedder.dimension), dtype=np.float64)
        )
        logger.info("indexed %d catalog items, dimension %d", len(items), embedder.dimension)
        return cls(items, matrix)

    def scores(self, query: Vector, kind: ItemKind | None = None) -> npt.NDArray[np.float64]:
        if query.shape != (self.dimension,):
            raise IndexDimensionError(
                messages.INDEX_DIMENSION_MISMATCH.format(found=query.shape, expected=self.dimension)
            )
        rows = self.matrix if kind is None else self.matrix[self._by_kind[kind]]
        return (rows * query).sum(axis=1)

    def topk(self, query: Vector, k: int, kind: ItemKind | None = None) -> list[ScoredItem]:
        if k < 1:
            raise UsageError(messages.INDEX_BAD_K.format(k=k))
        scores = self.scores(query, kind)
        candidates = np.arange(len(self.items)) if kind is None else self._by_kind[kind]
        ranked = np.argsort(-scores, kind="stable")[:k]
        return [
            ScoredItem(self.items[candidates[i]].id, float(scores[i])) for i in ranked
        ]

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(
            path,
            matrix=self.matrix,
            ids=np.array([item.id for item in self.items], dtype=str),
            kinds=np.array([item.kind.value for item in self.items], dtype=str),
            labels=np.array([item.label for item in self.items], dtype=str),
            descriptions=np.array([item.description for item in self.items], dtype=str),
        )

    @classmethod
    def load(cls, path: Path) -> Self:
        if not path.is_file():
            raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)
        with np.load(path) as data:
            items = [
                CatalogItem(
                    id=str(item_id),
                    kind=ItemKind(str(kind)),
                    label=str(label),
                    description=str(description),
                )
                for item_id, kind, label, description in zip(
                    data["ids"], data["kinds"], data["labels"], data["descriptions"], strict=True
                )
            ]
            matrix = np.array(data["matrix"], dtype=np.float64)
        return cls(items, matrix)
