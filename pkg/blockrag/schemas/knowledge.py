from enum import StrEnum
from typing import NamedTuple

from pydantic import Field

from blockrag.core.config import Granularity
from blockrag.schemas.records import BaseSchema, PairKey


class ItemKind(StrEnum):
    ENTITY = "entity"
    PREDICATE = "predicate"


class ContextSource(StrEnum):
    VECTOR = "vector"
    EXP = "exp"
    BFS = "bfs"


class CatalogItem(BaseSchema):
    id: str = Field(min_length=1)
    kind: ItemKind
    label: str = ""
    description: str = ""

    @property
    def index_text(self) -> str:
        return f"{self.label}: {self.description}" if self.description else self.label or self.id


class Triple(NamedTuple):
    head: str
    predicate: str
    tail: str


class ScoredItem(NamedTuple):
    item_id: str
    score: float


class ContextCandidate(BaseSchema):
    """Enriched context text plus the ordering metadata refinement sorts on."""

    text: str
    source: ContextSource
    seed_rank: int = Field(ge=1)
    position: int = Field(ge=0)
    score: float = 0.0


class ContextItem(BaseSchema):
    rank: int = Field(ge=1)
    text: str
    source: ContextSource
    seed_rank: int


class ContextBundle(BaseSchema):
    block: int
    pair: PairKey | None = None
    granularity: Granularity
    items: tuple[ContextItem, ...] = ()

    @property
    def texts(self) -> list[str]:
        return [item.text for item in self.items]

    def __len__(self) -> int:
        return len(self.items)
