from typing import Any

from pydantic import Field

from blockrag.schemas.records import BaseSchema, CandidatePair


class Block(BaseSchema):
    ordinal: int = Field(ge=0)
    key: str
    source_ids: tuple[str, ...] = ()
    target_ids: tuple[str, ...] = ()
    pairs: tuple[CandidatePair, ...] = ()
    parent_ordinal: int | None = None

    @property
    def size(self) -> int:
        return len(self.pairs)

    def to_line(self) -> dict[str, Any]:
        return {
            "ordinal": self.ordinal,
            "key": self.key,
            "pairs": [[pair.source_id, pair.target_id] for pair in self.pairs],
        }
