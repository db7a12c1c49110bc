from enum import StrEnum
from functools import cached_property
from typing import Literal, NamedTuple, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from blockrag.core import messages
from blockrag.core.errors import RecordLookupError


class BaseSchema(BaseModel):
    # all domain types are immutable after construction
    model_config = ConfigDict(frozen=True)


class TableSide(StrEnum):
    SOURCE = "source"
    TARGET = "target"


class Decision(StrEnum):
    YES = "yes"
    NO = "no"


class Provenance(StrEnum):
    PARSED = "parsed"
    FALLBACK_DEFAULT = "fallback_default"


class PairKey(NamedTuple):
    source_id: str
    target_id: str


class Record(BaseSchema):
    record_id: str = Field(min_length=1)
    table_side: TableSide
    attributes: tuple[tuple[str, str], ...] = ()

    @field_validator("attributes")
    @classmethod
    def attribute_names_unique(
        cls, value: tuple[tuple[str, str], ...]
    ) -> tuple[tuple[str, str], ...]:
        seen: set[str] = set()
        for name, _ in value:
            if name in seen:
                raise ValueError(messages.DUPLICATE_ATTRIBUTE.format(name=name))
            seen.add(name)
        return value


class CandidatePair(BaseSchema):
    source_id: str
    target_id: str
    origin_block: int = Field(default=0, ge=0)


def pair_key(pair: CandidatePair) -> PairKey:
    return PairKey(pair.source_id, pair.target_id)


class LabeledPair(BaseSchema):
    source_id: str
    target_id: str
    label: Literal[0, 1]

    @property
    def key(self) -> PairKey:
        return PairKey(self.source_id, self.target_id)


class MatchDecision(BaseSchema):
    source_id: str
    target_id: str
    decision: Decision
    provenance: Provenance
    raw_text: str = ""
    block: int | None = None

    @property
    def key(self) -> PairKey:
        return PairKey(self.source_id, self.target_id)


class Dataset(BaseSchema):
    name: str = ""
    source_table: tuple[Record, ...] = ()
    target_table: tuple[Record, ...] = ()
    labeled_pairs: tuple[LabeledPair, ...] = ()

    @model_validator(mode="after")
    def check_references(self) -> Self:
        for side, table in (
            (TableSide.SOURCE, self.source_table),
            (TableSide.TARGET, self.target_table),
        ):
            ids: set[str] = set()
            for record in table:
                if record.table_side is not side:
                    raise ValueError(
                        messages.DATASET_WRONG_SIDE.format(
                            record_id=record.record_id,
                            found=record.table_side.value,
                            expected=side.value,
                        )
                    )
                if record.record_id in ids:
                    raise ValueError(messages.DATASET_DUPLICATE_ID.format(record_id=record.record_id))
                ids.add(record.record_id)
        for labeled in self.labeled_pairs:
            if labeled.source_id not in self.source_index:
                raise ValueError(
                    messages.DATASET_DANGLING_ID.format(side="source", record_id=labeled.source_id)
                )
            if labeled.target_id not in self.target_index:
                raise ValueError(
                    messages.DATASET_DANGLING_ID.format(side="target", record_id=labeled.target_id)
                )
        return self

    @cached_property
    def source_index(self) -> dict[str, Record]:
        return {record.record_id: record for record in self.source_table}

    @cached_property
    def target_index(self) -> dict[str, Record]:
        return {record.record_id: record for record in self.target_table}

    @property
    def records(self) -> tuple[Record, ...]:
        """R = T_s followed by T_t, the scan order used by blocking."""
        return self.source_table + self.target_table

    @property
    def positives(self) -> int:
        return sum(1 for labeled in self.labeled_pairs if labeled.label == 1)

    @property
    def negatives(self) -> int:
        return len(self.labeled_pairs) - self.positives

    def source_record(self, record_id: str) -> Record:
        try:
            return self.source_index[record_id]
        except KeyError:
            raise RecordLookupError(
                messages.RECORD_NOT_FOUND.format(side="source", record_id=record_id),
                record_id=record_id,
            ) from None

    def target_record(self, record_id: str) -> Record:
        try:
            return self.target_index[record_id]
        except KeyError:
            raise RecordLookupError(
                messages.RECORD_NOT_FOUND.format(side="target", record_id=record_id),
                record_id=record_id,
            ) from None
