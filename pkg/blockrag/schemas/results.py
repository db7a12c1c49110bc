from enum import StrEnum

from pydantic import BaseModel, Field

from blockrag.schemas.records import BaseSchema, MatchDecision, PairKey


class BatchStatus(StrEnum):
    CLEAN = "clean"
    RECOVERED_PER_PAIR = "recovered_per_pair"
    DEFAULTED = "defaulted"


class BatchResult(BaseSchema):
    block: int
    decisions: tuple[MatchDecision, ...]
    parse_status: BatchStatus


class StageSeconds(BaseModel):
    blocking: float = Field(default=0.0, ge=0)
    retrieval: float = Field(default=0.0, ge=0)
    expansion: float = Field(default=0.0, ge=0)
    enrichment: float = Field(default=0.0, ge=0)
    generation: float = Field(default=0.0, ge=0)

    @property
    def total(self) -> float:
        return self.blocking + self.retrieval + self.expansion + self.enrichment + self.generation


# (block ordinal, pair) a timed call was made for; pair is None for a whole block
CostUnit = tuple[int, PairKey | None]


class PairCost(BaseSchema):
    """Seconds attributed to one pair, block-level calls split evenly over the block."""

    source_id: str
    target_id: str
    block: int
    retrieval: float = Field(default=0.0, ge=0)
    context: float = Field(default=0.0, ge=0)
    generation: float = Field(default=0.0, ge=0)

    @property
    def key(self) -> PairKey:
        return PairKey(self.source_id, self.target_id)

    @property
    def total(self) -> float:
        return self.retrieval + self.context + self.generation


class BlockCost(BaseSchema):
    block: int
    pairs: int = Field(ge=1)
    retrieval: float = Field(default=0.0, ge=0)
    context: float = Field(default=0.0, ge=0)
    generation: float = Field(default=0.0, ge=0)
    per_pair_seconds: float = Field(default=0.0, ge=0)


class RunCounters(BaseModel):
    embed_calls: int = 0
    topk_calls: int = 0
    kg_calls: int = 0
    bfs_visited: int = 0
    exp_visited: int = 0
    missing_seeds: int = 0
    truncated_queries: int = 0
    failed_retrievals: int = 0
    enrichment_misses: int = 0
    completion_calls: int = 0
    prompt_chars: int = 0
    failed_generations: int = 0
    parsed: int = 0
    fallback_default: int = 0
    batches_clean: int = 0
    batches_recovered: int = 0
    batches_defaulted: int = 0


class RunMetrics(BaseModel):
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    rac_count: int = 0
    pair_count: int = 0
    block_count: int = 0
    labeled_pairs: int = 0
    seconds_total: float = Field(default=0.0, ge=0)
    stage_seconds: StageSeconds = Field(default_factory=StageSeconds)
    per_pair_seconds: StageSeconds = Field(default_factory=StageSeconds)
    counters: RunCounters = Field(default_factory=RunCounters)
