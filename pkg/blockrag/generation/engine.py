import asyncio
import logging
import time
from collections.abc import Sequence

from blockrag.core.config import GenerationConfig
from blockrag.core.errors import RemoteServiceError
from blockrag.generation.backends import CompletionBackend
from blockrag.generation.parsing import parse_batch, parse_single
from blockrag.generation.templates import build_prompt_batch, build_prompt_single
from blockrag.schemas.knowledge import ContextBundle
from blockrag.schemas.records import CandidatePair, MatchDecision, Provenance, pair_key
from blockrag.schemas.results import BatchResult, BatchStatus, CostUnit, RunCounters

logger = logging.getLogger(__name__)


class Generator:
    """Prompts a backend per pair or per block and turns answers into decisions.

    At most `parallelism` completions are in flight at once. A batch answer
    with the wrong number of decisions is re-asked pair by pair, one round.
    Completion seconds are kept per (block, pair) unit, pair None for a
    whole-block prompt.
    """

    def __init__(
        self,
        backend: CompletionBackend,
        config: GenerationConfig,
        *,
        counters: RunCounters | None = None,
        parallelism: int = 4,
    ) -> None:
        self.backend = backend
        self.config = config
        self.counters = counters if counters is not None else RunCounters()
        self.unit_seconds: dict[CostUnit, float] = {}
        self._semaphore = asyncio.Semaphore(parallelism)

    async def _complete(self, prompt: str, unit: CostUnit) -> str | None:
        async with self._semaphore:
            self.counters.completion_calls += 1
            self.counters.prompt_chars += len(prompt)
            start = time.perf_counter()
            try:
                return await self.backend.complete(prompt, self.config.decoding)
            except RemoteServiceError as e:
                self.counters.failed_generations += 1
                logger.warning("completion failed: %s", e)
                return None
            finally:
                self.unit_seconds[unit] = (
                    self.unit_seconds.get(unit, 0.0) + time.perf_counter() - start
                )

    async def decide_pair(
        self,
        pair: CandidatePair,
        query: str,
        context: ContextBundle | None,
        *,
        block: int,
    ) -> MatchDecision:
        text = await self._complete(build_prompt_single(query, context), (block, pair_key(pair)))
        decision = parse_single(text or "", pair_key(pair), block=block)
        if text is not None and decision.provenance is not Provenance.PARSED:
            logger.warning("no decision found for pair %s, defaulting to no", pair_key(pair))
        return decision

    async def decide_pairs(
        self,
        pairs: Sequence[CandidatePair],
        queries: Sequence[str],
        contexts: Sequence[ContextBundle | None],
        *,
        block: int,
    ) -> list[MatchDecision]:
        return list(
            await asyncio.gather(
                *(
                    self.decide_pair(pair, query, context, block=block)
                    for pair, query, context in zip(pairs, queries, contexts, strict=True)
                )
            )
        )

    async def decide_block(
        self,
        pairs: Sequence[CandidatePair],
        queries: Sequence[str],
        context: ContextBundle | None,
        *,
        block: int,
    ) -> BatchResult:
        text = await self._complete(build_prompt_batch(queries, context), (block, None))
        result = parse_batch(text or "", pairs, block=block)

        if (
            result.parse_status is BatchStatus.DEFAULTED
            and text is not None
            and self.config.reask_on_mismatch
        ):
            logger.warning(
                "block %d answer did not hold %d decisions, re-asking per pair", block, len(pairs)
            )
            decisions = await self.decide_pairs(pairs, queries, [context] * len(pairs), block=block)
            result = BatchResult(
                block=block, decisions=tuple(decisions), parse_status=BatchStatus.RECOVERED_PER_PAIR
            )

        match result.parse_status:
            case BatchStatus.CLEAN:
                self.counters.batches_clean += 1
            case BatchStatus.RECOVERED_PER_PAIR:
                self.counters.batches_recovered += 1
            case BatchStatus.DEFAULTED:
                self.counters.batches_defaulted += 1
        return result
