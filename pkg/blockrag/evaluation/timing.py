import time
from collections.abc import Iterator
from contextlib import contextmanager

from blockrag.schemas.results import StageSeconds


class StageClock:
    """Monotonic wall-clock totals per pipeline stage."""

    STAGES = frozenset(StageSeconds.model_fields)

    def __init__(self) -> None:
        self._seconds = dict.fromkeys(sorted(self.STAGES), 0.0)

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        if stage not in self.STAGES:
            raise KeyError(stage)
        start = time.perf_counter()
        try:
            yield
        finally:
            self._seconds[stage] += time.perf_counter() - start

    def add(self, stage: str, seconds: float) -> None:
        if stage not in self.STAGES:
            raise KeyError(stage)
        self._seconds[stage] += max(seconds, 0.0)

    def stage_seconds(self) -> StageSeconds:
        return StageSeconds(**self._seconds)
