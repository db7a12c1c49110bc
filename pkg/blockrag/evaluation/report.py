# Run outputs: decisions file (JSON Lines), per-run JSON report and the
# cross-run CSV table (one row appended per run).
#
# Report JSON schema:
#   {"run": str, "created_at": ISO-8601 UTC, "seed": int,
#    "metrics": RunMetrics, "blocks": [BlockCost], "config": RunConfig}
#
# Decision lines carry "seconds" when pair costs are known.

import csv
import json
from collections.abc import Iterable, Mapping, Sequence
from datetime import UTC, datetime
from pathlib import Path
from typing import Any, NamedTuple

from pydantic import ValidationError

from blockrag.core import messages
from blockrag.core.config import RunConfig
from blockrag.core.errors import DatasetLoadError
from blockrag.schemas.records import MatchDecision, PairKey
from blockrag.schemas.results import BlockCost, PairCost, RunMetrics

DECISIONS_FILE = "decisions.jsonl"
RUNS_CSV = "runs.csv"
CSV_HEADER = (
    "dataset",
    "variant",
    "blocking",
    "max_bs",
    "top_k",
    "granularity",
    "traversal",
    "precision",
    "recall",
    "f1",
    "rac",
    "seconds_total",
    "seconds_retrieval",
    "seconds_expansion",
    "seconds_enrichment",
    "seconds_generation",
)


class ReportPaths(NamedTuple):
    json_path: Path
    csv_path: Path


def write_decisions(
    path: Path,
    decisions: Iterable[MatchDecision],
    costs: Mapping[PairKey, PairCost] | None = None,
) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as f:
        for decision in decisions:
            line = decision.model_dump(
                mode="json", include={"source_id", "target_id", "decision", "provenance", "block"}
            )
            if costs is not None and decision.key in costs:
                line["seconds"] = costs[decision.key].total
            f.write(json.dumps(line, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_decisions(path: Path) -> list[MatchDecision]:
    if not path.is_file():
        raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)
    decisions = []
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                decisions.append(MatchDecision.model_validate_json(line))
            except ValidationError as e:
                raise DatasetLoadError(str(e), path=path, line=line_no) from e
    return decisions


def report_document(
    metrics: RunMetrics, config: RunConfig, blocks: Sequence[BlockCost] = ()
) -> dict[str, Any]:
    return {
        "run": config.run_label(),
        "created_at": datetime.now(UTC).isoformat(),
        "seed": config.seed,
        "metrics": metrics.model_dump(mode="json"),
        "blocks": [block.model_dump(mode="json") for block in blocks],
        "config": config.model_dump(mode="json"),
    }


def csv_row(metrics: RunMetrics, config: RunConfig) -> list[str | int | float]:
    return [
        config.name,
        config.variant.value,
        config.blocking.method.value,
        config.blocking.max_bs,
        config.context_top_k,
        config.granularity.value,
        config.traversal.value if config.traversal is not None else "",
        round(metrics.precision, 6),
        round(metrics.recall, 6),
        round(metrics.f1, 6),
        metrics.rac_count,
        round(metrics.seconds_total, 6),
        round(metrics.stage_seconds.retrieval, 6),
        round(metrics.stage_seconds.expansion, 6),
        round(metrics.stage_seconds.enrichment, 6),
        round(metrics.stage_seconds.generation, 6),
    ]


def append_csv_row(path: Path, row: list[str | int | float]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    is_new = not path.exists() or path.stat().st_size == 0
    with path.open("a", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        if is_new:
            writer.writerow(CSV_HEADER)
        writer.writerow(row)


def emit_report(
    metrics: RunMetrics,
    config: RunConfig,
    output_dir: Path | None = None,
    *,
    csv_path: Path | None = None,
    blocks: Sequence[BlockCost] = (),
) -> ReportPaths:
    output_dir = output_dir if output_dir is not None else config.output_dir
    json_path = output_dir / f"{config.run_label()}.json"
    csv_path = csv_path if csv_path is not None else output_dir / RUNS_CSV

    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(
        json.dumps(report_document(metrics, config, blocks), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    append_csv_row(csv_path, csv_row(metrics, config))
    return ReportPaths(json_path, csv_path)
