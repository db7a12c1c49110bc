import csv
import json
from collections.abc import Callable
from pathlib import Path

from freezegun import freeze_time

from blockrag.core.config import RunConfig
from blockrag.evaluation.report import (
    CSV_HEADER,
    emit_report,
    read_decisions,
    write_decisions,
)
from blockrag.schemas.records import Decision, MatchDecision, PairKey, Provenance
from blockrag.schemas.results import BlockCost, PairCost, RunMetrics, StageSeconds


def metrics() -> RunMetrics:
    return RunMetrics(
        tp=3,
        fp=1,
        fn=2,
        tn=4,
        precision=0.75,
        recall=0.6,
        f1=2 / 3,
        rac_count=5,
        pair_count=10,
        seconds_total=2.5,
        stage_seconds=StageSeconds(retrieval=1.0, generation=1.5),
    )


def test_decisions_file_keeps_the_public_fields(tmp_path: Path) -> None:
    decisions = [
        MatchDecision(
            source_id="a1",
            target_id="b1",
            decision=Decision.YES,
            provenance=Provenance.PARSED,
            raw_text="Match Decision: Yes",
            block=0,
        ),
        MatchDecision(
            source_id="a2",
            target_id="b2",
            decision=Decision.NO,
            provenance=Provenance.FALLBACK_DEFAULT,
            block=1,
        ),
    ]
    path = tmp_path / "run" / "decisions.jsonl"

    assert write_decisions(path, decisions) == 2

    first = json.loads(path.read_text().splitlines()[0])
    assert first == {
        "source_id": "a1",
        "target_id": "b1",
        "decision": "yes",
        "provenance": "parsed",
        "block": 0,
    }
    assert [d.key for d in read_decisions(path)] == [("a1", "b1"), ("a2", "b2")]


def test_decisions_file_carries_pair_seconds(tmp_path: Path) -> None:
    decision = MatchDecision(
        source_id="a1", target_id="b1", decision=Decision.YES, provenance=Provenance.PARSED, block=0
    )
    cost = PairCost(source_id="a1", target_id="b1", block=0, retrieval=0.5, generation=0.25)
    path = tmp_path / "decisions.jsonl"

    write_decisions(path, [decision], {PairKey("a1", "b1"): cost})

    assert json.loads(path.read_text())["seconds"] == 0.75
    assert read_decisions(path) == [decision]


def test_report_lists_block_costs(make_config: Callable[..., RunConfig]) -> None:
    config = make_config()
    blocks = [BlockCost(block=0, pairs=2, retrieval=1.0, per_pair_seconds=0.5)]

    paths = emit_report(metrics(), config, blocks=blocks)

    document = json.loads(paths.json_path.read_text())
    assert document["blocks"] == [
        {
            "block": 0,
            "pairs": 2,
            "retrieval": 1.0,
            "context": 0.0,
            "generation": 0.0,
            "per_pair_seconds": 0.5,
        }
    ]


@freeze_time("2026-03-01 12:00:00")
def test_report_json_and_csv_rows(make_config: Callable[..., RunConfig]) -> None:
    config = make_config("blocking.max_bs=4", variant="ce_rag4em_br")

    first = emit_report(metrics(), config)
    second = emit_report(metrics(), config)

    assert first == second
    assert first.json_path == config.output_dir / f"{config.run_label()}.json"
    document = json.loads(first.json_path.read_text())
    assert document["run"] == "tiny-ce_rag4em_br-qgram-bs4-k2-entity"
    assert document["created_at"] == "2026-03-01T12:00:00+00:00"
    assert document["seed"] == 0
    assert document["metrics"]["rac_count"] == 5
    assert document["config"]["blocking"]["max_bs"] == 4

    with first.csv_path.open(newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == list(CSV_HEADER)
    assert len(rows) == 3
    assert rows[1][:7] == ["tiny", "ce_rag4em_br", "qgram", "4", "2", "entity", ""]
    assert rows[1][9:11] == ["0.666667", "5"]
