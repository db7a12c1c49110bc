# Magellan-layout dataset loading.
#
# <dir>/tableA.csv and <dir>/tableB.csv hold the source and target tables
# (header row, first column "id"; without it ids become "<side>-<row>").
# Every split file (default test.csv) has ltable_id, rtable_id, label.

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from blockrag.core import messages
from blockrag.core.errors import DatasetLoadError
from blockrag.schemas.records import Dataset, LabeledPair, PairKey, Record, TableSide

logger = logging.getLogger(__name__)

SOURCE_FILE = "tableA.csv"
TARGET_FILE = "tableB.csv"
ID_COLUMN = "id"
LABEL_COLUMNS = ("ltable_id", "rtable_id", "label")


def clean_value(value: str) -> str:
    # prompts are line oriented, values stay on one line
    return " ".join(value.split())


def load_table(path: Path, side: TableSide) -> list[Record]:
    if not path.is_file():
        raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)

    records = []
    seen: set[str] = set()
    with path.open(encoding="utf-8-sig", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise DatasetLoadError(
                messages.DATASET_MISSING_COLUMNS.format(columns="header row"), path=path, line=1
            )
        header = [name.strip() for name in header]
        has_id = header[0].lower() == ID_COLUMN
        names = header[1:] if has_id else header

        for row_index, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetLoadError(
                    messages.DATASET_BAD_ROW.format(found=len(row), expected=len(header)),
                    path=path,
                    line=reader.line_num,
                )
            record_id = row[0].strip() if has_id else f"{side.value}-{row_index}"
            if not record_id:
                raise DatasetLoadError(messages.DATASET_EMPTY_ID, path=path, line=reader.line_num)
            if record_id in seen:
                raise DatasetLoadError(
                    messages.DATASET_DUPLICATE_ID.format(record_id=record_id),
                    path=path,
                    line=reader.line_num,
                )
            seen.add(record_id)
            values = row[1:] if has_id else row
            try:
                records.append(
                    Record(
                        record_id=record_id,
                        table_side=side,
                        attributes=tuple(
                            (name, clean_value(value)) for name, value in zip(names, values, strict=True)
                        ),
                    )
                )
            except ValidationError as e:
                raise DatasetLoadError(str(e), path=path, line=reader.line_num) from e
    return records


def load_labeled_pairs(
    path: Path, source_ids: set[str], target_ids: set[str]
) -> list[LabeledPair]:
    if not path.is_file():
        raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)

    pairs = []
    with path.open(encoding="utf-8-sig", newline="") as f:
        reader = csv.DictReader(f)
        missing = [column for column in LABEL_COLUMNS if column not in (reader.fieldnames or [])]
        if missing:
            raise DatasetLoadError(
                messages.DATASET_MISSING_COLUMNS.format(columns=", ".join(missing)), path=path, line=1
            )
        for row in reader:
            source_id = (row["ltable_id"] or "").strip()
            target_id = (row["rtable_id"] or "").strip()
            label = (row["label"] or "").strip()
            if source_id not in source_ids:
                raise DatasetLoadError(
                    messages.DATASET_DANGLING_ID.format(side="source", record_id=source_id),
                    path=path,
                    line=reader.line_num,
                )
            if target_id not in target_ids:
                raise DatasetLoadError(
                    messages.DATASET_DANGLING_ID.format(side="target", record_id=target_id),
                    path=path,
                    line=reader.line_num,
                )
            if label not in ("0", "1"):
                raise DatasetLoadError(
                    messages.DATASET_BAD_LABEL.format(label=label), path=path, line=reader.line_num
                )
            pairs.append(
                LabeledPair(source_id=source_id, target_id=target_id, label=1 if label == "1" else 0)
            )
    return pairs


def load_dataset(
    directory: Path, splits: Sequence[str] = ("test.csv",), name: str | None = None
) -> Dataset:
    source_table = load_table(directory / SOURCE_FILE, TableSide.SOURCE)
    target_table = load_table(directory / TARGET_FILE, TableSide.TARGET)
    source_ids = {record.record_id for record in source_table}
    target_ids = {record.record_id for record in target_table}

    labeled: dict[PairKey, LabeledPair] = {}
    for split in splits:
        for pair in load_labeled_pairs(directory / split, source_ids, target_ids):
            if pair.key in labeled:
                logger.warning("labeled pair %s repeats in %s, keeping the first", pair.key, split)
                continue
            labeled[pair.key] = pair

    dataset = Dataset(
        name=name or directory.name,
        source_table=tuple(source_table),
        target_table=tuple(target_table),
        labeled_pairs=tuple(labeled.values()),
    )
    logger.info(
        "dataset %s: %d source, %d target records, %d labeled pairs (%d pos / %d neg)",
        dataset.name,
        len(source_table),
        len(target_table),
        len(dataset.labeled_pairs),
        dataset.positives,
        dataset.negatives,
    )
    return dataset
