# KG item catalog, JSON Lines:
# {"id": "Q1", "kind": "entity", "label": "...", "description": "..."}

import json
from collections.abc import Iterable
from pathlib import Path

from pydantic import ValidationError

from blockrag.core import messages
from blockrag.core.errors import DatasetLoadError
from blockrag.schemas.knowledge import CatalogItem


def load_catalog(path: Path) -> list[CatalogItem]:
    if not path.is_file():
        raise DatasetLoadError(messages.DATASET_FILE_MISSING, path=path)

    items = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                item = CatalogItem.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DatasetLoadError(
                    messages.CATALOG_BAD_LINE.format(error=e), path=path, line=line_no
                ) from e
            if item.id in seen:
                raise DatasetLoadError(
                    messages.INDEX_DUPLICATE_ID.format(item_id=item.id), path=path, line=line_no
                )
            seen.add(item.id)
            items.append(item)
    return items


def write_catalog(path: Path, items: Iterable[CatalogItem]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for item in items:
            f.write(item.model_dump_json() + "\n")
