from collections.abc import AsyncGenerator, Callable, Generator
from pathlib import Path
from typing import Any

import pytest
import pytest_asyncio
from pytest import Item
from pytest_asyncio import is_async_test

from blockrag.core.config import RunConfig, Settings, apply_overrides, build_run_config, get_settings
from blockrag.evaluation.dataset import load_dataset
from blockrag.pipeline import ResourcePool
from blockrag.schemas.records import Dataset

FIXTURES_DIR = Path(__file__).parent / "fixtures"
TINY_DIR = FIXTURES_DIR / "tiny"


def pytest_collection_modifyitems(items: list[Item]) -> None:
    """Ensure all tests run in a session scoped event loop

    See Also: https://pytest-asyncio.readthedocs.io/en/latest/how-to-guides/run_session_tests_in_same_loop.html
    """
    pytest_asyncio_tests = (item for item in items if is_async_test(item))
    session_scope_marker = pytest.mark.asyncio(loop_scope="session")
    for async_test in pytest_asyncio_tests:
        async_test.add_marker(session_scope_marker, append=False)


@pytest.fixture(scope="function", autouse=True)
def fixture_clean_get_settings_between_tests(
    monkeypatch: pytest.MonkeyPatch,
) -> Generator[None, None, None]:
    # tests never reach the network unless a test wires a transport itself
    monkeypatch.setenv("BLOCKRAG_WIKIDATA__ONLINE", "false")
    get_settings.cache_clear()

    yield

    get_settings.cache_clear()


@pytest.fixture(name="tiny_dir", scope="session")
def fixture_tiny_dir() -> Path:
    return TINY_DIR


@pytest.fixture(name="tiny_dataset", scope="session")
def fixture_tiny_dataset(tiny_dir: Path) -> Dataset:
    return load_dataset(tiny_dir)


@pytest.fixture(name="make_config", scope="function")
def fixture_make_config(tiny_dir: Path, tmp_path: Path) -> Callable[..., RunConfig]:
    def make(*overrides: str, **fields: Any) -> RunConfig:
        data: dict[str, Any] = {
            "dataset_path": tiny_dir,
            "kg_catalog": tiny_dir / "catalog.jsonl",
            "kg_edges": tiny_dir / "edges.tsv",
            "output_dir": tmp_path / "runs",
            **fields,
        }
        return build_run_config(apply_overrides(data, list(overrides)))

    return make


@pytest_asyncio.fixture(name="pool", scope="function")
async def fixture_pool() -> AsyncGenerator[ResourcePool, None]:
    pool = ResourcePool(Settings())
    yield pool
    await pool.aclose()
