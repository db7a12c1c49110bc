# File with environment variables and general configuration logic.
# Env variables are combined in nested groups like "Llm", "Embedder" etc.
# So environment variable (case-insensitive) for the chat endpoint key will be "blockrag_llm__api_key"
#
# Pydantic priority ordering:
#
# 1. (Most important, will overwrite everything) - environment variables
# 2. `.env` file in root folder of project
# 3. Default values
#
# Run configuration (RunConfig) is not read from the environment, it lives in a
# TOML or JSON file passed with `--config`, see `load_run_config`.
# "dotted.key=value" overrides are applied on top of the file before validation.
#
# See https://docs.pydantic.dev/latest/concepts/pydantic_settings/
# Note, complex types like lists are read as json-encoded strings.

import json
import tomllib
from enum import StrEnum
from functools import lru_cache
from pathlib import Path
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field, SecretStr, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from blockrag.core import messages
from blockrag.core.errors import ConfigError

PROJECT_DIR = Path(__file__).parent.parent.parent


class Embedder(BaseModel):
    url: str | None = None
    api_key: SecretStr | None = None
    timeout_secs: float = 30.0
    max_retries: int = 2
    backoff_base_secs: float = 0.5


class Llm(BaseModel):
    url: str | None = None  # base url, "/chat/completions" is appended
    api_key: SecretStr | None = None
    model: str = "gpt-4o-mini"
    timeout_secs: float = 60.0
    max_retries: int = 2
    backoff_base_secs: float = 0.5


class Wikidata(BaseModel):
    online: bool = False
    base_url: str = "https://www.wikidata.org/w/rest.php/wikibase/v1"
    cache_path: Path = PROJECT_DIR / ".cache" / "descriptions.json"
    language: str = "en"
    timeout_secs: float = 15.0
    max_retries: int = 2
    backoff_base_secs: float = 0.5


class Settings(BaseSettings):
    embedder: Embedder = Embedder()
    llm: Llm = Llm()
    wikidata: Wikidata = Wikidata()
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="blockrag_",
        env_file=f"{PROJECT_DIR}/.env",
        case_sensitive=False,
        env_nested_delimiter="__",
        extra="ignore",
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


class BlockingMethod(StrEnum):
    STANDARD = "standard"
    QGRAM = "qgram"
    XQGRAM = "xqgram"


class Granularity(StrEnum):
    ENTITY = "entity"
    PREDICATE = "predicate"
    TRIPLE = "triple"


class Traversal(StrEnum):
    BFS = "bfs"
    EXP = "exp"


class Direction(StrEnum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"


class EmbedderKind(StrEnum):
    MOCK = "mock"
    REMOTE = "remote"


class BackendKind(StrEnum):
    MOCK = "mock"
    REMOTE = "remote"


class Variant(StrEnum):
    LLM_EM = "llm_em"
    RAG4EM = "rag4em"
    CE_RAG4EM_BR = "ce_rag4em_br"
    CE_RAG4EM_BG = "ce_rag4em_bg"
    CE_RAG4EM_BR_BG = "ce_rag4em_br_bg"
    CE_KG_RAG4EM_BR = "ce_kg_rag4em_br"
    CE_KG_RAG4EM_BG = "ce_kg_rag4em_bg"
    CE_KG_RAG4EM_BR_BG = "ce_kg_rag4em_br_bg"

    @property
    def uses_retrieval(self) -> bool:
        return self is not Variant.LLM_EM

    @property
    def uses_kg(self) -> bool:
        return self.value.startswith("ce_kg_")

    @property
    def batch_retrieval(self) -> bool:
        return self.value.endswith(("_br", "_br_bg"))

    @property
    def batch_generation(self) -> bool:
        return self.value.endswith("_bg")

    def with_granularity(self, granularity: Granularity) -> "Variant":
        """Same blocking optimisation, node or triple context."""
        if not self.uses_retrieval or self is Variant.RAG4EM:
            return self
        suffix = self.value.removeprefix("ce_kg_rag4em").removeprefix("ce_rag4em")
        prefix = "ce_kg_rag4em" if granularity is Granularity.TRIPLE else "ce_rag4em"
        return Variant(prefix + suffix)


class FrozenConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class BlockingConfig(FrozenConfig):
    method: BlockingMethod = BlockingMethod.QGRAM
    q: int = Field(default=3, ge=2)
    xqgram_threshold: float = Field(default=0.8, gt=0, le=1)
    max_bs: int = Field(default=6, ge=1)
    restrict_to_labeled: bool = True


class RetrievalConfig(FrozenConfig):
    k: int = Field(default=2, ge=1)
    granularity: Granularity = Granularity.ENTITY
    dimension: int = Field(default=256, ge=1)
    query_char_cap: int = Field(default=8000, ge=1)
    embedder: EmbedderKind = EmbedderKind.MOCK


class SearchConfig(FrozenConfig):
    d_max: int = Field(default=3, ge=1)
    exp_neighbor_cap: int = Field(default=20, ge=1)
    triple_top_k: int = Field(default=2, ge=1)
    direction: Direction = Direction.UNDIRECTED


class DecodingConfig(FrozenConfig):
    temperature: float = Field(default=0.5, ge=0)
    top_p: float = Field(default=0.8, gt=0, le=1)
    top_k_decode: int = Field(default=20, ge=1)
    max_tokens: int = Field(default=1024, ge=1)


class GenerationConfig(FrozenConfig):
    backend: BackendKind = BackendKind.MOCK
    decoding: DecodingConfig = DecodingConfig()
    mock_threshold: float = Field(default=0.5, ge=0, le=1)
    reask_on_mismatch: bool = True


class RunConfig(FrozenConfig):
    dataset_path: Path
    dataset_name: str | None = None
    splits: tuple[str, ...] = ("test.csv",)
    kg_catalog: Path | None = None
    kg_edges: Path | None = None
    kg_index: Path | None = None
    output_dir: Path = Path("runs")

    variant: Variant = Variant.CE_RAG4EM_BR
    traversal: Traversal | None = None
    blocking: BlockingConfig = BlockingConfig()
    retrieval: RetrievalConfig = RetrievalConfig()
    search: SearchConfig = SearchConfig()
    generation: GenerationConfig = GenerationConfig()

    seed: int = 0
    max_pairs: int | None = Field(default=None, ge=1)
    parallelism: int = Field(default=4, ge=1)
    sweep: dict[str, list[str | int]] = {}

    @model_validator(mode="after")
    def check_variant_combination(self) -> Self:
        granularity = self.retrieval.granularity
        if self.variant is Variant.LLM_EM:
            if self.traversal is not None:
                raise ValueError(messages.CONFIG_TRAVERSAL_NOT_ALLOWED.format(variant=self.variant))
        elif self.variant.uses_kg:
            if granularity is not Granularity.TRIPLE:
                raise ValueError(
                    messages.CONFIG_GRANULARITY_MISMATCH.format(
                        variant=self.variant, granularity=granularity
                    )
                )
            if self.traversal is None:
                raise ValueError(messages.CONFIG_TRAVERSAL_REQUIRED.format(variant=self.variant))
        else:
            if granularity is Granularity.TRIPLE:
                raise ValueError(
                    messages.CONFIG_GRANULARITY_MISMATCH.format(
                        variant=self.variant, granularity=granularity
                    )
                )
            if self.traversal is not None:
                raise ValueError(messages.CONFIG_TRAVERSAL_NOT_ALLOWED.format(variant=self.variant))

        if self.variant.uses_retrieval and self.kg_index is None and self.kg_catalog is None:
            raise ValueError(
                messages.CONFIG_MISSING_KG_PATH.format(variant=self.variant, field="kg_catalog")
            )
        if self.variant.uses_kg and self.kg_edges is None:
            raise ValueError(
                messages.CONFIG_MISSING_KG_PATH.format(variant=self.variant, field="kg_edges")
            )
        return self

    @property
    def granularity(self) -> Granularity:
        return self.retrieval.granularity

    @property
    def context_top_k(self) -> int:
        """Retained context budget: triples for KG variants, nodes otherwise."""
        if self.retrieval.granularity is Granularity.TRIPLE:
            return self.search.triple_top_k
        return self.retrieval.k

    @property
    def name(self) -> str:
        return self.dataset_name or self.dataset_path.name

    def run_label(self) -> str:
        parts = [
            self.name,
            self.variant.value,
            self.blocking.method.value,
            f"bs{self.blocking.max_bs}",
            f"k{self.context_top_k}",
            self.granularity.value,
        ]
        if self.traversal is not None:
            parts.append(self.traversal.value)
        return "-".join(parts)


def parse_override(raw: str) -> tuple[list[str], Any]:
    key, sep, value = raw.partition("=")
    if not sep or not key.strip():
        raise ConfigError(messages.CONFIG_BAD_OVERRIDE.format(override=raw))
    try:
        parsed: Any = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip().split("."), parsed


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    for raw in overrides:
        path, value = parse_override(raw)
        node = data
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(messages.CONFIG_BAD_OVERRIDE.format(override=raw))
            node = child
        node[path[-1]] = value
    return data


def read_config_file(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(messages.CONFIG_FILE_UNREADABLE.format(path=path, error=e)) from e
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(messages.CONFIG_FILE_UNREADABLE.format(path=path, error=e)) from e
    if not isinstance(data, dict):
        raise ConfigError(messages.CONFIG_FILE_UNREADABLE.format(path=path, error="not a table"))
    return data


def build_run_config(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(messages.CONFIG_INVALID.format(error=e)) from e


def load_run_config(path: Path | None, overrides: list[str] | None = None) -> RunConfig:
    data = read_config_file(path) if path is not None else {}
    return build_run_config(apply_overrides(data, overrides or []))
