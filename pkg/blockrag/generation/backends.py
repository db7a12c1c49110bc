# Completion backends.
#
# MockMatcherBackend is a deterministic oracle: it pulls every
# "Entity 1: ... Entity 2: ..." line out of the prompt, scores token-set
# Jaccard over the attribute values and answers Yes at or above the
# threshold. Context is ignored, so batch and per-pair answers coincide.

import logging
import re
from typing import Protocol

import httpx

from blockrag.blocking.keys import tokenize
from blockrag.core import messages
from blockrag.core.config import BackendKind, DecodingConfig, GenerationConfig, Llm
from blockrag.core.errors import ConfigError, RemoteServiceError
from blockrag.core.http import new_async_client, request_with_retry
from blockrag.core.serialization import ATTRIBUTE_SEPARATOR
from blockrag.generation.templates import BATCH_MARKER

logger = logging.getLogger(__name__)

PAIR_LINE_RE = re.compile(r"^(?:## Input: |Pair \d+ - )Entity 1: (.*?) Entity 2: (.*)$", re.M)


class CompletionBackend(Protocol):
    async def complete(self, prompt: str, decoding: DecodingConfig) -> str: ...

    async def aclose(self) -> None: ...


def value_tokens(entity: str) -> set[str]:
    tokens: set[str] = set()
    for attribute in entity.split(ATTRIBUTE_SEPARATOR.strip()):
        _, sep, value = attribute.partition(":")
        tokens.update(tokenize(value if sep else attribute))
    return tokens


def jaccard(left: set[str], right: set[str]) -> float:
    if not left and not right:
        return 1.0
    return len(left & right) / len(left | right)


def mock_complete(prompt: str, threshold: float = 0.5) -> str:
    answers = [
        "Yes" if jaccard(value_tokens(entity1), value_tokens(entity2)) >= threshold else "No"
        for entity1, entity2 in PAIR_LINE_RE.findall(prompt)
    ]
    if BATCH_MARKER in prompt:
        return f"Match Decisions: [{', '.join(answers)}]"
    if not answers:
        # nothing extractable: two empty token sets
        answers = ["Yes" if jaccard(set(), set()) >= threshold else "No"]
    return f"Match Decision: {answers[-1]}"


class MockMatcherBackend:
    def __init__(self, threshold: float = 0.5) -> None:
        self.threshold = threshold

    async def complete(self, prompt: str, decoding: DecodingConfig) -> str:
        return mock_complete(prompt, self.threshold)

    async def aclose(self) -> None:
        return None


class ChatCompletionsBackend:
    """Any endpoint speaking the chat-completions JSON protocol."""

    def __init__(
        self,
        settings: Llm,
        *,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        if not settings.url:
            raise ConfigError(messages.CONFIG_REMOTE_URL_MISSING.format(service="llm"))
        self._settings = settings
        self._url = f"{settings.url.rstrip('/')}/chat/completions"
        self._client = new_async_client(
            settings.url,
            api_key=settings.api_key,
            timeout_secs=settings.timeout_secs,
            transport=transport,
        )

    async def complete(self, prompt: str, decoding: DecodingConfig) -> str:
        payload = {
            "model": self._settings.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": decoding.temperature,
            "top_p": decoding.top_p,
            "top_k": decoding.top_k_decode,
            "max_tokens": decoding.max_tokens,
        }
        response = await request_with_retry(
            self._client,
            "POST",
            self._url,
            json=payload,
            max_retries=self._settings.max_retries,
            backoff_base_secs=self._settings.backoff_base_secs,
        )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise RemoteServiceError(
                messages.REMOTE_BAD_PAYLOAD.format(url=self._url, error=e)
            ) from e
        if not isinstance(content, str):
            raise RemoteServiceError(
                messages.REMOTE_BAD_PAYLOAD.format(url=self._url, error="content is not text")
            )
        return content

    async def aclose(self) -> None:
        await self._client.aclose()


def new_backend(config: GenerationConfig, settings: Llm) -> CompletionBackend:
    if config.backend is BackendKind.REMOTE:
        return ChatCompletionsBackend(settings)
    return MockMatcherBackend(config.mock_threshold)
