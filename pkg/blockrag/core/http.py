# Shared httpx async client factory and retry loop for every remote endpoint
# (embedder, chat completions, description lookup).
#
# https://www.python-httpx.org/async/
#
# Retries cover transport errors and the usual transient statuses, with
# exponential backoff base * 2**attempt between attempts.

import asyncio
import logging
from typing import Any

import httpx
from pydantic import SecretStr

from blockrag.core import messages
from blockrag.core.errors import RemoteServiceError

logger = logging.getLogger(__name__)

RETRYABLE_STATUS_CODES = frozenset({429, 500, 502, 503, 504})


def new_async_client(
    base_url: str,
    *,
    api_key: SecretStr | None = None,
    timeout_secs: float = 30.0,
    transport: httpx.AsyncBaseTransport | None = None,
) -> httpx.AsyncClient:
    headers = {"Accept": "application/json", "User-Agent": "blockrag/0.1"}
    if api_key is not None:
        headers["Authorization"] = f"Bearer {api_key.get_secret_value()}"
    return httpx.AsyncClient(
        base_url=base_url,
        headers=headers,
        timeout=timeout_secs,
        transport=transport,
    )


async def request_with_retry(
    client: httpx.AsyncClient,
    method: str,
    url: str,
    *,
    max_retries: int,
    backoff_base_secs: float,
    json: Any | None = None,
    params: dict[str, str] | None = None,
) -> httpx.Response:
    for attempt in range(max_retries + 1):
        try:
            response = await client.request(method, url, json=json, params=params)
        except httpx.TransportError as e:
            if attempt == max_retries:
                raise RemoteServiceError(
                    messages.REMOTE_TRANSPORT_ERROR.format(method=method, url=url, error=e)
                ) from e
            logger.warning("%s %s attempt %d failed: %s", method, url, attempt + 1, e)
        else:
            if response.is_success:
                return response
            if response.status_code not in RETRYABLE_STATUS_CODES or attempt == max_retries:
                raise RemoteServiceError(
                    messages.REMOTE_HTTP_ERROR.format(
                        method=method, url=url, status_code=response.status_code
                    ),
                    status_code=response.status_code,
                )
            logger.warning(
                "%s %s attempt %d got HTTP %d",
                method,
                url,
                attempt + 1,
                response.status_code,
            )

        await asyncio.sleep(backoff_base_secs * 2**attempt)

    raise AssertionError("unreachable")  # pragma: no cover
