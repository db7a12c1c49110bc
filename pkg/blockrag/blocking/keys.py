# Blocking key generation: standard (token), q-gram and extended q-gram.
#
# Tokens are lowercase runs of alphanumeric characters, no stemming.
# XQGram adds, per token, the concatenations of ceil(threshold * L) sized
# combinations of its L q-grams (positional order), at most
# XQGRAM_COMBINATION_CAP keys per token.

import itertools
import math
import re

from blockrag.core.config import BlockingConfig, BlockingMethod
from blockrag.schemas.records import Record

XQGRAM_COMBINATION_CAP = 32

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(value: str) -> list[str]:
    return _TOKEN_RE.findall(value.lower())


def record_tokens(record: Record) -> list[str]:
    return [token for _, value in record.attributes for token in tokenize(value)]


def qgrams(token: str, q: int) -> list[str]:
    if len(token) < q:
        return [token]
    return [token[i : i + q] for i in range(len(token) - q + 1)]


def xqgram_combinations(token: str, q: int, threshold: float) -> list[str]:
    if len(token) < q:
        return []
    grams = qgrams(token, q)
    # tolerance keeps e.g. 0.8 * 5 from rounding up to 5
    size = max(1, math.ceil(threshold * len(grams) - 1e-9))
    combinations = itertools.combinations(grams, size)
    return ["".join(combo) for combo in itertools.islice(combinations, XQGRAM_COMBINATION_CAP)]


def block_keys(record: Record, config: BlockingConfig) -> frozenset[str]:
    tokens = record_tokens(record)
    match config.method:
        case BlockingMethod.STANDARD:
            return frozenset(tokens)
        case BlockingMethod.QGRAM:
            return frozenset(gram for token in tokens for gram in qgrams(token, config.q))
        case BlockingMethod.XQGRAM:
            keys: set[str] = set()
            for token in tokens:
                keys.update(qgrams(token, config.q))
                keys.update(xqgram_combinations(token, config.q, config.xqgram_threshold))
            return frozenset(keys)
