# Decision parsing.
#
# Single answers: the last "Match Decision: Yes|No", else the last standalone
# yes/no word, else "no" with fallback provenance.
# Batch answers: a bracketed list "Match Decisions: [Yes, No, ...]" or one
# "Pair i: Yes|No" line per pair. Anything that does not yield exactly B
# decisions is padded or truncated with "no" and reported as defaulted; the
# engine may then re-ask per pair.

import re
from collections.abc import Sequence

from blockrag.schemas.records import CandidatePair, Decision, MatchDecision, PairKey, Provenance
from blockrag.schemas.results import BatchResult, BatchStatus

DECISION_RE = re.compile(r"match\s+decision\b\s*[:\-]?\s*\[?\s*\**\s*(yes|no)\b", re.I)
STANDALONE_RE = re.compile(r"\b(yes|no)\b", re.I)
BATCH_LIST_RE = re.compile(r"match\s+decisions?\b\s*[:\-]?\s*\**\s*\[([^\]]*)\]", re.I)
PAIR_LINE_RE = re.compile(r"^[\s*#-]*pair\s*(\d+)\s*\**\s*[:\-]\s*\**\s*(yes|no)\b", re.I | re.M)

_STRIP_CHARS = " \t\n*'\"`."


def parse_single(text: str, key: PairKey, *, block: int | None = None) -> MatchDecision:
    found = DECISION_RE.findall(text) or STANDALONE_RE.findall(text)
    if found:
        return MatchDecision(
            source_id=key.source_id,
            target_id=key.target_id,
            decision=Decision(found[-1].lower()),
            provenance=Provenance.PARSED,
            raw_text=text,
            block=block,
        )
    return MatchDecision(
        source_id=key.source_id,
        target_id=key.target_id,
        decision=Decision.NO,
        provenance=Provenance.FALLBACK_DEFAULT,
        raw_text=text,
        block=block,
    )


def read_bracket_list(text: str) -> list[Decision] | None:
    """Last bracketed list whose every entry is yes or no."""
    for match in reversed(BATCH_LIST_RE.findall(text)):
        pieces = [piece.strip(_STRIP_CHARS).lower() for piece in match.split(",")]
        if pieces and all(piece in ("yes", "no") for piece in pieces):
            return [Decision(piece) for piece in pieces]
    return None


def read_pair_lines(text: str) -> dict[int, Decision]:
    lines: dict[int, Decision] = {}
    for index, value in PAIR_LINE_RE.findall(text):
        lines.setdefault(int(index), Decision(value.lower()))
    return lines


def read_batch_decisions(text: str, expected: int) -> tuple[list[Decision], bool]:
    """Best decision sequence found and whether it holds exactly `expected` entries."""
    listed = read_bracket_list(text)
    if listed is not None and len(listed) == expected:
        return listed, True

    lines = read_pair_lines(text)
    if sorted(lines) == list(range(1, expected + 1)):
        return [lines[i] for i in range(1, expected + 1)], True

    if expected == 1:
        single = DECISION_RE.findall(text)
        if single:
            return [Decision(single[-1].lower())], True

    if listed is not None:
        return listed, False
    return [lines[i] for i in sorted(lines)], False


def parse_batch(text: str, pairs: Sequence[CandidatePair], *, block: int) -> BatchResult:
    decisions, exact = read_batch_decisions(text, len(pairs))
    results = []
    for i, pair in enumerate(pairs):
        recovered = i < len(decisions)
        results.append(
            MatchDecision(
                source_id=pair.source_id,
                target_id=pair.target_id,
                decision=decisions[i] if recovered else Decision.NO,
                provenance=Provenance.PARSED if recovered else Provenance.FALLBACK_DEFAULT,
                raw_text=text,
                block=block,
            )
        )
    return BatchResult(
        block=block,
        decisions=tuple(results),
        parse_status=BatchStatus.CLEAN if exact else BatchStatus.DEFAULTED,
    )
