# Prompt templates for per-query and block-level batch inference.
#
# Both share the role preamble and the relevance-filtering instruction; the
# batch template lists the block's pairs once and renders the shared context
# once.

from collections.abc import Sequence

from blockrag.core import messages
from blockrag.core.errors import UsageError
from blockrag.schemas.knowledge import ContextBundle

PREAMBLE = (
    "You are an expert in entity matching, who is to determine whether these two given "
    "entity representations refer to the same entity. You are also provided with additional "
    "information retrieved from Wikidata, which might be helpful for your reasoning."
)

SINGLE_CONTEXT_LABEL = "Additional Information (You can use this in your reasoning if available):"
BATCH_CONTEXT_LABEL = (
    "Additional Information (shared; you may use this in your reasoning if available):"
)
EMPTY_CONTEXT = "(none)"

SINGLE_INSTRUCTION = """\
## Instruction: 1. Analyse each entity's semantics independently: consider key terms, roles, and context.
2. Rank the relevance of each entry in the additional information, and only use it if it helps make the decision.
3. Perform a step-by-step logical comparison of the two entities."""

BATCH_INSTRUCTION = """\
## Instruction:
1. Process each entity pair sequentially, and treat each pair independently.
2. Analyse each entity's semantics independently: consider key terms, roles, and context.
3. Rank the relevance of each entry in the additional information, and only use it if it helps make the decision.
4. Perform a step-by-step logical comparison of the two entities."""

SINGLE_OUTPUT = "## Output Format: Match Decision: [Yes / No]"
BATCH_OUTPUT = (
    "## Output format: Match Decisions: [Yes / No]\n"
    "Give one decision per pair, in pair order, separated by commas."
)

BATCH_MARKER = "Entity Pairs in a Batch:"


def render_context(context: ContextBundle | None) -> str:
    if context is None or not context.items:
        return EMPTY_CONTEXT
    return "\n" + "\n".join(f"{item.rank}. {item.text}" for item in context.items)


def build_prompt_single(query: str, context: ContextBundle | None = None) -> str:
    return "\n\n".join(
        [
            PREAMBLE,
            f"## Input: {query}\n{SINGLE_CONTEXT_LABEL} {render_context(context)}",
            SINGLE_INSTRUCTION,
            SINGLE_OUTPUT,
        ]
    )


def build_prompt_batch(queries: Sequence[str], context: ContextBundle | None = None) -> str:
    if not queries:
        raise UsageError(messages.EMPTY_BATCH)
    pairs = "\n".join(f"Pair {i} - {query}" for i, query in enumerate(queries, start=1))
    return "\n\n".join(
        [
            PREAMBLE,
            f"## Input:\n{BATCH_MARKER}\n[\n{pairs}\n]\n{BATCH_CONTEXT_LABEL} {render_context(context)}",
            BATCH_INSTRUCTION,
            BATCH_OUTPUT,
        ]
    )
