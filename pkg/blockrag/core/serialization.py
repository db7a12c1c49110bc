# Record and pair serialization (the text the embedder and the prompts see).
#
# Format is "name: value; name: value" in attribute order. Separators inside
# values are not escaped, so "name: a;b" is a known ambiguity.

from blockrag.schemas.records import CandidatePair, Dataset, Record

ATTRIBUTE_SEPARATOR = "; "


def serialize_record(record: Record) -> str:
    return ATTRIBUTE_SEPARATOR.join(
        f"{name}: {value}" if value else f"{name}:" for name, value in record.attributes
    )


def serialize_pair_query(pair: CandidatePair, dataset: Dataset) -> str:
    source = dataset.source_record(pair.source_id)
    target = dataset.target_record(pair.target_id)
    return f"Entity 1: {serialize_record(source)} Entity 2: {serialize_record(target)}"
