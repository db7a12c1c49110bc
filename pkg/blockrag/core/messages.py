CONFIG_BAD_OVERRIDE = "Invalid override '{override}', expected dotted.key=value"
CONFIG_FILE_UNREADABLE = "Cannot read config file {path}: {error}"
CONFIG_INVALID = "Invalid run configuration: {error}"
CONFIG_GRANULARITY_MISMATCH = "Variant {variant} does not support granularity {granularity}"
CONFIG_TRAVERSAL_REQUIRED = "Variant {variant} requires a traversal (bfs or exp)"
CONFIG_TRAVERSAL_NOT_ALLOWED = "Variant {variant} does not take a traversal"
CONFIG_MISSING_KG_PATH = "Variant {variant} requires the {field} path"
CONFIG_MAX_BS_INVALID = "max_bs must be >= 1, got {max_bs}"
CONFIG_REMOTE_URL_MISSING = "Remote {service} selected but no endpoint url is configured"

DATASET_FILE_MISSING = "Dataset file is missing"
DATASET_MISSING_COLUMNS = "Missing required columns: {columns}"
DATASET_DUPLICATE_ID = "Duplicate record id '{record_id}'"
DATASET_WRONG_SIDE = "Record '{record_id}' belongs to the {found} table, not the {expected} table"
DATASET_EMPTY_ID = "Empty record id"
DATASET_DANGLING_ID = "Unknown {side} record id '{record_id}'"
DATASET_BAD_LABEL = "Label must be 0 or 1, got '{label}'"
DATASET_BAD_ROW = "Row has {found} fields, header has {expected}"

RECORD_NOT_FOUND = "Unknown {side} record id '{record_id}'"
DUPLICATE_ATTRIBUTE = "Attribute names must be unique within a record, '{name}' repeats"
DUPLICATE_DECISION = "Duplicate decision for pair ({source_id}, {target_id})"

EMPTY_BLOCK = "Block {ordinal} has no pairs"
EMPTY_BATCH = "Batch prompt needs at least one pair"
EMPTY_GRID = "Sweep grid is empty"
GRID_BAD_AXIS = "Invalid grid axis '{axis}', expected key=v1,v2"
UNKNOWN_GRID_KEY = "Unknown sweep parameter '{key}', expected one of {allowed}"
ZERO_PAIRS = "Cannot amortize over {pairs} pairs"
EMBED_DIMENSION_INVALID = "Embedding dimension must be >= 1, got {dimension}"

INDEX_DIMENSION_MISMATCH = "Query has dimension {found}, index has {expected}"
INDEX_DUPLICATE_ID = "Duplicate index item id '{item_id}'"
INDEX_BAD_K = "k must be >= 1, got {k}"

KG_DANGLING_EDGE = "Edge ({head}, {predicate}, {tail}) references an unknown id"
KG_BAD_EDGE_LINE = "Expected 3 tab-separated fields, got {found}"
CATALOG_BAD_LINE = "Invalid catalog line: {error}"

REMOTE_HTTP_ERROR = "{method} {url} failed with HTTP {status_code}"
REMOTE_TRANSPORT_ERROR = "{method} {url} failed: {error}"
REMOTE_BAD_PAYLOAD = "Unexpected response payload from {url}: {error}"
