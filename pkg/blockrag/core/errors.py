from pathlib import Path


class BlockRagError(Exception):
    pass


class ConfigError(BlockRagError):
    pass


class DatasetLoadError(BlockRagError):
    def __init__(self, message: str, *, path: Path, line: int | None = None) -> None:
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{location}: {message}")


class RecordLookupError(BlockRagError):
    def __init__(self, message: str, *, record_id: str) -> None:
        self.record_id = record_id
        super().__init__(message)


class UsageError(BlockRagError):
    pass


class IndexDimensionError(BlockRagError):
    pass


class IntegrityError(BlockRagError):
    pass


class RemoteServiceError(BlockRagError):
    def __init__(self, message: str, *, status_code: int | None = None) -> None:
        self.status_code = status_code
        super().__init__(message)
