"""
Exception hierarchy shared by every layer of the pipeline.

Each exception carries a stable process exit code and a short machine code,
so the command-line layer can translate failures without inspecting messages.
"""
from typing import Optional


class RelGraphError(Exception):
    """Base class for all pipeline errors."""

    exit_code: int = 1
    code: str = "error"

    def __init__(self, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def __str__(self) -> str:
        return self.message


class ConfigurationError(RelGraphError):
    exit_code = 1
    code = "config"


class ContractError(RelGraphError):
    exit_code = 1
    code = "contract"


class DimensionError(ContractError):
    code = "dimension"


class EmptyInputError(ContractError):
    code = "empty_input"


class DeterminismError(ContractError):
    code = "nondeterministic"


class DataError(RelGraphError):
    exit_code = 2
    code = "data"


class FileFormatError(DataError):
    code = "bad_magic"


class FileVersionError(DataError):
    code = "bad_version"


class FileTruncatedError(DataError):
    code = "truncated"


class FileChecksumError(DataError):
    code = "bad_checksum"


class FileMissingError(DataError):
    code = "not_found"


class NumericError(RelGraphError):
    exit_code = 3
    code = "numeric"
