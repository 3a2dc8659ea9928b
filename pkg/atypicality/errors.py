"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Exception hierarchy with stable error codes and CLI exit codes.
------------------------------------------------------------------------------
"""
from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_DATA = 3


class AtypicalityError(Exception):
    """Base error. Renders to the same envelope the CLI prints on failure."""
    code = "ATYPICALITY_ERROR"
    exit_code = EXIT_DATA

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": "error",
            "code": self.code,
            "message": self.message,
            "details": self.details,
        }


class InvalidParameterError(AtypicalityError, ValueError):
    code = "INVALID_PARAMETER"
    exit_code = EXIT_USAGE


class ConfigurationError(AtypicalityError, ValueError):
    code = "CONFIGURATION_ERROR"
    exit_code = EXIT_USAGE


class DataFormatError(AtypicalityError):
    """Malformed input. `line` and `column` are 1-based."""
    code = "DATA_FORMAT_ERROR"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 source: Optional[str] = None):
        location = []
        if source:
            location.append(source)
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        full = f"{message} ({', '.join(location)})" if location else message
        super().__init__(full, details={"line": line, "column": column, "source": source})
        self.line = line
        self.column = column


class InputTooShortError(AtypicalityError):
    code = "INPUT_TOO_SHORT"


class ModelFormatError(AtypicalityError):
    code = "MODEL_FORMAT_ERROR"


class BoundNotEvaluableError(AtypicalityError):
    code = "BOUND_NOT_EVALUABLE"
