"""Exception hierarchy shared by every package"""


class MuralError(Exception):
    """Base class for user-facing errors (CLI exit code 1)"""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SchemaError(MuralError):
    code = "schema"


class ParseError(MuralError):
    """A CSV cell that does not parse under its column kind"""

    code = "parse"

    def __init__(self, row: int, column: str, text: str, reason: str):
        super().__init__(f"row {row}, column '{column}': cannot parse '{text}' ({reason})")
        self.row = row
        self.column = column
        self.text = text


class DataError(MuralError):
    code = "data"


class ConfigError(MuralError):
    code = "config"


class ForestFormatError(MuralError):
    code = "forest-format"


class CohortError(MuralError):
    code = "cohort"


class EvaluationError(MuralError):
    code = "eval"


class InvariantError(Exception):
    """Internal invariant violation (CLI exit code 2)"""

    code = "invariant"
