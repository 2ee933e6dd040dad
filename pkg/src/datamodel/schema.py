"""Column kinds, schemas, and the schema file format"""
import shlex
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from datamodel.errors import SchemaError

CONTINUOUS = "continuous"
ORDINAL = "ordinal"
BINARY = "binary"
CATEGORICAL = "categorical"

_KNOWN_KEYS = {"name", "kind", "missing_token", "missingness"}


class Missingness(str, Enum):
    """Prior knowledge about how a column's missing values arise"""

    AUTO = "auto"
    MNAR = "mnar"
    RANDOM = "random"


@dataclass(frozen=True)
class ColumnKind:
    """One of continuous, ordinal:<k>, binary, categorical:<k>"""

    name: str
    levels: Optional[int] = None

    def __post_init__(self):
        if self.name == CONTINUOUS:
            if self.levels is not None:
                raise SchemaError("continuous columns take no level count")
        elif self.name == BINARY:
            object.__setattr__(self, "levels", 2)
        elif self.name == ORDINAL:
            if self.levels is None or self.levels < 1:
                raise SchemaError("ordinal columns need a positive level count")
        elif self.name == CATEGORICAL:
            if self.levels is None or self.levels < 3:
                raise SchemaError("categorical columns need a cardinality of at least 3")
        else:
            raise SchemaError(f"unknown column kind '{self.name}'")

    @classmethod
    def continuous(cls) -> "ColumnKind":
        return cls(CONTINUOUS)

    @classmethod
    def binary(cls) -> "ColumnKind":
        return cls(BINARY)

    @classmethod
    def ordinal(cls, levels: int) -> "ColumnKind":
        return cls(ORDINAL, levels)

    @classmethod
    def categorical(cls, cardinality: int) -> "ColumnKind":
        return cls(CATEGORICAL, cardinality)

    @classmethod
    def parse(cls, text: str) -> "ColumnKind":
        """Parse `continuous`, `binary`, `ordinal:<k>` or `categorical:<k>`"""
        text = text.strip().lower()
        if ":" in text:
            name, _, count = text.partition(":")
            try:
                levels = int(count)
            except ValueError:
                raise SchemaError(f"malformed kind '{text}': level count must be an integer")
            if name not in (ORDINAL, CATEGORICAL):
                raise SchemaError(f"malformed kind '{text}': only ordinal/categorical take a count")
            return cls(name, levels)
        if text in (ORDINAL, CATEGORICAL):
            raise SchemaError(f"malformed kind '{text}': missing level count (e.g. {text}:4)")
        return cls(text)

    @property
    def is_continuous(self) -> bool:
        return self.name == CONTINUOUS

    @property
    def is_discrete(self) -> bool:
        return self.name != CONTINUOUS

    @property
    def is_binary(self) -> bool:
        return self.name == BINARY

    @property
    def is_ordinal(self) -> bool:
        return self.name == ORDINAL

    @property
    def is_categorical(self) -> bool:
        return self.name == CATEGORICAL

    @property
    def thresholdable(self) -> bool:
        """Kinds whose values are ordered and can be split by a threshold"""
        return self.name in (CONTINUOUS, ORDINAL)

    def __str__(self) -> str:
        if self.name in (ORDINAL, CATEGORICAL):
            return f"{self.name}:{self.levels}"
        return self.name


@dataclass(frozen=True)
class ColumnSpec:
    """A named column with its kind and missing-value conventions"""

    name: str
    kind: ColumnKind
    missingness: Missingness = Missingness.AUTO
    missing_token: str = "NA"

    def is_missing_text(self, text: str) -> bool:
        stripped = text.strip()
        return stripped == "" or stripped == self.missing_token

    def to_line(self) -> str:
        parts = [
            f"name={shlex.quote(self.name)}",
            f"kind={self.kind}",
            f"missing_token={shlex.quote(self.missing_token)}",
            f"missingness={self.missingness.value}",
        ]
        return " ".join(parts)


@dataclass(frozen=True)
class Schema:
    """Ordered list of columns"""

    columns: Tuple[ColumnSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        seen = set()
        for column in self.columns:
            if not column.name or not column.name.strip():
                raise SchemaError("column names must be non-empty")
            if column.name in seen:
                raise SchemaError(f"duplicate column name '{column.name}'")
            seen.add(column.name)

    def __len__(self) -> int:
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def __getitem__(self, index: int) -> ColumnSpec:
        return self.columns[index]

    @property
    def names(self) -> List[str]:
        return [column.name for column in self.columns]

    def index(self, name: str) -> int:
        for i, column in enumerate(self.columns):
            if column.name == name:
                return i
        raise SchemaError(f"unknown column '{name}'")

    def to_text(self) -> str:
        lines = ["# name kind missing_token missingness"]
        lines.extend(column.to_line() for column in self.columns)
        return "\n".join(lines) + "\n"

    def to_dict(self) -> List[Dict[str, str]]:
        return [
            {
                "name": c.name,
                "kind": str(c.kind),
                "missing_token": c.missing_token,
                "missingness": c.missingness.value,
            }
            for c in self.columns
        ]

    @classmethod
    def from_dict(cls, entries: List[Dict[str, str]]) -> "Schema":
        return cls(tuple(_column_from_fields(entry, f"entry {i + 1}") for i, entry in enumerate(entries)))


def _column_from_fields(fields: Dict[str, str], where: str) -> ColumnSpec:
    unknown = set(fields) - _KNOWN_KEYS
    if unknown:
        raise SchemaError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    if "name" not in fields or "kind" not in fields:
        raise SchemaError(f"{where}: 'name' and 'kind' are required")

    missingness_text = fields.get("missingness", Missingness.AUTO.value).strip().lower()
    try:
        missingness = Missingness(missingness_text)
    except ValueError:
        raise SchemaError(f"{where}: missingness must be auto, mnar or random (got '{missingness_text}')")

    return ColumnSpec(
        name=fields["name"],
        kind=ColumnKind.parse(fields["kind"]),
        missingness=missingness,
        missing_token=fields.get("missing_token", "NA"),
    )


def parse_schema(text: str) -> Schema:
    """
    Parse the flat key/value schema format

    One column per line, `key=value` tokens separated by whitespace
    (shell-style quoting allowed). Blank lines and `#` comments are ignored.

    Args:
        text: Schema file contents

    Returns:
        Parsed Schema
    """
    columns = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line, comments=True)
        except ValueError as e:
            raise SchemaError(f"line {line_no}: {e}")
        fields = {}
        for token in tokens:
            key, sep, value = token.partition("=")
            if not sep:
                raise SchemaError(f"line {line_no}: expected key=value, got '{token}'")
            fields[key.strip().lower()] = value
        columns.append(_column_from_fields(fields, f"line {line_no}"))

    if not columns:
        raise SchemaError("schema lists no columns")
    return Schema(tuple(columns))


def load_schema(path) -> Schema:
    """Read and parse a schema file"""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"schema file not found: {path}")
    return parse_schema(path.read_text(encoding="utf-8"))
