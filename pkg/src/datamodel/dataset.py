"""Dataset container, CSV ingestion, standardization and discretization"""
import hashlib
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from datamodel.errors import DataError, ParseError, SchemaError
from datamodel.schema import ColumnKind, ColumnSpec, Schema

logger = logging.getLogger(__name__)

# Code given to masked cells by discretize(); never a valid bin index
MISSING_CODE = -1

ZERO_VARIANCE_TOL = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Column-typed table with an explicit missing mask

    `values` is an (n_rows, n_cols) float64 matrix; discrete columns hold
    their integer codes as floats. Masked cells hold NaN, but `mask` is the
    authority on what is missing.
    """

    schema: Schema
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        if values.ndim != 2 or values.shape != mask.shape:
            raise DataError(f"values {values.shape} and mask {mask.shape} must be matching 2-D arrays")
        if values.shape[1] != len(self.schema):
            raise DataError(f"dataset has {values.shape[1]} columns but schema lists {len(self.schema)}")

        values[mask] = np.nan
        for j, column in enumerate(self.schema):
            observed = values[~mask[:, j], j]
            if not np.all(np.isfinite(observed)):
                raise DataError(f"column '{column.name}' has non-finite observed values")
            if column.kind.is_discrete and observed.size:
                if np.any(observed != np.round(observed)):
                    raise DataError(f"column '{column.name}' has non-integer codes")
                if observed.min() < 0 or observed.max() > column.kind.levels - 1:
                    raise DataError(
                        f"column '{column.name}' has codes outside 0..{column.kind.levels - 1}"
                    )

        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "mask", _readonly(mask))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> List[str]:
        return self.schema.names

    def column_index(self, column: Union[int, str]) -> int:
        if isinstance(column, str):
            return self.schema.index(column)
        if not 0 <= column < self.n_cols:
            raise SchemaError(f"column index {column} out of range")
        return int(column)

    def kind(self, column: Union[int, str]) -> ColumnKind:
        return self.schema[self.column_index(column)].kind

    def column(self, column: Union[int, str]) -> Tuple[np.ndarray, np.ndarray]:
        """Return (values, mask) for one column"""
        j = self.column_index(column)
        return self.values[:, j], self.mask[:, j]

    def codes(self, column: Union[int, str]) -> np.ndarray:
        """Integer codes of a discrete column, MISSING_CODE where masked"""
        j = self.column_index(column)
        codes = np.where(self.mask[:, j], MISSING_CODE, np.nan_to_num(self.values[:, j]))
        return codes.astype(np.int64)

    def masked_columns(self) -> List[int]:
        return [j for j in range(self.n_cols) if self.mask[:, j].any()]

    def replace_column(self, column: Union[int, str], values: np.ndarray, mask: np.ndarray) -> "Dataset":
        j = self.column_index(column)
        new_values = self.values.copy()
        new_mask = self.mask.copy()
        new_values[:, j] = values
        new_mask[:, j] = mask
        return Dataset(self.schema, new_values, new_mask)

    def with_mask(self, column: Union[int, str], rows) -> "Dataset":
        """Mask additional cells of one column (rows: boolean vector or indices)"""
        j = self.column_index(column)
        extra = np.zeros(self.n_rows, dtype=bool)
        extra[rows] = True
        return self.replace_column(j, self.values[:, j], self.mask[:, j] | extra)

    def with_schema(self, schema: Schema) -> "Dataset":
        return Dataset(schema, self.values, self.mask)

    def select_rows(self, rows) -> "Dataset":
        return Dataset(self.schema, self.values[rows], self.mask[rows])

    def select_columns(self, columns: Sequence[Union[int, str]]) -> "Dataset":
        idx = [self.column_index(c) for c in columns]
        schema = Schema(tuple(self.schema[j] for j in idx))
        return Dataset(schema, self.values[:, idx], self.mask[:, idx])

    def fingerprint(self) -> str:
        """Content hash of schema, values and mask"""
        digest = hashlib.sha256()
        digest.update(self.schema.to_text().encode("utf-8"))
        digest.update(np.ascontiguousarray(self.values).tobytes())
        digest.update(np.packbits(self.mask).tobytes())
        return digest.hexdigest()

    def equals(self, other: "Dataset") -> bool:
        """Bit-exact equality of schema, values and masks"""
        return (
            self.schema == other.schema
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def to_frame(self) -> pd.DataFrame:
        """Pandas view with masked cells as NaN"""
        return pd.DataFrame(np.array(self.values), columns=self.names)


@dataclass(frozen=True)
class ColumnScaling:
    name: str
    mean: float
    std: float
    zero_variance: bool = False


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column mean/std computed over observed entries only"""

    columns: Tuple[ColumnScaling, ...] = field(default_factory=tuple)

    def get(self, name: str) -> Optional[ColumnScaling]:
        for scaling in self.columns:
            if scaling.name == name:
                return scaling
        return None

    @property
    def flagged(self) -> List[str]:
        return [s.name for s in self.columns if s.zero_variance]

    def to_dict(self) -> List[Dict]:
        return [
            {"name": s.name, "mean": s.mean, "std": s.std, "zero_variance": s.zero_variance}
            for s in self.columns
        ]

    @classmethod
    def from_dict(cls, entries: List[Dict]) -> "StandardizationParams":
        return cls(
            tuple(
                ColumnScaling(e["name"], float(e["mean"]), float(e["std"]), bool(e["zero_variance"]))
                for e in entries
            )
        )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_source(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise DataError(f"data file not found: {path}")
        return path.read_bytes()
    return source.read()


def content_fingerprint(source) -> str:
    """sha256 of the raw CSV bytes; identifies the exact file a forest was fitted on"""
    return hashlib.sha256(_read_source(source)).hexdigest()


def _parse_cell(text: str, column: ColumnSpec, row: int) -> float:
    kind = column.kind
    stripped = text.strip()
    if kind.is_continuous:
        try:
            value = float(stripped)
        except ValueError:
            raise ParseError(row, column.name, text, "not a number")
        if not math.isfinite(value):
            raise ParseError(row, column.name, text, "not finite")
        return value

    try:
        code = int(stripped)
    except ValueError:
        try:
            as_float = float(stripped)
        except ValueError:
            raise ParseError(row, column.name, text, f"not a {kind.name} code")
        if not math.isfinite(as_float) or not as_float.is_integer():
            raise ParseError(row, column.name, text, f"not a {kind.name} code")
        code = int(as_float)
    if not 0 <= code < kind.levels:
        raise ParseError(row, column.name, text, f"outside 0..{kind.levels - 1}")
    return float(code)


def load_csv(schema: Schema, source) -> Dataset:
    """
    Load a UTF-8 CSV file into a Dataset

    Args:
        schema: Column schema; the header must list the same names, in schema
            order or any permutation
        source: bytes, a binary stream, or a path

    Returns:
        Dataset in schema column order
    """
    raw = _read_source(source)
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise DataError(f"data is not valid UTF-8: {e}")

    # Header read as a data row so short rows show up as NaN; empty cells stay ""
    try:
        grid = pd.read_csv(io.StringIO(text), header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise DataError("data file is empty (no header row)")
    except pd.errors.ParserError as e:
        raise DataError(f"ragged row: {e}")

    header = [str(h).strip() for h in grid.iloc[0].tolist()]
    body = grid.iloc[1:].reset_index(drop=True)
    short = body.isna().any(axis=1).to_numpy()
    if short.any():
        i = int(np.argmax(short))
        found = int(body.iloc[i].notna().sum())
        raise DataError(f"ragged row {i + 1}: expected {len(header)} fields, found {found}")

    if sorted(header) != sorted(schema.names) or len(set(header)) != len(header):
        raise SchemaError(
            f"header mismatch: file has [{', '.join(header)}], schema expects [{', '.join(schema.names)}]"
        )

    body.columns = header
    frame = body[list(schema.names)]

    n_rows = len(frame)
    values = np.full((n_rows, len(schema)), np.nan)
    mask = np.zeros((n_rows, len(schema)), dtype=bool)
    for j, column in enumerate(schema):
        for i, cell in enumerate(frame.iloc[:, j].tolist()):
            if column.is_missing_text(cell):
                mask[i, j] = True
            else:
                values[i, j] = _parse_cell(cell, column, i + 1)

    dataset = Dataset(schema, values, mask)
    logger.info("Loaded %d rows x %d columns (%d masked cells)", n_rows, len(schema), int(mask.sum()))
    return dataset


def write_csv(d: Dataset) -> bytes:
    """Serialize a Dataset so that load_csv reproduces it bit-exactly"""
    cells = {}
    for j, column in enumerate(d.schema):
        col_values, col_mask = d.values[:, j], d.mask[:, j]
        if column.kind.is_continuous:
            rendered = [repr(float(v)) for v in col_values]
        else:
            rendered = [str(int(v)) if not m else "" for v, m in zip(col_values, col_mask)]
        cells[column.name] = [column.missing_token if m else r for r, m in zip(rendered, col_mask)]
    frame = pd.DataFrame(cells, columns=d.names)
    return frame.to_csv(index=False, lineterminator="\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

def standardize(d: Dataset, include_ordinal: bool = False) -> Tuple[Dataset, StandardizationParams]:
    """
    Scale each continuous column to observed-entry mean 0 and variance 1

    Zero-variance columns are passed through unscaled and flagged. Ordinal
    columns are left alone unless include_ordinal is set, in which case they
    are scaled and re-typed as continuous.

    Args:
        d: Dataset to scale
        include_ordinal: Also standardize ordinal columns

    Returns:
        Tuple of (scaled dataset, parameters)
    """
    scalings = []
    columns = list(d.schema.columns)
    for j, column in enumerate(d.schema):
        kind = column.kind
        if not (kind.is_continuous or (include_ordinal and kind.is_ordinal)):
            continue
        observed = d.values[~d.mask[:, j], j]
        if observed.size >= 2:
            mean = float(observed.mean())
            std = float(observed.std(ddof=1))
        else:
            mean = float(observed.mean()) if observed.size else 0.0
            std = 0.0
        flagged = not std > ZERO_VARIANCE_TOL
        if flagged:
            logger.warning("Column '%s' has zero variance; left unscaled", column.name)
        scalings.append(ColumnScaling(column.name, mean, std, flagged))
        if kind.is_ordinal:
            columns[j] = ColumnSpec(column.name, ColumnKind.continuous(), column.missingness, column.missing_token)

    params = StandardizationParams(tuple(scalings))
    return apply_standardization(d.with_schema(Schema(tuple(columns))), params), params


def apply_standardization(d: Dataset, params: StandardizationParams) -> Dataset:
    """Scale a dataset with previously computed parameters"""
    values = np.array(d.values)
    for scaling in params.columns:
        if scaling.zero_variance or scaling.name not in d.names:
            continue
        j = d.column_index(scaling.name)
        values[:, j] = (values[:, j] - scaling.mean) / scaling.std
    return Dataset(d.schema, values, d.mask)


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

def sturges_bin_count(n: int) -> int:
    """Sturges rule: ceil(log2 n) + 1, computed exactly in integers"""
    if n < 1:
        raise DataError("Sturges bin count needs n >= 1")
    return (int(n) - 1).bit_length() + 1


def discretize(values: np.ndarray, mask: np.ndarray, n_bins: int, method: str = "width") -> np.ndarray:
    """
    Bin observed values into 0..n_bins-1; masked entries get MISSING_CODE

    Args:
        values: Continuous values
        mask: True where the value is missing
        n_bins: Number of bins
        method: "width" for equal-width bins over [min, max] (the last bin is
            closed), "quantile" for equal-frequency edges

    Returns:
        int64 code array
    """
    if n_bins < 1:
        raise DataError("discretize needs at least one bin")
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    observed = values[~mask]
    if observed.size == 0:
        raise DataError("cannot discretize an all-masked column")

    codes = np.full(values.shape, MISSING_CODE, dtype=np.int64)
    lo, hi = observed.min(), observed.max()
    if n_bins == 1 or hi <= lo:
        codes[~mask] = 0
        return codes

    if method == "width":
        inner = np.linspace(lo, hi, n_bins + 1)[1:-1]
    elif method == "quantile":
        inner = np.unique(np.quantile(observed, np.linspace(0.0, 1.0, n_bins + 1))[1:-1])
    else:
        raise DataError(f"unknown binning method '{method}'")
    codes[~mask] = np.searchsorted(inner, observed, side="right")
    return codes
