"""Schema-driven ingestion and preprocessing of mixed-type tables"""
from datamodel.errors import (
    MuralError,
    SchemaError,
    ParseError,
    DataError,
    ConfigError,
    ForestFormatError,
    CohortError,
    EvaluationError,
    InvariantError,
)
from datamodel.schema import ColumnKind, ColumnSpec, Schema, Missingness, parse_schema, load_schema
from datamodel.dataset import (
    Dataset,
    StandardizationParams,
    MISSING_CODE,
    load_csv,
    content_fingerprint,
    write_csv,
    standardize,
    apply_standardization,
    sturges_bin_count,
    discretize,
)
