"""Test script for schemas, CSV ingestion, standardization and discretization"""
import hashlib
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent))

from datamodel import (
    ColumnKind,
    DataError,
    Dataset,
    MISSING_CODE,
    Missingness,
    ParseError,
    SchemaError,
    content_fingerprint,
    discretize,
    load_csv,
    parse_schema,
    standardize,
    sturges_bin_count,
    write_csv,
)
from helpers import banner, continuous_dataset, make_schema, mixed_dataset, raises, run_tests


def test_schema_parsing():
    """Schema lines, hints, tokens and the text round trip"""
    banner("Schema Parsing")

    schema = parse_schema(
        "# comment line\n"
        "name=age kind=continuous\n"
        "\n"
        "name=male kind=binary missingness=mnar\n"
        "name='pain score' kind=ordinal:4 missing_token=?\n"
        "name=unit kind=categorical:3 missingness=random\n"
    )
    assert schema.names == ["age", "male", "pain score", "unit"]
    assert schema[1].kind == ColumnKind.binary() and schema[1].kind.levels == 2
    assert schema[1].missingness == Missingness.MNAR
    assert schema[2].kind.levels == 4 and schema[2].missing_token == "?"
    assert schema[3].missingness == Missingness.RANDOM
    print("✓ Four columns with kinds, hints and tokens")

    assert parse_schema(schema.to_text()) == schema
    print("✓ to_text parses back to the same schema")

    raises(SchemaError, parse_schema, "name=x kind=ordinal\n")
    raises(SchemaError, parse_schema, "name=x kind=categorical:2\n")
    raises(SchemaError, parse_schema, "name=x kind=continuous\nname=x kind=binary\n")
    raises(SchemaError, parse_schema, "name=x kind=continuous colour=red\n")
    raises(SchemaError, parse_schema, "# nothing here\n")


def test_load_csv():
    """Missing cells, permuted headers and cell errors"""
    banner("Load CSV")

    schema = make_schema(("x", "continuous"), ("flag", "binary"))
    d = load_csv(schema, b"x,flag\n1.5,0\n,1\n")
    assert d.n_rows == 2 and d.n_cols == 2
    assert int(d.mask.sum()) == 1 and d.mask[1, 0]
    print("✓ Empty continuous cell becomes exactly one masked cell")

    permuted = load_csv(schema, b"flag,x\n0,1.5\nNA,2\n")
    assert permuted.names == ["x", "flag"]
    assert permuted.values[0, 0] == 1.5 and permuted.mask[1, 1]
    print("✓ Permuted header is reordered; NA token masks")

    error = raises(ParseError, load_csv, schema, b"x,flag\n1.0,2\n")
    assert error.column == "flag" and error.row == 1
    assert "flag" in str(error)
    print("✓ Out-of-range binary code names the cell")

    raises(ParseError, load_csv, schema, b"x,flag\nabc,0\n")
    raises(SchemaError, load_csv, schema, b"x,other\n1,0\n")
    raises(DataError, load_csv, schema, b"x,flag\n1,0,3\n")
    short = raises(DataError, load_csv, schema, b"x,flag\n1,0\n2\n")
    assert "ragged row 2" in str(short) and "found 1" in str(short)
    raises(DataError, load_csv, schema, b"")

    quoted = load_csv(schema, b'\xef\xbb\xbf"x","flag"\n\n"2.5",""\n-1,1\n')
    assert quoted.n_rows == 2 and quoted.mask[:, 1].tolist() == [True, False]
    assert quoted.values[0, 0] == 2.5 and quoted.values[1, 0] == -1.0
    assert load_csv(schema, b"x,flag\n").n_rows == 0
    print("✓ BOM, quotes, blank lines and a header-only file")


def test_write_csv_roundtrip():
    """write_csv output loads back bit-exactly"""
    banner("CSV Round Trip")

    d = mixed_dataset(n=40, seed=3)
    again = load_csv(d.schema, write_csv(d))
    assert again.equals(d)
    assert again.fingerprint() == d.fingerprint()
    print("✓ Values, masks and fingerprint survive the round trip")


def test_dataset_validation():
    """Codes are range-checked and arrays are read-only"""
    banner("Dataset Validation")

    schema = make_schema(("grade", "ordinal:3"))
    raises(DataError, Dataset, schema, np.array([[0.0], [3.0]]), np.zeros((2, 1), dtype=bool))
    raises(DataError, Dataset, schema, np.array([[0.5]]), np.zeros((1, 1), dtype=bool))

    d = Dataset(schema, np.array([[0.0], [7.0]]), np.array([[False], [True]]))
    assert np.isnan(d.values[1, 0])
    assert d.codes("grade").tolist() == [0, MISSING_CODE]
    assert not d.values.flags.writeable and not d.mask.flags.writeable
    print("✓ Masked cell ignored by range check; arrays are frozen")

    raw = b"x\n1\n2\n"
    assert content_fingerprint(raw) == hashlib.sha256(raw).hexdigest()
    print("✓ Content fingerprint is the sha256 of the raw bytes")


def test_standardize():
    """Observed-entry mean/std, zero-variance flag, ordinal option"""
    banner("Standardize")

    scaled, params = standardize(continuous_dataset([1.0, 2.0, 3.0]))
    assert np.allclose(scaled.values[:, 0], [-1.0, 0.0, 1.0])
    assert abs(scaled.values[:, 0].sum()) < 1e-12
    print("✓ [1, 2, 3] -> [-1, 0, 1]")

    flat, params = standardize(continuous_dataset([5.0, 5.0, 5.0]))
    assert np.array_equal(flat.values[:, 0], [5.0, 5.0, 5.0])
    assert params.flagged == ["x1"]
    print("✓ Constant column left unscaled and flagged")

    holed, params = standardize(continuous_dataset([0.0, 10.0, 0.0, 20.0], mask=[False, False, True, False]))
    scaling = params.get("x1")
    assert scaling.mean == 10.0 and scaling.std == 10.0
    assert holed.mask[2, 0] and np.allclose(holed.values[[0, 1, 3], 0], [-1.0, 0.0, 1.0])
    print("✓ Parameters from observed cells only")

    d = mixed_dataset(n=60)
    kept, _ = standardize(d)
    assert kept.kind("grade").is_ordinal
    retyped, params = standardize(d, include_ordinal=True)
    assert retyped.kind("grade").is_continuous and params.get("grade") is not None
    print("✓ Ordinal columns scaled only on request")


def test_sturges_and_discretize():
    """Sturges bin counts and equal-width binning"""
    banner("Sturges and Discretize")

    assert sturges_bin_count(3000) == 13
    assert sturges_bin_count(1) == 1
    assert sturges_bin_count(1024) == 11
    raises(DataError, sturges_bin_count, 0)
    print("✓ 3000 -> 13, 1 -> 1, 1024 -> 11")

    no_mask = np.zeros(3, dtype=bool)
    assert discretize(np.array([0.0, 0.5, 1.0]), no_mask, 2).tolist() == [0, 1, 1]
    assert discretize(np.array([4.0, 4.0, 4.0]), no_mask, 5).tolist() == [0, 0, 0]
    codes = discretize(np.array([0.0, 1.0, np.nan]), np.array([False, False, True]), 2)
    assert codes.tolist() == [0, 1, MISSING_CODE]
    print("✓ Equal-width edges, constant column, masked cell")

    quantile = discretize(np.arange(8, dtype=float), np.zeros(8, dtype=bool), 4, method="quantile")
    assert np.bincount(quantile).tolist() == [2, 2, 2, 2]
    print("✓ Quantile bins are equal-frequency")


def main():
    """Run all tests"""
    return run_tests("DATAMODEL TESTS", [
        ("Schema Parsing", test_schema_parsing),
        ("Load CSV", test_load_csv),
        ("CSV Round Trip", test_write_csv_roundtrip),
        ("Dataset Validation", test_dataset_validation),
        ("Standardize", test_standardize),
        ("Sturges and Discretize", test_sturges_and_discretize),
    ])


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
