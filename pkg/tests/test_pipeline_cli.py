"""Test script for cohort expressions, configuration, the fit workflow and the command line"""
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent))

from cli.cohorts import parse_expression, resolve_cohorts, select_rows
from datamodel import CohortError, ConfigError, write_csv
from distance import read_matrix
from forest import ForestConfig, load_forest
from main import build_parser, resolve_config
from main import main as cli_main
from pipeline import fit_dataset, run_workflow
from utils.config_loader import (
    THREADS_ENV,
    RunConfig,
    default_threads,
    dump_config,
    load_configuration,
    merge_dicts,
    write_resolved_config,
)
from helpers import banner, continuous_dataset, mixed_dataset, mixed_schema_text, raises, run_tests


def _write_inputs(tmp: Path, n: int = 120, seed: int = 1):
    """Data, schema and a small-forest config file"""
    data = tmp / "data.csv"
    data.write_bytes(write_csv(mixed_dataset(n=n, seed=seed)))
    schema = tmp / "schema.txt"
    schema.write_text(mixed_schema_text())
    config = tmp / "config.yaml"
    config.write_text(yaml.safe_dump({"forest": {"n_trees": 4, "max_depth": 4}}))
    return str(data), str(schema), str(config)


def _cohort_dataset():
    mask = np.zeros((3, 2), dtype=bool)
    mask[2, 0] = True
    return continuous_dataset(np.array([[1.0, 0.0], [5.0, 1.0], [9.0, 0.0]]), mask, names=["age", "male"])


def test_cohort_expressions():
    """Clauses, conjunctions, masked cells and row-id files"""
    banner("Cohort Expressions")

    d = _cohort_dataset()
    assert select_rows("age > 4 & male == 1", d).tolist() == [1]
    assert select_rows("age >= 1 and male == 0", d).tolist() == [0]
    assert select_rows("age > 4", d).tolist() == [1]
    print("✓ Comparisons never select masked cells")

    assert select_rows("age missing", d).tolist() == [2]
    assert select_rows("age observed & male != 1", d).tolist() == [0]
    assert len(parse_expression("a < 1 & b missing and c == 2")) == 3
    print("✓ missing / observed clauses and both conjunction forms")

    with tempfile.TemporaryDirectory() as tmp:
        ids = Path(tmp) / "ids.txt"
        ids.write_text("2, 0\n0\n")
        assert select_rows(f"@{ids}", d).tolist() == [0, 2]
        ids.write_text("3\n")
        raises(CohortError, select_rows, f"@{ids}", d)
        raises(CohortError, select_rows, f"@{Path(tmp) / 'absent.txt'}", d)
    print("✓ @file row ids are deduplicated and range-checked")

    raises(CohortError, select_rows, "", d)
    raises(CohortError, select_rows, "age > old", d)
    raises(CohortError, select_rows, "age between 1", d)
    raises(CohortError, select_rows, "weight > 3", d)


def test_resolve_cohorts():
    """Empty and overlapping cohorts"""
    banner("Resolve Cohorts")

    d = _cohort_dataset()
    a, b = resolve_cohorts("male == 1", "male == 0", d)
    assert a.tolist() == [1] and b.tolist() == [0, 2]
    print("✓ Disjoint cohorts resolve")

    raises(CohortError, resolve_cohorts, "male == 0", "age < 3", d)
    a, b = resolve_cohorts("male == 0", "age < 3", d, allow_overlap=True)
    assert a.tolist() == [0, 2] and b.tolist() == [0]
    print("✓ Overlap rejected unless allowed")

    raises(CohortError, resolve_cohorts, "age > 100", "male == 0", d)


def test_configuration():
    """Merging, unknown keys, files and the resolved dump"""
    banner("Configuration")

    assert merge_dicts({"a": {"b": 1, "c": 2}}, {"a": {"c": 3}}) == {"a": {"b": 1, "c": 3}}
    raises(ConfigError, merge_dicts, {"a": {"b": 1}}, {"z": 1})
    raises(ConfigError, merge_dicts, {"a": {"b": 1}}, {"a": {"z": 1}})
    raises(ConfigError, merge_dicts, {"a": {"b": 1}}, {"a": 5})
    print("✓ Nested merge; unknown keys and non-mapping sections rejected")

    config = RunConfig.from_dict({"forest": {"n_trees": 7}, "affinity": {"bandwidth": "knn"}})
    assert config.forest.n_trees == 7 and config.forest.max_depth == 10
    assert config.bandwidth == "knn:5"
    raises(ConfigError, RunConfig.from_dict, {"forest": {"colour": 1}})
    raises(ConfigError, RunConfig.from_dict, {"missingness": {"alpha": 2.0}})
    raises(ConfigError, RunConfig.from_dict, {"output": {"format": "parquet"}})
    print("✓ Partial mappings keep defaults; bad values rejected")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "config.yaml"
        path.write_text("cluster:\n  k: 6\n")
        assert load_configuration(str(path)).k == 6
        path.write_text("- a list\n")
        raises(ConfigError, load_configuration, str(path))
        raises(ConfigError, load_configuration, str(Path(tmp) / "absent.yaml"))

        resolved = write_resolved_config(config.with_forest(seed=3), tmp)
        text = resolved.read_text()
        assert "dir" not in yaml.safe_load(text)["output"]
        assert RunConfig.from_dict(yaml.safe_load(text)).to_dict() == config.with_forest(seed=3).to_dict()
    print("✓ Resolved config omits the output directory and loads back")

    assert dump_config(config) == dump_config(RunConfig.from_dict(config.to_dict()))


def test_threads_env():
    """Worker count from the environment"""
    banner("Threads Environment")

    saved = os.environ.pop(THREADS_ENV, None)
    try:
        assert default_threads() == 1
        os.environ[THREADS_ENV] = "3"
        assert default_threads() == 3
        os.environ[THREADS_ENV] = "many"
        raises(ConfigError, default_threads)
        os.environ[THREADS_ENV] = "0"
        raises(ConfigError, default_threads)
    finally:
        os.environ.pop(THREADS_ENV, None)
        if saved is not None:
            os.environ[THREADS_ENV] = saved
    print("✓ Unset -> 1, integer honored, invalid rejected")


def test_flag_precedence():
    """Flags override the config file, which overrides defaults"""
    banner("Flag Precedence")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "config.yaml"
        path.write_text(yaml.safe_dump({"forest": {"n_trees": 4, "max_depth": 3}, "cluster": {"k": 5}}))
        args = build_parser().parse_args(["fit", "d.csv", "s.txt", "--config", str(path), "--trees", "6", "--out", tmp])
        config = resolve_config(args)
    assert config.forest.n_trees == 6
    assert config.forest.max_depth == 3
    assert config.forest.min_leaf == ForestConfig().min_leaf
    assert config.k == 5 and config.output_dir == tmp
    print("✓ trees from flag, depth from file, min_leaf from defaults")


def test_fit_workflow():
    """In-memory pipeline and file-driven workflow"""
    banner("Fit Workflow")

    d = mixed_dataset(n=100, seed=3)
    config = RunConfig(forest=ForestConfig(n_trees=3, max_depth=3))
    state = fit_dataset(d, config)
    assert state["forest"].n_trees == 3
    assert state["fingerprint"] == d.fingerprint()
    assert "b" in state["profile"].mnar_columns
    mnar = {d.schema.index(name) for name in state["profile"].mnar_columns}
    assert set(state["imputed"].masked_columns()) == mnar
    assert state.get("outputs") is None
    print("✓ Detect, impute, standardize and fit without touching disk")

    with tempfile.TemporaryDirectory() as tmp:
        data, schema, _ = _write_inputs(Path(tmp))
        state = run_workflow({
            "data_path": data,
            "schema_path": str(Path(tmp) / "absent.txt"),
            "config": config,
            "quiet": True,
            "error": None,
            "failure": None,
        })
    assert state["error"].startswith("schema") and "forest" not in state
    print("✓ Failing stage stops the workflow with a coded error")


def test_cli_fit_and_dist():
    """fit writes the forest; dist reuses or routes leaves"""
    banner("CLI fit and dist")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data, schema, config = _write_inputs(tmp)
        out = tmp / "fit"
        assert cli_main(["fit", data, schema, "--config", config, "--out", str(out), "--check"]) == 0
        for name in ("forest.mural", "missingness_report.txt", "missingness.yaml", "resolved_config.yaml"):
            assert (out / name).exists(), name
        forest = load_forest(out / "forest.mural")
        assert forest.n_trees == 4 and forest.leaf_assignments.shape == (4, 120)
        print("✓ fit -> forest, missingness reports and resolved config")

        parallel = tmp / "fit2"
        assert cli_main(["fit", data, schema, "--config", config, "--out", str(parallel), "--threads", "2"]) == 0
        assert (parallel / "forest.mural").read_bytes() == (out / "forest.mural").read_bytes()
        assert (parallel / "resolved_config.yaml").read_text() == (out / "resolved_config.yaml").read_text()
        print("✓ Worker count and output directory do not change the files")

        forest_path = str(out / "forest.mural")
        assert cli_main(["dist", forest_path, data, "--out", str(tmp / "dist"), "--affinity"]) == 0
        dm = read_matrix(tmp / "dist" / "distance.csv")
        assert dm.shape == (120, 120) and np.array_equal(dm, dm.T)
        p = read_matrix(tmp / "dist" / "diffusion.csv")
        assert np.allclose(p.sum(axis=1), 1.0)
        print("✓ dist writes distance, affinity and diffusion matrices")

        assert cli_main(["dist", forest_path, "--out", str(tmp / "recorded"), "--format", "bin"]) == 0
        assert np.allclose(read_matrix(tmp / "recorded" / "distance.bin"), dm, rtol=1e-15, atol=0)
        print("✓ Training file and recorded leaves give the same matrix")

        subset = tmp / "subset.csv"
        subset.write_bytes(write_csv(mixed_dataset(n=30, seed=8)))
        assert cli_main(["dist", forest_path, str(subset), "--out", str(tmp / "routed")]) == 0
        assert read_matrix(tmp / "routed" / "distance.csv").shape == (30, 30)
        print("✓ New rows are routed through the forest")


def test_cli_tswd_and_cluster():
    """Cohort comparison, importance file and clustering"""
    banner("CLI tswd and cluster")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data, schema, config = _write_inputs(tmp)
        out = tmp / "fit"
        assert cli_main(["fit", data, schema, "--config", config, "--out", str(out)]) == 0
        forest_path = str(out / "forest.mural")

        code = cli_main([
            "tswd", forest_path, data, "--cohort-a", "flag == 1", "--cohort-b", "flag == 0",
            "--per-tree", "--baseline", "--out", str(tmp / "tswd"),
        ])
        assert code == 0
        report = (tmp / "tswd" / "tswd_report.txt").read_text().splitlines()
        fields = dict(line.split("\t") for line in report)
        assert fields["n_trees"] == "4" and "tree_3" in fields
        assert float(fields["tswd_mean"]) > 0.0 and "mean_imputation_emd" in fields
        importance = pd.read_csv(tmp / "tswd" / "importance.csv")
        assert list(importance.columns) == ["variable", "share"]
        assert abs(importance["share"].sum() - 1.0) < 1e-9
        print(f"✓ tswd_mean {float(fields['tswd_mean']):.4f}; shares sum to 1")

        overlap = ["tswd", forest_path, data, "--cohort-a", "grade >= 1", "--cohort-b", "flag == 0",
                   "--out", str(tmp / "overlap")]
        assert cli_main(overlap) == 1
        assert cli_main(overlap + ["--allow-overlap"]) == 0
        same = ["tswd", forest_path, data, "--cohort-a", "flag == 1", "--cohort-b", "flag == 1",
                "--allow-overlap", "--out", str(tmp / "same")]
        assert cli_main(same) == 0
        assert "tswd_mean\t0.0" in (tmp / "same" / "tswd_report.txt").read_text().splitlines()
        assert cli_main(["tswd", forest_path, data, "--cohort-a", "a > 1000", "--cohort-b", "flag == 0"]) == 1
        print("✓ Overlapping or empty cohorts exit 1")

        assert cli_main(["cluster", forest_path, "--k", "3", "--out", str(tmp / "cluster")]) == 0
        labels = pd.read_csv(tmp / "cluster" / "labels.csv")
        assert len(labels) == 120 and set(labels["label"]) == {0, 1, 2}
        assert (tmp / "cluster" / "cluster_report.txt").read_text().startswith("k\t3\n")
        print("✓ cluster from a forest file")

        assert cli_main(["dist", forest_path, "--out", str(tmp / "dist")]) == 0
        assert cli_main(["cluster", str(tmp / "dist" / "distance.csv"), "--k", "2", "--out", str(tmp / "c2")]) == 0
        assert len(pd.read_csv(tmp / "c2" / "labels.csv")) == 120
        print("✓ cluster from a distance matrix file")


def test_cli_errors():
    """User errors exit 1 with a coded message"""
    banner("CLI Errors")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data, schema, config = _write_inputs(tmp, n=40)
        out = str(tmp / "out")
        assert cli_main(["fit", str(tmp / "absent.csv"), schema, "--config", config, "--out", out]) == 1
        assert cli_main(["fit", data, str(tmp / "absent.txt"), "--config", config, "--out", out]) == 1
        assert cli_main(["fit", data, schema, "--config", config, "--trees", "0", "--out", out]) == 1
        assert cli_main(["dist", str(tmp / "absent.mural"), "--out", out]) == 1
        assert cli_main(["eval", "--experiment", "benchmark", "--config", config, "--out", out]) == 1
        print("✓ Missing files, bad flags and unknown experiments exit 1")

    try:
        cli_main(["unknown-command"])
        raise AssertionError("usage error did not exit")
    except SystemExit as e:
        assert e.code == 1
    print("✓ Usage errors exit 1")


def main():
    """Run all tests"""
    return run_tests("PIPELINE AND CLI TESTS", [
        ("Cohort Expressions", test_cohort_expressions),
        ("Resolve Cohorts", test_resolve_cohorts),
        ("Configuration", test_configuration),
        ("Threads Environment", test_threads_env),
        ("Flag Precedence", test_flag_precedence),
        ("Fit Workflow", test_fit_workflow),
        ("CLI fit and dist", test_cli_fit_and_dist),
        ("CLI tswd and cluster", test_cli_tswd_and_cluster),
        ("CLI Errors", test_cli_errors),
    ])


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
