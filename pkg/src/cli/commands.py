"""Subcommand implementations: fit, dist, tswd, eval, cluster"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from datamodel import (
    Dataset,
    DataError,
    apply_standardization,
    content_fingerprint,
    load_csv,
)
from distance import (
    DistanceMatrix,
    affinity,
    diffusion,
    forest_distance_matrix,
    read_matrix,
    write_matrix,
)
from evaluation import silhouette, spectral_cluster, write_report
from evaluation.experiments import run_experiment
from forest import MuralForest, apply, load_forest
from forest.serialization import MAGIC
from missingness import mean_impute
from pipeline import run_workflow
from pipeline.state import FitState
from transport import feature_importance, forest_tswd, mean_imputation_emd, tswd_report
from cli.cohorts import resolve_cohorts
from utils.config_loader import RunConfig, setup_directories, write_resolved_config

logger = logging.getLogger(__name__)


def _section(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _route(forest: MuralForest, data_path: Optional[str]) -> Tuple[np.ndarray, Optional[Dataset]]:
    """
    Leaf assignments for the rows of a CSV

    The recorded training leaves are reused when the file is the one the
    forest was fitted on; other files are standardized with the forest's
    parameters and routed.

    Returns:
        Tuple of (assignments, dataset in original units or None without data)
    """
    if data_path is None:
        return forest.leaf_assignments, None
    raw = load_csv(forest.schema, data_path)
    if forest.fingerprint and content_fingerprint(data_path) == forest.fingerprint:
        print("✓ Data matches the training file; reusing recorded leaves")
        return forest.leaf_assignments, raw
    print("Routing rows through the forest")
    return apply(forest, apply_standardization(raw, forest.standardization)), raw


def cmd_fit(
    data_path: str,
    schema_path: str,
    config: RunConfig,
    output_dir: str,
    n_jobs: int = 1,
    check: bool = False,
) -> FitState:
    """
    Detect, impute, standardize and fit; writes the forest and missingness reports

    Raises the exception of the failing pipeline stage.
    """
    state = run_workflow({
        'data_path': data_path,
        'schema_path': schema_path,
        'output_dir': output_dir,
        'config': config,
        'n_jobs': n_jobs,
        'check': check,
        'quiet': False,
        'error': None,
        'failure': None,
    })
    if state.get('failure') is not None:
        raise state['failure']

    profile = state['profile']
    _section("Fit complete")
    print(f"MNAR columns ({len(profile.mnar_columns)}): {', '.join(profile.mnar_columns) or '-'}")
    print(f"Random columns ({len(profile.random_columns)}): {', '.join(profile.random_columns) or '-'}")
    return state


def cmd_dist(
    forest_path: str,
    data_path: Optional[str],
    config: RunConfig,
    output_dir: str,
    with_affinity: bool = False,
    n_jobs: int = 1,
) -> List[Path]:
    """Write the forest distance matrix, and with `with_affinity` also K and P"""
    _section("Distance matrix")
    forest = load_forest(forest_path)
    assignments, _ = _route(forest, data_path)
    dm = forest_distance_matrix(forest, assignments, n_jobs=n_jobs)
    print(f"✓ {dm.n} x {dm.n} distance matrix from {forest.n_trees} trees")

    setup_directories([output_dir])
    out = Path(output_dir)
    fmt = config.matrix_format
    written = [write_matrix(dm.values, out / f"distance.{fmt}", fmt)]
    if with_affinity:
        k = affinity(dm, config.bandwidth, config.kernel)
        p = diffusion(k)
        print(f"✓ Affinity bandwidth epsilon = {k.epsilon:.6g}")
        written.append(write_matrix(k.values, out / f"affinity.{fmt}", fmt))
        written.append(write_matrix(p.values, out / f"diffusion.{fmt}", fmt))
    written.append(write_resolved_config(config, out))
    for path in written:
        print(f"✓ Wrote {path}")
    return written


def cmd_tswd(
    forest_path: str,
    data_path: str,
    cohort_a: str,
    cohort_b: str,
    config: RunConfig,
    output_dir: str,
    allow_overlap: bool = False,
    per_tree: bool = False,
    plot: Optional[str] = None,
    baseline: bool = False,
    n_jobs: int = 1,
) -> dict:
    """Cohort TSWD with feature importance; cohorts are evaluated in original units"""
    _section("Tree-sliced Wasserstein distance")
    forest = load_forest(forest_path)
    assignments, raw = _route(forest, data_path)
    a, b = resolve_cohorts(cohort_a, cohort_b, raw, allow_overlap)
    print(f"Cohort A: {a.size} rows  ({cohort_a})")
    print(f"Cohort B: {b.size} rows  ({cohort_b})")

    result = forest_tswd(forest, a, b, assignments, n_jobs=n_jobs)
    importance = feature_importance(forest, a, b, assignments)
    print(f"TSWD = {result.mean:.6g} ± {result.std:.6g} over {forest.n_trees} trees")

    setup_directories([output_dir])
    out = Path(output_dir)
    report = tswd_report(result, per_tree=per_tree)
    if baseline:
        imputed = apply_standardization(mean_impute(raw), forest.standardization)
        emd = mean_imputation_emd(imputed, a, b, seed=config.forest.seed)
        report += f"mean_imputation_emd\t{emd!r}\n"
        print(f"Mean-imputation EMD baseline = {emd:.6g}")
    (out / "tswd_report.txt").write_text(report)
    (out / "importance.csv").write_bytes(
        importance.to_frame().to_csv(index=False, lineterminator="\n").encode("utf-8")
    )
    if importance.degenerate:
        print("Cohorts are indistinguishable; every importance is 0")
    else:
        for name, share in importance.entries[:5]:
            print(f"  {name:<24}{share:.4f}")
    if plot:
        from cli.plots import plot_importance
        plot_importance(importance, plot)
    write_resolved_config(config, out)
    return {"tswd": result, "importance": importance}


def cmd_eval(
    experiment: str,
    config: RunConfig,
    output_dir: str,
    knob: Optional[str] = None,
    values: Optional[Sequence] = None,
    plot: Optional[str] = None,
    n_jobs: int = 1,
):
    """Run an evaluation experiment and write its report files"""
    _section(f"Evaluation: {experiment}")
    report = run_experiment(experiment, config, knob=knob, values=values, n_jobs=n_jobs)
    print(report.to_text())

    paths = write_report(report, output_dir)
    write_resolved_config(config, output_dir)
    if plot:
        from cli.plots import plot_precision
        plot_precision(report, plot)
    for path in paths:
        print(f"✓ Wrote {path}")
    return report


def _is_forest_file(path: Path) -> bool:
    with open(path, "rb") as f:
        return f.read(len(MAGIC)) == MAGIC.encode("ascii")


def cmd_cluster(
    input_path: str,
    config: RunConfig,
    output_dir: str,
    data_path: Optional[str] = None,
    n_jobs: int = 1,
) -> dict:
    """Spectral clusters from a forest or a distance-matrix file, with silhouette"""
    _section("Spectral clustering")
    path = Path(input_path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    if _is_forest_file(path):
        forest = load_forest(path)
        assignments, _ = _route(forest, data_path)
        dm = forest_distance_matrix(forest, assignments, n_jobs=n_jobs)
    else:
        dm = DistanceMatrix(read_matrix(path))

    p = diffusion(affinity(dm, config.bandwidth, config.kernel))
    labels = spectral_cluster(p, config.k, seed=config.forest.seed)
    score = silhouette(dm, labels)
    print(f"✓ {config.k} clusters over {dm.n} rows; silhouette = {score:.6g}")

    setup_directories([output_dir])
    out = Path(output_dir)
    frame = pd.DataFrame({"row": np.arange(dm.n), "label": labels})
    (out / "labels.csv").write_bytes(frame.to_csv(index=False, lineterminator="\n").encode("utf-8"))
    (out / "cluster_report.txt").write_text(f"k\t{config.k}\nn_rows\t{dm.n}\nsilhouette\t{score!r}\n")
    write_resolved_config(config, out)
    return {"labels": labels, "silhouette": score}
