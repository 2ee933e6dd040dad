"""Swiss-roll benchmark and single-knob ablation sweeps"""
import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from datamodel import EvaluationError, standardize
from distance import DistanceMatrix, forest_distance_matrix
from evaluation.metrics import (
    distortion,
    euclidean_distance_matrix,
    geodesic_distance_matrix,
    ground_truth_distances,
    precision_at_k,
    rank_correlation,
)
from evaluation.report import EvalReport, summarize
from evaluation.synthetic import gen_swiss_roll_5d, induce_swiss_roll_missingness
from missingness import mean_impute
from pipeline import fit_dataset
from utils.config_loader import RunConfig

logger = logging.getLogger(__name__)

MURAL = "MURAL"
MEAN_IMPUTATION = "MeanImputation"

EXPERIMENTS = ("swissroll", "ablation")

ABLATION_KNOBS = {
    "trees": "n_trees",
    "depth": "max_depth",
    "split-vars": "n_candidate_vars",
    "mnar-levels": "mnar_restrict_levels",
    "entropy-dims": "entropy",
}

ABLATION_VALUES = {
    "trees": [10, 50, 100, 500],
    "depth": [2, 4, 6, 8, 10, 12, 14],
    "split-vars": [1, 2, 3, 4],
    "mnar-levels": [0, 1, 2, 3],
    "entropy-dims": [1, 2, 3, 5, "marginal"],
}


def _score(
    d_est: DistanceMatrix,
    truth: DistanceMatrix,
    geodesic: Optional[DistanceMatrix],
    config: RunConfig,
    seed: int,
) -> Dict[str, float]:
    settings = config.eval
    scores = {}
    for k in settings.ks:
        if k < d_est.n:
            scores[f"P@{k}"] = precision_at_k(d_est, truth, k)
    scores["distortion"] = distortion(d_est, truth, settings.sample_pairs, seed)
    if geodesic is not None:
        scores["geodesic_corr"] = rank_correlation(d_est, geodesic, seed=seed)
    return scores


def run_trial(config: RunConfig, seed: int, baseline: bool = True) -> Tuple[Dict[str, Dict[str, float]], Dict[str, float]]:
    """
    One seed of the Swiss-roll benchmark

    Generates the roll, induces missingness, fits a forest through the
    in-memory pipeline and scores the forest distances (and, with
    `baseline`, Euclidean distances on mean-imputed data) against the
    complete data.

    Returns:
        Tuple of (method -> metric -> value, method -> seconds)
    """
    settings = config.eval
    sample = gen_swiss_roll_5d(settings.n, settings.noise, seed)
    d = induce_swiss_roll_missingness(sample, seed, settings.mnar_quantile, settings.mcar_fraction)
    truth = ground_truth_distances(sample)
    geodesic = None
    if settings.geodesic:
        standardized, _ = standardize(sample.complete)
        geodesic = geodesic_distance_matrix(standardized.values, settings.k_graph)

    scores, seconds = {}, {}

    start = time.perf_counter()
    state = fit_dataset(d, config.with_forest(seed=seed))
    mural = forest_distance_matrix(state["forest"])
    seconds[MURAL] = time.perf_counter() - start
    scores[MURAL] = _score(mural, truth, geodesic, config, seed)

    if baseline:
        start = time.perf_counter()
        imputed, _ = standardize(mean_impute(d))
        euclidean = euclidean_distance_matrix(imputed)
        seconds[MEAN_IMPUTATION] = time.perf_counter() - start
        scores[MEAN_IMPUTATION] = _score(euclidean, truth, geodesic, config, seed)

    logger.info("Trial seed %d: %s", seed, {m: round(s.get("P@5", float("nan")), 3) for m, s in scores.items()})
    return scores, seconds


def _collect(labels: List[str], outcomes) -> Tuple[Dict[str, List[Dict[str, float]]], Dict[str, List[float]]]:
    results: Dict[str, List[Dict[str, float]]] = {}
    timing: Dict[str, List[float]] = {}
    for label, (scores, seconds) in zip(labels, outcomes):
        for method, values in scores.items():
            name = label or method
            results.setdefault(name, []).append(values)
            timing.setdefault(name, []).append(seconds[method])
    return results, timing


def run_swissroll(config: RunConfig, seeds: Optional[Sequence[int]] = None, n_jobs: int = 1) -> EvalReport:
    """
    MURAL versus mean imputation on the Swiss roll with induced missingness

    Trials run in parallel; results are merged in seed order.
    """
    seeds = list(seeds if seeds is not None else config.eval.seeds)
    outcomes = Parallel(n_jobs=n_jobs)(delayed(run_trial)(config, seed, True) for seed in seeds)
    results, timing = _collect([""] * len(seeds), outcomes)
    return summarize("swissroll", config.to_dict(), seeds, results, timing)


def run_ablation(
    knob: str,
    values: Optional[Sequence] = None,
    config: RunConfig = RunConfig(),
    seeds: Optional[Sequence[int]] = None,
    n_jobs: int = 1,
) -> EvalReport:
    """
    Sweep one forest knob, holding the others at the configured values

    Args:
        knob: One of ABLATION_KNOBS
        values: Settings to try (defaults to ABLATION_VALUES[knob])
        config: Base configuration
        seeds: Trial seeds (defaults to config.eval.seeds)
        n_jobs: Worker count across (setting, seed) trials

    Returns:
        EvalReport with one row group per `knob=value` setting
    """
    if knob not in ABLATION_KNOBS:
        raise EvaluationError(f"unknown ablation knob '{knob}' (choose from {', '.join(ABLATION_KNOBS)})")
    values = list(values if values is not None else ABLATION_VALUES[knob])
    seeds = list(seeds if seeds is not None else config.eval.seeds)

    tasks, labels = [], []
    for value in values:
        setting = config.with_forest(**{ABLATION_KNOBS[knob]: value})
        for seed in seeds:
            tasks.append((setting, seed))
            labels.append(f"{knob}={value}")

    outcomes = Parallel(n_jobs=n_jobs)(delayed(run_trial)(setting, seed, False) for setting, seed in tasks)
    results, timing = _collect(labels, outcomes)
    report_config = config.to_dict()
    report_config["ablation"] = {"knob": knob, "values": [str(v) for v in values]}
    return summarize("ablation", report_config, seeds, results, timing)


def run_experiment(name: str, config: RunConfig, knob: Optional[str] = None, values=None, n_jobs: int = 1) -> EvalReport:
    if name == "swissroll":
        return run_swissroll(config, n_jobs=n_jobs)
    if name == "ablation":
        if knob is None:
            raise EvaluationError("the ablation experiment needs a knob")
        return run_ablation(knob, values, config, n_jobs=n_jobs)
    raise EvaluationError(f"unknown experiment '{name}' (choose from {', '.join(EXPERIMENTS)})")
