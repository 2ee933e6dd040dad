"""Embedding-free quality metrics for distance matrices"""
import logging
from typing import Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import pdist, squareform
from scipy.stats import spearmanr
from sklearn.neighbors import kneighbors_graph

from datamodel import DataError, Dataset, EvaluationError, standardize
from distance import DistanceMatrix
from evaluation.synthetic import SwissRollSample

logger = logging.getLogger(__name__)


def euclidean_distance_matrix(d: Dataset) -> DistanceMatrix:
    """Euclidean distances between the rows of a fully observed dataset"""
    if d.mask.any():
        raise DataError("euclidean distances need a fully observed dataset")
    return DistanceMatrix(squareform(pdist(d.values)))


def ground_truth_distances(sample: SwissRollSample) -> DistanceMatrix:
    """Euclidean distances on the standardized complete data"""
    standardized, _ = standardize(sample.complete)
    return euclidean_distance_matrix(standardized)


def _neighbors(values: np.ndarray, k: int) -> np.ndarray:
    masked = np.array(values, dtype=np.float64)
    np.fill_diagonal(masked, np.inf)
    return np.argsort(masked, axis=1, kind="stable")[:, :k]


def precision_at_k(d_est: DistanceMatrix, d_true: DistanceMatrix, k: int) -> float:
    """
    Mean overlap of the k nearest neighbors under the two metrics

    Self is excluded; distance ties are broken by the lower row index.
    """
    if d_est.n != d_true.n:
        raise EvaluationError(f"matrices differ in size: {d_est.n} vs {d_true.n}")
    n = d_est.n
    if not 1 <= k < n:
        raise EvaluationError(f"k must be in [1, {n - 1}], got {k}")

    rows = np.arange(n)[:, None]
    est = np.zeros((n, n), dtype=bool)
    true = np.zeros((n, n), dtype=bool)
    est[rows, _neighbors(d_est.values, k)] = True
    true[rows, _neighbors(d_true.values, k)] = True
    return float((est & true).sum(axis=1).mean() / k)


def _sample_pairs(n: int, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """All i < j pairs when there are at most `count`, otherwise `count` distinct ones at random"""
    i, j = np.triu_indices(n, k=1)
    if len(i) > count:
        chosen = np.sort(rng.choice(len(i), size=count, replace=False))
        i, j = i[chosen], j[chosen]
    return i, j


def distortion(d_est: DistanceMatrix, d_true: DistanceMatrix, sample_pairs: int = 10000, seed: int = 0) -> float:
    """
    Scale-free relative squared error between estimated and true distances

    A least-squares scale c is fitted first, so the value does not change
    when d_est is multiplied by a constant.
    """
    if d_est.n != d_true.n:
        raise EvaluationError(f"matrices differ in size: {d_est.n} vs {d_true.n}")
    if d_est.n < 2:
        raise EvaluationError("distortion needs at least 2 points")
    i, j = _sample_pairs(d_est.n, sample_pairs, np.random.default_rng(seed))
    est = d_est.values[i, j]
    true = d_true.values[i, j]
    keep = true > 0
    if not keep.any():
        raise EvaluationError("no pair has a positive true distance")
    est, true = est[keep], true[keep]

    denominator = float(np.dot(est, est))
    c = float(np.dot(est, true)) / denominator if denominator > 0 else 0.0
    return float(np.mean((c * est - true) ** 2 / true ** 2))


def geodesic_distance_matrix(points: np.ndarray, k_graph: int = 10) -> DistanceMatrix:
    """
    Shortest-path distances on the symmetric kNN graph of the points

    The neighbor count is doubled once if the graph is disconnected.
    """
    for k in (k_graph, 2 * k_graph):
        k = min(k, len(points) - 1)
        graph = kneighbors_graph(points, n_neighbors=k, mode="distance")
        graph = graph.maximum(graph.T)
        n_components, _ = connected_components(graph, directed=False)
        if n_components == 1:
            geodesic = shortest_path(graph, method="D", directed=False)
            return DistanceMatrix((geodesic + geodesic.T) / 2.0)
        logger.warning("kNN graph with k=%d has %d components", k, n_components)
    raise EvaluationError(f"kNN graph is disconnected even with k={2 * k_graph}")


def geodesic_correlation(
    d_est: DistanceMatrix,
    truth: SwissRollSample,
    k_graph: int = 10,
    max_pairs: int = 100000,
    seed: int = 0,
) -> float:
    """Spearman correlation between d_est and ground-truth geodesic distances"""
    standardized, _ = standardize(truth.complete)
    geodesic = geodesic_distance_matrix(standardized.values, k_graph)
    return rank_correlation(d_est, geodesic, max_pairs, seed)


def rank_correlation(d_est: DistanceMatrix, d_ref: DistanceMatrix, max_pairs: int = 100000, seed: int = 0) -> float:
    if d_est.n != d_ref.n:
        raise EvaluationError(f"matrices differ in size: {d_est.n} vs {d_ref.n}")
    i, j = _sample_pairs(d_est.n, max_pairs, np.random.default_rng(seed))
    rho = spearmanr(d_est.values[i, j], d_ref.values[i, j]).correlation
    if not np.isfinite(rho):
        raise EvaluationError("rank correlation undefined (constant distances)")
    return float(rho)
