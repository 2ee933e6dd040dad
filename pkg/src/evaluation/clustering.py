"""Spectral clustering on the diffusion operator and silhouette scoring"""
import logging

import numpy as np
from scipy.linalg import LinAlgError, eigh
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score

from datamodel import EvaluationError
from distance import DiffusionOperator, DistanceMatrix

logger = logging.getLogger(__name__)


def _first_seen_order(labels: np.ndarray) -> np.ndarray:
    """Renumber cluster ids by order of first appearance"""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first, kind="stable")
    rename = np.empty(len(order), dtype=np.int64)
    rename[order] = np.arange(len(order))
    _, inverse = np.unique(labels, return_inverse=True)
    return rename[inverse]


def diffusion_coordinates(p: DiffusionOperator, dims: int) -> np.ndarray:
    """
    Leading right eigenvectors of P scaled by their eigenvalues

    P = D^-1 K is similar to the symmetric A = D^-1/2 K D^-1/2; the right
    eigenvectors of P are D^-1/2 times those of A.
    """
    n = p.n
    degrees = p.degrees if p.degrees is not None else np.ones(n)
    root = np.sqrt(degrees)
    sym = root[:, None] * p.values / root[None, :]
    sym = (sym + sym.T) / 2.0
    try:
        eigenvalues, eigenvectors = eigh(sym, subset_by_index=[n - dims, n - 1])
    except (LinAlgError, ValueError) as e:
        raise EvaluationError(f"eigensolver failed: {e}")
    if not np.all(np.isfinite(eigenvalues)):
        raise EvaluationError("eigensolver returned non-finite eigenvalues")
    # descending
    eigenvalues = eigenvalues[::-1]
    right = eigenvectors[:, ::-1] / root[:, None]
    return right * eigenvalues[None, :]


def spectral_cluster(p: DiffusionOperator, k: int, seed: int = 0) -> np.ndarray:
    """
    k-means on the diffusion coordinates with the constant direction removed

    The top k + 1 coordinates are centered (the trivial eigenvector is
    constant, so it vanishes) and reduced to their k leading singular
    directions before k-means++ with 10 restarts.

    Args:
        p: Diffusion operator
        k: Cluster count, 2 <= k <= n
        seed: k-means seed

    Returns:
        Cluster label per row, numbered by first appearance
    """
    n = p.n
    if not 2 <= k <= n:
        raise EvaluationError(f"k must be in [2, {n}], got {k}")
    if k == n:
        return np.arange(n)

    coords = diffusion_coordinates(p, min(k + 1, n))
    coords = coords - coords.mean(axis=0)
    u, s, _ = np.linalg.svd(coords, full_matrices=False)
    embedding = u[:, :k] * s[:k]

    kmeans = KMeans(n_clusters=k, init="k-means++", n_init=10, random_state=seed)
    labels = kmeans.fit_predict(embedding)
    logger.debug("Spectral clustering: k=%d, inertia %.6g", k, kmeans.inertia_)
    return _first_seen_order(labels)


def silhouette(dm: DistanceMatrix, labels) -> float:
    """
    Mean silhouette over all points

    s(i) = (b - a) / max(a, b) with a the mean distance to the rest of i's
    cluster and b the smallest mean distance to another cluster; points in
    singleton clusters score 0.
    """
    labels = np.asarray(labels)
    if labels.shape != (dm.n,):
        raise EvaluationError(f"expected {dm.n} labels, got {labels.shape}")
    clusters, codes = np.unique(labels, return_inverse=True)
    if len(clusters) < 2:
        raise EvaluationError("silhouette needs at least 2 clusters")

    onehot = np.zeros((dm.n, len(clusters)))
    onehot[np.arange(dm.n), codes] = 1.0
    sizes = onehot.sum(axis=0)
    sums = dm.values @ onehot

    own_size = sizes[codes]
    a = np.where(own_size > 1, sums[np.arange(dm.n), codes] / np.maximum(own_size - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[np.arange(dm.n), codes] = np.inf
    b = means.min(axis=1)

    scale = np.maximum(a, b)
    scores = np.where((own_size > 1) & (scale > 0), (b - a) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(scores.mean())


def adjusted_rand(labels_true, labels_pred) -> float:
    return float(adjusted_rand_score(labels_true, labels_pred))
