"""Exact optimal transport on small supports, used as a reference"""
import logging
from typing import Sequence

import numpy as np
import ot
from scipy.spatial.distance import pdist, squareform

from datamodel import CohortError, DataError, Dataset
from distance import DistanceMatrix
from missingness import mean_impute

logger = logging.getLogger(__name__)

MAX_SUPPORT = 64


def _check_masses(masses, n: int, label: str) -> np.ndarray:
    masses = np.asarray(masses, dtype=np.float64)
    if masses.shape != (n,):
        raise DataError(f"{label} has shape {masses.shape}, expected ({n},)")
    if np.any(masses < 0):
        raise DataError(f"{label} has negative mass")
    if abs(masses.sum() - 1.0) > 1e-9:
        raise DataError(f"{label} sums to {masses.sum()}, expected 1")
    return masses / masses.sum()


def brute_force_emd(dm: DistanceMatrix, mu, nu) -> float:
    """
    Exact 1-Wasserstein distance by network simplex on the given ground metric

    Args:
        dm: Ground distances between the support points
        mu: Mass per support point, summing to 1
        nu: Mass per support point, summing to 1

    Returns:
        Optimal transport cost
    """
    if dm.n > MAX_SUPPORT:
        raise DataError(f"support of {dm.n} points exceeds the oracle limit of {MAX_SUPPORT}")
    mu = _check_masses(mu, dm.n, "mu")
    nu = _check_masses(nu, dm.n, "nu")
    return float(ot.emd2(mu, nu, np.array(dm.values)))


def mean_imputation_emd(
    d: Dataset,
    cohort_a: Sequence[int],
    cohort_b: Sequence[int],
    max_points: int = MAX_SUPPORT,
    seed: int = 0,
) -> float:
    """
    Baseline cohort distance: exact EMD under Euclidean distance on mean-imputed rows

    Each cohort is subsampled (without replacement) to at most max_points // 2
    rows so the joint support fits the oracle.
    """
    a = np.asarray(cohort_a, dtype=np.int64)
    b = np.asarray(cohort_b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise CohortError("cohort is empty")
    if max_points < 2 or max_points > MAX_SUPPORT:
        raise DataError(f"max_points must be in [2, {MAX_SUPPORT}]")

    rng = np.random.default_rng(seed)
    half = max_points // 2
    if a.size > half:
        a = np.sort(rng.choice(a, size=half, replace=False))
    if b.size > half:
        b = np.sort(rng.choice(b, size=half, replace=False))

    values = mean_impute(d).values
    points = np.vstack([values[a], values[b]])
    ground = DistanceMatrix(squareform(pdist(points)))
    mu = np.concatenate([np.full(a.size, 1.0 / a.size), np.zeros(b.size)])
    nu = np.concatenate([np.zeros(a.size), np.full(b.size, 1.0 / b.size)])
    logger.debug("Mean-imputation EMD on %d + %d points", a.size, b.size)
    return brute_force_emd(ground, mu, nu)
