"""Chained-equation imputation of randomly missing columns and the mean-imputation baseline"""
import logging
from typing import List

import numpy as np
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from datamodel import DataError, Dataset
from missingness.detection import MissingnessProfile

logger = logging.getLogger(__name__)

TREE_DEPTH = 3


def _fill_value(d: Dataset, j: int) -> float:
    """Observed mean for continuous columns, observed mode (smallest on ties) otherwise"""
    observed = d.values[~d.mask[:, j], j]
    if observed.size == 0:
        raise DataError(f"column '{d.schema[j].name}' is entirely masked")
    if d.schema[j].kind.is_continuous:
        return float(observed.mean())
    return float(np.bincount(observed.astype(np.int64)).argmax())


def mean_impute(d: Dataset) -> Dataset:
    """Fill every masked cell with its column mean (continuous) or mode (discrete)"""
    if not d.mask.any():
        return d
    values = np.array(d.values)
    for j in d.masked_columns():
        values[d.mask[:, j], j] = _fill_value(d, j)
    return Dataset(d.schema, values, np.zeros_like(d.mask))


def impute_random_missing(
    d: Dataset,
    profile: MissingnessProfile,
    iterations: int = 5,
    seed: int = 0,
) -> Dataset:
    """
    Fill the randomly missing columns by chained conditional imputation

    Masked cells start at the column mean/mode. Each cycle then refits, per
    randomly missing column, a depth-3 regression or classification tree on
    the current values of all other columns (plus missingness indicators of
    the MNAR columns) and re-predicts the masked cells. MNAR columns keep
    their masks.

    Args:
        d: Dataset the profile was computed on
        profile: Output of detect_mnar
        iterations: Number of imputation cycles
        seed: Seed for the per-column trees

    Returns:
        Dataset where every column is either fully observed or MNAR
    """
    targets: List[int] = [
        d.column_index(name) for name in profile.random_columns if name in d.names
    ]
    targets = [j for j in targets if d.mask[:, j].any()]
    if not targets:
        return d

    mnar = [d.column_index(name) for name in profile.mnar_columns if name in d.names]
    masked = d.masked_columns()

    current = np.array(d.values)
    for j in masked:
        current[d.mask[:, j], j] = _fill_value(d, j)
    indicators = d.mask[:, mnar].astype(np.float64)

    for cycle in range(iterations):
        for j in targets:
            missing = d.mask[:, j]
            others = [c for c in range(d.n_cols) if c != j]
            features = np.hstack([current[:, others], indicators])
            if d.schema[j].kind.is_continuous:
                model = DecisionTreeRegressor(max_depth=TREE_DEPTH, random_state=seed)
            else:
                model = DecisionTreeClassifier(max_depth=TREE_DEPTH, random_state=seed)
            model.fit(features[~missing], current[~missing, j])
            current[missing, j] = model.predict(features[missing])
        logger.debug("Imputation cycle %d/%d done", cycle + 1, iterations)

    new_mask = np.array(d.mask)
    new_mask[:, targets] = False
    values = np.array(d.values)
    values[:, targets] = current[:, targets]
    logger.info("Imputed %d randomly missing column(s)", len(targets))
    return Dataset(d.schema, values, new_mask)
