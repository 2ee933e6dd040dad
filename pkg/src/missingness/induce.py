"""Artificial missingness for experiments"""
import math

import numpy as np

from datamodel import DataError, Dataset

ABOVE = "above"
BELOW = "below"


def induce_mnar_threshold(d: Dataset, column, threshold: float, direction: str = ABOVE) -> Dataset:
    """
    Mask the cells of a continuous column strictly beyond a threshold

    Args:
        d: Dataset
        column: Column name or index
        threshold: Cut-off value
        direction: "above" masks values > threshold, "below" masks values < threshold

    Returns:
        Dataset with the extra cells masked
    """
    j = d.column_index(column)
    if not d.schema[j].kind.is_continuous:
        raise DataError(f"column '{d.schema[j].name}' is not continuous")
    values, mask = d.column(j)
    with np.errstate(invalid="ignore"):
        if direction == ABOVE:
            beyond = values > threshold
        elif direction == BELOW:
            beyond = values < threshold
        else:
            raise DataError(f"direction must be 'above' or 'below', got '{direction}'")
    return d.with_mask(j, beyond & ~mask)


def induce_mcar(d: Dataset, column, fraction: float, seed: int) -> Dataset:
    """Mask floor(fraction * n_rows) distinct uniformly drawn rows of one column"""
    if not 0.0 <= fraction < 1.0:
        raise DataError(f"fraction must be in [0, 1), got {fraction}")
    j = d.column_index(column)
    count = math.floor(fraction * d.n_rows + 1e-9)
    if count == 0:
        return d
    rng = np.random.default_rng(seed)
    rows = rng.choice(d.n_rows, size=count, replace=False)
    return d.with_mask(j, rows)
