"""Residual multidimensional entropy: the unsupervised split criterion"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import xlogy
from scipy.stats import chi2

from datamodel import ConfigError, DataError, Dataset, MISSING_CODE, discretize, sturges_bin_count

MARGINAL = "marginal"
JOINT = "joint"

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class EntropyMode:
    """Sum of marginal entropies, or joint entropy over a random subset of `dims` variables"""

    kind: str = MARGINAL
    dims: int = 3

    def __post_init__(self):
        if self.kind not in (MARGINAL, JOINT):
            raise ConfigError(f"unknown entropy mode '{self.kind}'")
        if self.dims < 1:
            raise ConfigError("entropy dims must be >= 1")

    @classmethod
    def parse(cls, text) -> "EntropyMode":
        """`marginal` or a positive integer number of joint dimensions"""
        text = str(text).strip().lower()
        if text in (MARGINAL, "rme", "all"):
            return cls(MARGINAL)
        try:
            return cls(JOINT, int(text))
        except ValueError:
            raise ConfigError(f"entropy dims must be 'marginal' or an integer, got '{text}'")

    def __str__(self) -> str:
        return MARGINAL if self.kind == MARGINAL else str(self.dims)


def entropy_bits(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits of count vectors along the last axis"""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = (xlogy(total, total) - xlogy(counts, counts).sum(axis=-1)) / (total * _LN2)
    return np.where(total > 0, h, 0.0)


def node_codes(
    d: Dataset,
    rows: np.ndarray,
    var: int,
    n_bins: Optional[int] = None,
    method: str = "width",
) -> np.ndarray:
    """
    Compact class codes of one variable over a node's rows

    Continuous variables are binned with Sturges' rule on the node size
    (or n_bins when given); discrete variables use their own codes. Masked
    cells form their own class.
    """
    column = d.schema[var]
    values = d.values[rows, var]
    mask = d.mask[rows, var]
    if column.kind.is_continuous:
        if mask.all():
            return np.zeros(len(rows), dtype=np.int64)
        bins = n_bins if n_bins is not None else sturges_bin_count(len(rows))
        codes = discretize(values, mask, bins, method)
        codes[codes == MISSING_CODE] = bins
        return codes
    codes = np.where(mask, column.kind.levels, np.nan_to_num(values)).astype(np.int64)
    return codes


class NodeBinning:
    """
    Residual-variable classes computed once from a node's rows

    Children reuse the parent's binning, which keeps every gain >= 0.
    """

    def __init__(
        self,
        d: Dataset,
        rows: np.ndarray,
        residual_vars: Sequence[int],
        mode: EntropyMode = EntropyMode(),
        n_bins: Optional[int] = None,
        method: str = "width",
    ):
        rows = np.asarray(rows)
        if rows.size == 0:
            raise DataError("cannot compute entropy over an empty row set")
        residual_vars = list(residual_vars)
        if not residual_vars:
            raise DataError("residual variable set is empty")

        self.rows = rows
        self.residual_vars = residual_vars
        self.mode = mode
        per_var = [node_codes(d, rows, v, n_bins, method) for v in residual_vars]

        if mode.kind == JOINT:
            joint = np.zeros(len(rows), dtype=np.int64)
            for codes in per_var:
                joint = joint * (int(codes.max()) + 1) + codes
            _, joint = np.unique(joint, return_inverse=True)
            per_var = [joint.reshape(-1)]

        self.codes: List[np.ndarray] = []
        self.n_classes: List[int] = []
        for codes in per_var:
            _, compact = np.unique(codes, return_inverse=True)
            compact = compact.reshape(-1)
            self.codes.append(compact)
            self.n_classes.append(int(compact.max()) + 1)

        self.parent_entropy = float(
            sum(entropy_bits(np.bincount(c, minlength=k)) for c, k in zip(self.codes, self.n_classes))
        )

    def partition_gain(self, labels: np.ndarray) -> float:
        """Gain of a partition given as a child label per row (aligned with self.rows)"""
        labels = np.asarray(labels, dtype=np.int64)
        n = len(labels)
        n_children = int(labels.max()) + 1
        sizes = np.bincount(labels, minlength=n_children).astype(np.float64)
        gain = self.parent_entropy
        for codes, k in zip(self.codes, self.n_classes):
            table = np.zeros((n_children, k))
            np.add.at(table, (labels, codes), 1.0)
            gain -= float(np.dot(sizes / n, entropy_bits(table)))
        return gain

    def threshold_gains(self, order: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Gains of every 2-partition "first p rows of `order`" for p in positions"""
        return self.threshold_statistics(order, positions)[0]

    def threshold_statistics(self, order: np.ndarray, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gains and test degrees of freedom of every threshold 2-partition

        The degrees of freedom of a partition are its expected G statistic
        under independence, sum over residual classes of
        (K_left - 1) + (K_right - 1) - (K_parent - 1) with K counting the
        occupied classes.

        Args:
            order: Permutation of range(len(rows)) sorting rows by the split variable
            positions: Increasing split positions, each in 1..len(rows)-1

        Returns:
            (gain per position, degrees of freedom per position)
        """
        n = len(order)
        positions = np.asarray(positions, dtype=np.int64)
        left_n = positions.astype(np.float64)
        right_n = n - left_n
        gains = np.full(len(positions), self.parent_entropy)
        dof = np.zeros(len(positions))
        bounds = np.concatenate([[0], positions])
        for codes, k in zip(self.codes, self.n_classes):
            sorted_codes = codes[order]
            total = np.bincount(sorted_codes, minlength=k).astype(np.float64)
            left = np.zeros((len(positions), k))
            running = np.zeros(k)
            for i in range(len(positions)):
                running = running + np.bincount(sorted_codes[bounds[i]:bounds[i + 1]], minlength=k)
                left[i] = running
            right = total - left
            gains -= (left_n / n) * entropy_bits(left) + (right_n / n) * entropy_bits(right)
            dof += (left > 0).sum(axis=1) + (right > 0).sum(axis=1) - k - 1
        return gains, dof


def split_p_values(gains: np.ndarray, dof: np.ndarray, n_rows: int) -> np.ndarray:
    """
    G-test p-values of partitions from their gains in bits

    G = 2 ln(2) n gain is compared against chi-square with `dof` degrees
    of freedom (at least 1).
    """
    statistic = 2.0 * _LN2 * n_rows * np.maximum(np.asarray(gains, dtype=np.float64), 0.0)
    return chi2.sf(statistic, np.maximum(np.asarray(dof, dtype=np.float64), 1.0))


def residual_info_gain(
    rows: np.ndarray,
    partition: Sequence[np.ndarray],
    residual_vars: Sequence[int],
    d: Dataset,
    entropy_mode: EntropyMode = EntropyMode(),
    n_bins: Optional[int] = None,
    method: str = "width",
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Information gain of a partition measured on the residual variables

    Args:
        rows: Parent row indices
        partition: Disjoint child row subsets whose union is `rows`
        residual_vars: Variables whose entropy is measured
        d: Dataset
        entropy_mode: Marginal sum, or joint entropy over `dims` random residual vars
        n_bins: Fixed bin count (default: Sturges on len(rows))
        method: Binning method
        rng: Source for the joint-mode subset draw

    Returns:
        Gain in bits (>= 0 up to rounding)
    """
    rows = np.asarray(rows)
    residual_vars = list(residual_vars)
    if entropy_mode.kind == JOINT and len(residual_vars) > entropy_mode.dims:
        rng = rng if rng is not None else np.random.default_rng(0)
        residual_vars = sorted(rng.choice(residual_vars, size=entropy_mode.dims, replace=False).tolist())

    position = {int(r): i for i, r in enumerate(rows)}
    labels = np.full(len(rows), -1, dtype=np.int64)
    for a, subset in enumerate(partition):
        for r in np.asarray(subset).tolist():
            labels[position[int(r)]] = a
    if (labels < 0).any():
        raise DataError("partition does not cover the parent rows")

    binning = NodeBinning(d, rows, residual_vars, entropy_mode, n_bins, method)
    return binning.partition_gain(labels)
