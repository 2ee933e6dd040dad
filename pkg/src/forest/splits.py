"""Split specifications, threshold search, and the per-node split rule"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from datamodel import Dataset, InvariantError
from forest.entropy import JOINT, EntropyMode, NodeBinning, split_p_values

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Split specifications
# ---------------------------------------------------------------------------

def _majority(child_sizes: Optional[Sequence[int]], slots: Sequence[int]) -> int:
    """Slot among `slots` with the most training rows (first on ties)"""
    if child_sizes is None:
        raise InvariantError("masked value reached a split during training")
    sizes = [child_sizes[s] for s in slots]
    return slots[int(np.argmax(sizes))]


@dataclass(frozen=True)
class ContinuousSplit:
    """Two children: value <= threshold, value > threshold"""

    var: int
    threshold: float

    n_children = 2
    tag = "continuous"

    def assign(self, values, mask, rows, child_sizes=None) -> np.ndarray:
        slots = np.where(values[rows, self.var] <= self.threshold, 0, 1)
        missing = mask[rows, self.var]
        if missing.any():
            slots[missing] = _majority(child_sizes, [0, 1])
        return slots

    def credited_var(self, slot: int) -> int:
        return self.var

    def variables(self) -> Tuple[int, ...]:
        return (self.var,)

    def to_dict(self) -> Dict:
        return {"type": self.tag, "var": self.var, "threshold": self.threshold}


@dataclass(frozen=True)
class CategorySplit:
    """One-vs-rest on a categorical code: children (== category, != category)"""

    var: int
    category: int

    n_children = 2
    tag = "category"

    def assign(self, values, mask, rows, child_sizes=None) -> np.ndarray:
        slots = np.where(values[rows, self.var] == self.category, 0, 1)
        missing = mask[rows, self.var]
        if missing.any():
            slots[missing] = _majority(child_sizes, [0, 1])
        return slots

    def credited_var(self, slot: int) -> int:
        return self.var

    def variables(self) -> Tuple[int, ...]:
        return (self.var,)

    def to_dict(self) -> Dict:
        return {"type": self.tag, "var": self.var, "category": self.category}


@dataclass(frozen=True)
class MnarFourWay:
    """
    Flattened missing/measured split

    Slots: 0 measured & <= t, 1 measured & > t, 2 missing & aux <= t',
    3 missing & aux > t'. A categorical variable splits its measured rows
    one-vs-rest instead: 0 measured & == measured_category, 1 measured &
    != measured_category (measured_threshold is then unused).
    """

    var: int
    measured_threshold: float
    aux_var: int
    aux_threshold: float
    measured_category: Optional[int] = None

    n_children = 4
    tag = "mnar4"

    def assign(self, values, mask, rows, child_sizes=None) -> np.ndarray:
        missing = mask[rows, self.var]
        if self.measured_category is None:
            slots = np.where(values[rows, self.var] <= self.measured_threshold, 0, 1)
        else:
            slots = np.where(values[rows, self.var] == self.measured_category, 0, 1)
        aux_slots = np.where(values[rows, self.aux_var] <= self.aux_threshold, 2, 3)
        aux_missing = mask[rows, self.aux_var]
        if (missing & aux_missing).any():
            aux_slots[aux_missing] = _majority(child_sizes, [2, 3])
        slots[missing] = aux_slots[missing]
        return slots

    def credited_var(self, slot: int) -> int:
        return self.var if slot < 2 else self.aux_var

    def variables(self) -> Tuple[int, ...]:
        return (self.var, self.aux_var)

    def to_dict(self) -> Dict:
        data = {
            "type": self.tag,
            "var": self.var,
            "measured_threshold": self.measured_threshold,
            "aux_var": self.aux_var,
            "aux_threshold": self.aux_threshold,
        }
        if self.measured_category is not None:
            data["measured_category"] = self.measured_category
        return data


@dataclass(frozen=True)
class BinaryFourWay:
    """
    Flattened binary split with a threshold on an auxiliary variable per value

    Slots: 0 v=0 & aux <= t0, 1 v=0 & aux > t0, 2 v=1 & aux <= t1, 3 v=1 & aux > t1.
    """

    var: int
    aux_var: int
    aux_threshold_0: float
    aux_threshold_1: float

    n_children = 4
    tag = "binary4"

    def assign(self, values, mask, rows, child_sizes=None) -> np.ndarray:
        is_one = values[rows, self.var] == 1
        missing = mask[rows, self.var]
        if missing.any():
            if child_sizes is None:
                raise InvariantError("masked value reached a split during training")
            zeros = child_sizes[0] + child_sizes[1]
            ones = child_sizes[2] + child_sizes[3]
            is_one[missing] = ones > zeros
        aux = values[rows, self.aux_var]
        threshold = np.where(is_one, self.aux_threshold_1, self.aux_threshold_0)
        slots = np.where(is_one, 2, 0) + np.where(aux <= threshold, 0, 1)
        aux_missing = mask[rows, self.aux_var]
        if aux_missing.any():
            slots[aux_missing & ~is_one] = _majority(child_sizes, [0, 1])
            slots[aux_missing & is_one] = _majority(child_sizes, [2, 3])
        return slots

    def credited_var(self, slot: int) -> int:
        return self.var

    def variables(self) -> Tuple[int, ...]:
        return (self.var, self.aux_var)

    def to_dict(self) -> Dict:
        return {
            "type": self.tag,
            "var": self.var,
            "aux_var": self.aux_var,
            "aux_threshold_0": self.aux_threshold_0,
            "aux_threshold_1": self.aux_threshold_1,
        }


SPLIT_TYPES = {cls.tag: cls for cls in (ContinuousSplit, CategorySplit, MnarFourWay, BinaryFourWay)}


def split_from_dict(data: Dict):
    data = dict(data)
    cls = SPLIT_TYPES[data.pop("type")]
    return cls(**data)


# ---------------------------------------------------------------------------
# Threshold search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    gain: float


def candidate_positions(sorted_values: np.ndarray, min_leaf: int, max_candidates: int) -> np.ndarray:
    """
    Split positions p (left = first p sorted rows) at distinct-value boundaries

    Only positions leaving >= min_leaf rows on both sides are kept; more than
    max_candidates are thinned by quantile subsampling.
    """
    n = len(sorted_values)
    boundaries = np.nonzero(np.diff(sorted_values) > 0)[0] + 1
    boundaries = boundaries[(boundaries >= min_leaf) & (boundaries <= n - min_leaf)]
    if len(boundaries) > max_candidates:
        picks = np.unique(np.round(np.linspace(0, len(boundaries) - 1, max_candidates)).astype(np.int64))
        boundaries = boundaries[picks]
    return boundaries


def best_threshold(
    rows: np.ndarray,
    var: int,
    residual_vars: Sequence[int],
    d: Dataset,
    config,
    binning: Optional[NodeBinning] = None,
) -> Optional[ThresholdChoice]:
    """
    Threshold on `var` maximizing residual information gain over `rows`

    Candidates are midpoints between consecutive distinct observed values,
    thinned to config.max_threshold_candidates; both children must keep
    config.min_leaf rows. Ties go to the smaller threshold.

    Args:
        rows: Row indices, all observed on `var`
        var: Split variable (continuous or ordinal)
        residual_vars: Variables whose entropy drives the gain
        d: Dataset
        config: ForestConfig
        binning: Precomputed residual binning over `rows`

    Returns:
        ThresholdChoice, or None when the variable is unsplittable
    """
    scan = _scan_thresholds(rows, var, residual_vars, d, config, binning)
    if scan is None:
        return None
    return scan.choice(scan.best())


@dataclass
class _ThresholdScan:
    sorted_values: np.ndarray
    positions: np.ndarray
    gains: np.ndarray
    dof: np.ndarray

    def best(self) -> int:
        return int(np.nonzero(self.gains >= self.gains.max() - 1e-12)[0][0])

    def balanced(self) -> int:
        n = len(self.sorted_values)
        return int(np.argmin(np.abs(2 * self.positions - n)))

    def choice(self, i: int) -> ThresholdChoice:
        p = self.positions[i]
        threshold = float((self.sorted_values[p - 1] + self.sorted_values[p]) / 2.0)
        return ThresholdChoice(threshold, float(self.gains[i]))


def _scan_thresholds(rows, var, residual_vars, d, config, binning) -> Optional[_ThresholdScan]:
    rows = np.asarray(rows)
    if d.mask[rows, var].any():
        raise InvariantError(f"threshold search called with masked rows on variable {var}")
    if len(rows) < 2 * config.min_leaf:
        return None

    values = d.values[rows, var]
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    positions = candidate_positions(sorted_values, config.min_leaf, config.max_threshold_candidates)
    if len(positions) == 0:
        return None

    if binning is None:
        binning = NodeBinning(d, rows, residual_vars, config.entropy, config.n_bins, config.binning)
    gains, dof = binning.threshold_statistics(order, positions)
    return _ThresholdScan(sorted_values, positions, gains, dof)


def choose_threshold(
    rows: np.ndarray,
    var: int,
    residual_vars: Sequence[int],
    d: Dataset,
    config,
    binning: Optional[NodeBinning] = None,
) -> Optional[ThresholdChoice]:
    """
    Threshold used when growing a tree

    Keeps the best_threshold candidate when its G-test, Bonferroni-corrected
    over the candidates, rejects independence from the residual variables at
    config.split_alpha. Otherwise takes the candidate closest to the median,
    whatever its gain. split_alpha None always keeps the best-gain candidate.
    """
    scan = _scan_thresholds(rows, var, residual_vars, d, config, binning)
    if scan is None:
        return None
    best = scan.best()
    if config.split_alpha is not None:
        p_value = split_p_values(scan.gains[best], scan.dof[best], len(scan.sorted_values))
        if min(1.0, float(p_value) * len(scan.positions)) > config.split_alpha:
            best = scan.balanced()
    return scan.choice(best)


# ---------------------------------------------------------------------------
# Node splitting
# ---------------------------------------------------------------------------

@dataclass
class NodeSplit:
    """A chosen split together with the child row sets it induces"""

    spec: object
    children: List[np.ndarray]
    gain: float


def _residuals(d: Dataset, exclude: Sequence[int], path_vars: FrozenSet[int], config) -> List[int]:
    excluded = set(exclude)
    if config.exclude_path_vars:
        excluded |= set(path_vars)
    return [v for v in range(d.n_cols) if v not in excluded]


def _draw_residuals(residual: List[int], config, rng: np.random.Generator) -> List[int]:
    """Random residual subset for joint-entropy mode or a capped marginal sum"""
    if config.entropy.kind == JOINT:
        limit = config.entropy.dims
    else:
        limit = config.n_residual_vars
    if limit is None or len(residual) <= limit:
        return residual
    return sorted(rng.choice(residual, size=limit, replace=False).tolist())


def _binning(d, rows, residual, config) -> NodeBinning:
    return NodeBinning(d, rows, residual, config.entropy, config.n_bins, config.binning)


def _is_variable(d: Dataset, rows: np.ndarray, var: int) -> bool:
    """Whether a variable takes more than one state (value or missingness) over rows"""
    missing = d.mask[rows, var]
    observed = d.values[rows, var][~missing]
    if observed.size == 0:
        return False
    if missing.any():
        return True
    return bool(observed.min() < observed.max())


def _threshold_split(rows, var, d, config, rng, path_vars) -> Optional[NodeSplit]:
    residual = _draw_residuals(_residuals(d, [var], path_vars, config), config, rng)
    if not residual:
        return None
    choice = choose_threshold(rows, var, residual, d, config)
    if choice is None:
        return None
    spec = ContinuousSplit(var, choice.threshold)
    slots = spec.assign(d.values, d.mask, rows)
    return NodeSplit(spec, [rows[slots == s] for s in range(2)], choice.gain)


def best_category(rows, var, residual_vars, d, config) -> Optional[Tuple[int, float]]:
    """One-vs-rest category of `var` with the highest residual gain over observed `rows`"""
    codes = d.values[rows, var].astype(np.int64)
    binning = _binning(d, rows, residual_vars, config)
    best = None
    for category in np.unique(codes).tolist():
        inside = codes == category
        if inside.sum() < config.min_leaf or (~inside).sum() < config.min_leaf:
            continue
        gain = binning.partition_gain(np.where(inside, 0, 1))
        if best is None or gain > best[1] + 1e-12:
            best = (int(category), gain)
    return best


def _category_split(rows, var, d, config, rng, path_vars) -> Optional[NodeSplit]:
    residual = _draw_residuals(_residuals(d, [var], path_vars, config), config, rng)
    if not residual:
        return None
    best = best_category(rows, var, residual, d, config)
    if best is None:
        return None
    spec = CategorySplit(var, best[0])
    slots = spec.assign(d.values, d.mask, rows)
    return NodeSplit(spec, [rows[slots == s] for s in range(2)], best[1])


def _aux_candidates(rows, exclude, d) -> List[int]:
    """Thresholdable, non-binary variables fully observed over rows"""
    out = []
    for v in range(d.n_cols):
        if v in exclude:
            continue
        if not d.schema[v].kind.thresholdable:
            continue
        if d.mask[rows, v].any():
            continue
        out.append(v)
    return out


def _mnar_split(rows, var, d, config, rng, path_vars) -> Optional[NodeSplit]:
    missing = d.mask[rows, var]
    measured_rows, missing_rows = rows[~missing], rows[missing]
    if len(measured_rows) < 2 * config.min_leaf or len(missing_rows) < 2 * config.min_leaf:
        return None

    measured_residual = _draw_residuals(_residuals(d, [var], path_vars, config), config, rng)
    if not measured_residual:
        return None
    measured_category = None
    if d.schema[var].kind.is_categorical:
        category = best_category(measured_rows, var, measured_residual, d, config)
        if category is None:
            return None
        measured_category, measured_threshold = category[0], 0.0
    else:
        measured = choose_threshold(measured_rows, var, measured_residual, d, config)
        if measured is None:
            return None
        measured_threshold = measured.threshold

    aux_pool = _aux_candidates(missing_rows, {var}, d)
    chosen = None
    for aux in rng.permutation(aux_pool).tolist() if aux_pool else []:
        residual = _draw_residuals(_residuals(d, [var, aux], path_vars, config), config, rng)
        if not residual:
            continue
        choice = choose_threshold(missing_rows, aux, residual, d, config)
        if choice is not None:
            chosen = (aux, choice, residual)
            break
    if chosen is None:
        return None

    aux, aux_choice, residual = chosen
    spec = MnarFourWay(var, measured_threshold, aux, aux_choice.threshold, measured_category)
    slots = spec.assign(d.values, d.mask, rows)
    children = [rows[slots == s] for s in range(4)]
    gain = _binning(d, rows, residual, config).partition_gain(slots)
    return NodeSplit(spec, children, gain)


def _binary_split(rows, var, d, config, rng, path_vars) -> Optional[NodeSplit]:
    is_one = d.values[rows, var] == 1
    zero_rows, one_rows = rows[~is_one], rows[is_one]
    if len(zero_rows) < 2 * config.min_leaf or len(one_rows) < 2 * config.min_leaf:
        return None

    aux_pool = _aux_candidates(rows, {var}, d)
    for aux in rng.permutation(aux_pool).tolist() if aux_pool else []:
        residual = _draw_residuals(_residuals(d, [var, aux], path_vars, config), config, rng)
        if not residual:
            continue
        zero_choice = choose_threshold(zero_rows, aux, residual, d, config)
        if zero_choice is None:
            continue
        one_choice = choose_threshold(one_rows, aux, residual, d, config)
        if one_choice is None:
            continue
        spec = BinaryFourWay(var, aux, zero_choice.threshold, one_choice.threshold)
        slots = spec.assign(d.values, d.mask, rows)
        children = [rows[slots == s] for s in range(4)]
        gain = _binning(d, rows, residual, config).partition_gain(slots)
        return NodeSplit(spec, children, gain)
    return None


def evaluate_variable(rows, var, d, config, rng, path_vars=frozenset()) -> Optional[NodeSplit]:
    """Best achievable split of `rows` on `var` under the mixed-type scheme"""
    kind = d.schema[var].kind
    if d.mask[rows, var].any():
        return _mnar_split(rows, var, d, config, rng, path_vars)
    if kind.is_binary:
        return _binary_split(rows, var, d, config, rng, path_vars)
    if kind.is_categorical:
        return _category_split(rows, var, d, config, rng, path_vars)
    return _threshold_split(rows, var, d, config, rng, path_vars)


def split_node(
    rows: np.ndarray,
    depth: int,
    config,
    d: Dataset,
    rng: np.random.Generator,
    path_vars: FrozenSet[int] = frozenset(),
    mnar_vars: Optional[FrozenSet[int]] = None,
) -> Optional[NodeSplit]:
    """
    Choose the split of one node, or None for a leaf

    Draws config.n_candidate_vars variables uniformly at random among those
    that vary over `rows` (MNAR variables are skipped while depth <
    config.mnar_restrict_levels), evaluates each, and keeps the best gain.

    Args:
        rows: Row indices reaching the node
        depth: Node depth (root = 0)
        config: ForestConfig
        d: Dataset
        rng: Tree random stream
        path_vars: Variables split on by ancestors
        mnar_vars: Variables with masked cells anywhere in d

    Returns:
        NodeSplit, or None when the node stays a leaf
    """
    rows = np.asarray(rows)
    if depth >= config.max_depth or len(rows) < 2 * config.min_leaf:
        return None
    if mnar_vars is None:
        mnar_vars = frozenset(d.masked_columns())

    eligible = []
    for var in range(d.n_cols):
        if var in mnar_vars and depth < config.mnar_restrict_levels:
            continue
        if _is_variable(d, rows, var):
            eligible.append(var)
    if not eligible:
        return None

    count = min(config.n_candidate_vars, len(eligible))
    candidates = rng.choice(eligible, size=count, replace=False).tolist()

    best = None
    for var in candidates:
        result = evaluate_variable(rows, var, d, config, rng, path_vars)
        if result is not None and (best is None or result.gain > best.gain + 1e-12):
            best = result
    return best
