"""Forest configuration, fitting, routing and structural checks"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from datamodel import ConfigError, DataError, Dataset, Schema, StandardizationParams
from forest.entropy import EntropyMode
from forest.splits import BinaryFourWay, MnarFourWay
from forest.tree import MuralTree, apply_tree, build_tree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestConfig:
    """Forest knobs; defaults are the best settings of the ablation study"""

    n_trees: int = 100
    max_depth: int = 10
    n_candidate_vars: int = 1
    entropy: EntropyMode = field(default_factory=EntropyMode)
    n_residual_vars: Optional[int] = None
    mnar_restrict_levels: int = 3
    min_leaf: int = 5
    max_threshold_candidates: int = 64
    split_alpha: Optional[float] = 0.05
    n_bins: Optional[int] = None
    binning: str = "width"
    four_way_edge_weight: float = 1.0
    exclude_path_vars: bool = False
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.entropy, (str, int)):
            object.__setattr__(self, "entropy", EntropyMode.parse(self.entropy))
        for name in ("n_trees", "n_candidate_vars", "min_leaf", "max_threshold_candidates"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.mnar_restrict_levels < 0:
            raise ConfigError("mnar_restrict_levels must be >= 0")
        if self.n_residual_vars is not None and self.n_residual_vars < 1:
            raise ConfigError("n_residual_vars must be >= 1")
        if self.n_bins is not None and self.n_bins < 1:
            raise ConfigError("n_bins must be >= 1")
        if self.binning not in ("width", "quantile"):
            raise ConfigError("binning must be 'width' or 'quantile'")
        if self.split_alpha is not None and not 0.0 < self.split_alpha <= 1.0:
            raise ConfigError("split_alpha must be in (0, 1] or null")
        if self.four_way_edge_weight <= 0:
            raise ConfigError("four_way_edge_weight must be positive")

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["entropy"] = str(self.entropy)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "ForestConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown forest option(s): {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class MuralForest:
    """
    Fitted ensemble

    `leaf_assignments[t, i]` is the leaf node index of training row i in
    tree t.
    """

    trees: Tuple[MuralTree, ...]
    config: ForestConfig
    schema: Schema
    standardization: StandardizationParams
    leaf_assignments: np.ndarray
    mnar_vars: Tuple[int, ...] = ()
    fingerprint: str = ""

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_rows(self) -> int:
        return int(self.leaf_assignments.shape[1])

    def scaled(self, factor: float) -> "MuralForest":
        return replace(self, trees=tuple(t.scaled(factor) for t in self.trees))

    def duplicated(self) -> "MuralForest":
        """Forest with every tree repeated once"""
        return replace(
            self,
            trees=self.trees + self.trees,
            leaf_assignments=np.vstack([self.leaf_assignments, self.leaf_assignments]),
        )


def _fit_one(d: Dataset, config: ForestConfig, index: int, mnar_vars) -> Tuple[MuralTree, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    return build_tree(d, config, rng, mnar_vars)


def fit(
    d: Dataset,
    config: ForestConfig = ForestConfig(),
    standardization: Optional[StandardizationParams] = None,
    fingerprint: str = "",
    n_jobs: int = 1,
) -> MuralForest:
    """
    Fit a forest of config.n_trees trees on all rows (no bagging)

    Tree t draws from a random stream seeded by (config.seed, t), so the
    result does not depend on n_jobs.

    Args:
        d: Standardized dataset with randomly missing columns imputed
        config: ForestConfig
        standardization: Parameters used to standardize d (stored with the forest)
        fingerprint: Fingerprint of the raw input data (stored with the forest)
        n_jobs: Worker count

    Returns:
        MuralForest
    """
    if d.n_rows < 2 * config.min_leaf:
        raise DataError(f"need at least {2 * config.min_leaf} rows to fit, got {d.n_rows}")

    mnar_vars = frozenset(d.masked_columns())
    logger.info(
        "Fitting %d trees (depth %d, %d candidate var(s), entropy %s) on %d rows",
        config.n_trees, config.max_depth, config.n_candidate_vars, config.entropy, d.n_rows,
    )
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_one)(d, config, t, mnar_vars) for t in range(config.n_trees)
    )
    trees = tuple(tree for tree, _ in results)
    assignments = np.vstack([leaves for _, leaves in results])
    assignments.setflags(write=False)

    return MuralForest(
        trees=trees,
        config=config,
        schema=d.schema,
        standardization=standardization or StandardizationParams(),
        leaf_assignments=assignments,
        mnar_vars=tuple(sorted(mnar_vars)),
        fingerprint=fingerprint,
    )


def apply(forest: MuralForest, d: Dataset) -> np.ndarray:
    """Leaf index of every row of d in every tree, shape (n_trees, n_rows)"""
    if d.schema.names != forest.schema.names:
        raise DataError("dataset columns do not match the forest's schema")
    return np.vstack([apply_tree(tree, d.values, d.mask) for tree in forest.trees])


def scan_forest(forest: MuralForest, d: Optional[Dataset] = None) -> List[str]:
    """
    Check the structural invariants of a fitted forest

    Args:
        forest: Forest to scan
        d: Training dataset; enables the row-level checks

    Returns:
        Human-readable violations (empty when the forest is sound)
    """
    config = forest.config
    mnar = set(forest.mnar_vars)
    problems = []

    for t, tree in enumerate(forest.trees):
        leaves = forest.leaf_assignments[t]
        for index, node in enumerate(tree.nodes):
            for child in node.children:
                c = tree.nodes[child]
                if c.parent != index or c.depth != node.depth + 1:
                    problems.append(f"tree {t} node {child}: bad parent/depth link")
            if node.is_leaf:
                if node.children:
                    problems.append(f"tree {t} node {index}: leaf with children")
                if index != 0 and node.n_rows < config.min_leaf:
                    problems.append(f"tree {t} leaf {index}: {node.n_rows} rows < min_leaf")
                if node.depth > config.max_depth:
                    problems.append(f"tree {t} leaf {index}: depth {node.depth} > max_depth")
                if int((leaves == index).sum()) != node.n_rows:
                    problems.append(f"tree {t} leaf {index}: recorded size does not match assignments")
                continue

            split = node.split
            if len(node.children) != split.n_children:
                problems.append(f"tree {t} node {index}: {len(node.children)} children, expected {split.n_children}")
            if sum(tree.nodes[c].n_rows for c in node.children) != node.n_rows:
                problems.append(f"tree {t} node {index}: children do not partition the parent's rows")
            if node.depth < config.mnar_restrict_levels and split.var in mnar:
                problems.append(f"tree {t} node {index}: MNAR variable split at depth {node.depth}")
            if isinstance(split, (MnarFourWay, BinaryFourWay)) and split.aux_var == split.var:
                problems.append(f"tree {t} node {index}: aux variable equals split variable")

        if not np.all(np.isin(leaves, tree.leaves)):
            problems.append(f"tree {t}: a training row is assigned to a non-leaf")

        if d is not None:
            routed = apply_tree(tree, d.values, d.mask)
            if not np.array_equal(routed, leaves):
                problems.append(f"tree {t}: routing training rows disagrees with recorded leaves")
            problems.extend(_scan_aux_masks(t, tree, routed, d))

    return problems


def _scan_aux_masks(t: int, tree: MuralTree, leaves: np.ndarray, d: Dataset) -> List[str]:
    """Aux variables must be fully observed over the rows routed through them"""
    problems = []
    # rows per node from the leaves upward
    members: Dict[int, List[np.ndarray]] = {}
    for leaf in tree.leaves.tolist():
        node = leaf
        rows = np.nonzero(leaves == leaf)[0]
        while node >= 0:
            members.setdefault(node, []).append(rows)
            node = tree.nodes[node].parent
    for index, node in enumerate(tree.nodes):
        split = node.split
        if isinstance(split, MnarFourWay):
            rows = np.concatenate(members.get(index, [np.array([], dtype=np.int64)]))
            missing_rows = rows[d.mask[rows, split.var]]
            if d.mask[missing_rows, split.aux_var].any():
                problems.append(f"tree {t} node {index}: aux variable masked on the missing branch")
        elif isinstance(split, BinaryFourWay):
            rows = np.concatenate(members.get(index, [np.array([], dtype=np.int64)]))
            if d.mask[rows, split.aux_var].any():
                problems.append(f"tree {t} node {index}: aux variable masked under a binary split")
    return problems
