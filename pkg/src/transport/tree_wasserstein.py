"""Subtree masses and the tree-sliced Wasserstein distance"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from datamodel import CohortError, DataError
from forest import MuralForest, MuralTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NodeMass:
    """
    Subtree mass of a distribution over one tree

    `masses[t]` is the mass located at node t or below it; `signature`
    identifies the tree the vector belongs to.
    """

    signature: str
    masses: np.ndarray

    def __post_init__(self):
        masses = np.array(self.masses, dtype=np.float64)
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @property
    def total(self) -> float:
        return float(self.masses[0])

    def equals(self, other: "NodeMass") -> bool:
        return self.signature == other.signature and np.array_equal(self.masses, other.masses)


@dataclass(frozen=True, eq=False)
class CohortDistribution:
    """One NodeMass per tree of a forest, for a cohort of `size` rows"""

    slices: Tuple[NodeMass, ...]
    size: int


def _accumulate(tree: MuralTree, point_mass: np.ndarray) -> np.ndarray:
    """Push point masses up to every ancestor, deepest level first"""
    masses = np.array(point_mass, dtype=np.float64)
    depths = tree.depths
    for level in range(tree.max_depth, 0, -1):
        nodes = np.nonzero(depths == level)[0]
        np.add.at(masses, tree.parents[nodes], masses[nodes])
    return masses


def mass_distribution(tree: MuralTree, point_mass) -> NodeMass:
    """
    Subtree masses from an arbitrary mass vector over the tree's nodes

    Args:
        tree: Tree the masses live on
        point_mass: Non-negative mass per node (usually only at leaves), summing to 1

    Returns:
        NodeMass
    """
    point_mass = np.asarray(point_mass, dtype=np.float64)
    if point_mass.shape != (len(tree),):
        raise DataError(f"mass vector has shape {point_mass.shape}, tree has {len(tree)} nodes")
    if np.any(point_mass < 0):
        raise DataError("masses must be non-negative")
    if abs(point_mass.sum() - 1.0) > 1e-9:
        raise DataError(f"masses sum to {point_mass.sum()}, expected 1")
    return NodeMass(tree.signature, _accumulate(tree, point_mass))


def cohort_distribution(tree: MuralTree, leaves) -> NodeMass:
    """
    Uniform distribution over a cohort, given the leaf of each cohort row

    Args:
        tree: Tree the leaves belong to
        leaves: Leaf index per cohort row (one entry per row)

    Returns:
        NodeMass with mass 1/|cohort| per row placed at its leaf
    """
    leaves = np.asarray(leaves, dtype=np.int64)
    if leaves.size == 0:
        raise CohortError("cohort is empty")
    point_mass = np.bincount(leaves, minlength=len(tree)).astype(np.float64) / leaves.size
    return NodeMass(tree.signature, _accumulate(tree, point_mass))


def forest_cohort_distribution(
    forest: MuralForest,
    rows: Sequence[int],
    assignments: Optional[np.ndarray] = None,
) -> CohortDistribution:
    """cohort_distribution in every tree of the forest"""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise CohortError("cohort is empty")
    if assignments is None:
        assignments = forest.leaf_assignments
    slices = tuple(cohort_distribution(tree, assignments[t, rows]) for t, tree in enumerate(forest.trees))
    return CohortDistribution(slices, int(rows.size))


def tree_wasserstein(tree: MuralTree, mu: NodeMass, nu: NodeMass) -> float:
    """Sum over non-root nodes of edge_weight * |D(t, mu) - D(t, nu)|"""
    if mu.signature != tree.signature or nu.signature != tree.signature:
        raise DataError("distribution does not belong to this tree")
    return float(np.sum(tree.edge_weights * np.abs(mu.masses - nu.masses)))


@dataclass(frozen=True)
class TswdResult:
    mean: float
    std: float
    per_tree: Tuple[float, ...]
    size_a: int
    size_b: int


def _tree_tswd(tree: MuralTree, leaves_a: np.ndarray, leaves_b: np.ndarray) -> float:
    return tree_wasserstein(tree, cohort_distribution(tree, leaves_a), cohort_distribution(tree, leaves_b))


def forest_tswd(
    forest: MuralForest,
    cohort_a: Sequence[int],
    cohort_b: Sequence[int],
    assignments: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> TswdResult:
    """
    Tree-sliced Wasserstein distance between two row cohorts

    Args:
        forest: Fitted forest
        cohort_a: Row indices of the first cohort
        cohort_b: Row indices of the second cohort
        assignments: Leaf index per tree and row (defaults to the training leaves)
        n_jobs: Worker count

    Returns:
        TswdResult with the mean and population standard deviation over trees
    """
    a = np.asarray(cohort_a, dtype=np.int64)
    b = np.asarray(cohort_b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise CohortError("cohort is empty")
    if assignments is None:
        assignments = forest.leaf_assignments

    per_tree = Parallel(n_jobs=n_jobs)(
        delayed(_tree_tswd)(tree, assignments[t, a], assignments[t, b])
        for t, tree in enumerate(forest.trees)
    )
    values = np.array(per_tree)
    logger.info("TSWD over %d trees: cohorts of %d and %d rows", forest.n_trees, a.size, b.size)
    return TswdResult(
        mean=float(values.mean()),
        std=float(values.std()),
        per_tree=tuple(float(v) for v in values),
        size_a=int(a.size),
        size_b=int(b.size),
    )


def tswd_report(result: TswdResult, per_tree: bool = False) -> str:
    lines = [
        f"cohort_a_size\t{result.size_a}",
        f"cohort_b_size\t{result.size_b}",
        f"tswd_mean\t{result.mean!r}",
        f"tswd_std\t{result.std!r}",
        f"n_trees\t{len(result.per_tree)}",
    ]
    if per_tree:
        lines.extend(f"tree_{t}\t{value!r}" for t, value in enumerate(result.per_tree))
    return "\n".join(lines) + "\n"
