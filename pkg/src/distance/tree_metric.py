"""Tree path distances and the forest-averaged distance matrix"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from distance.kernels import DistanceMatrix
from forest import MuralForest, MuralTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeafDistances:
    """Path lengths between the leaves of one tree; `leaves[a]` is the node index of row/column a"""

    leaves: np.ndarray
    matrix: np.ndarray

    def position(self) -> np.ndarray:
        """Map from node index to row/column of `matrix` (-1 for internal nodes)"""
        pos = np.full(int(self.leaves.max()) + 1, -1, dtype=np.int64)
        pos[self.leaves] = np.arange(len(self.leaves))
        return pos


def ancestor_table(tree: MuralTree, nodes: np.ndarray) -> np.ndarray:
    """ancestors[a, l] = ancestor of nodes[a] at depth l (or -1 when the node is shallower)"""
    depth = tree.max_depth
    table = np.full((len(nodes), depth + 1), -1, dtype=np.int64)
    current = np.array(nodes, dtype=np.int64)
    levels = tree.depths[current].copy()
    while True:
        active = current >= 0
        if not active.any():
            break
        table[np.nonzero(active)[0], levels[active]] = current[active]
        parent = np.where(active, tree.parents[np.maximum(current, 0)], -1)
        current = parent
        levels = levels - 1
    return table


def node_distances(tree: MuralTree, nodes: np.ndarray) -> np.ndarray:
    """
    Weighted length of the unique path between every pair of the given nodes

    dist(a, b) = w(a) + w(b) - 2 w(lca(a, b)), with w the weighted depth.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    table = ancestor_table(tree, nodes)
    weights = tree.edge_weights
    weighted_depth = np.zeros(len(nodes))
    shared = np.zeros((len(nodes), len(nodes)))
    for level in range(1, table.shape[1]):
        column = table[:, level]
        present = column >= 0
        w = np.where(present, weights[np.maximum(column, 0)], 0.0)
        weighted_depth += w
        same = (column[:, None] == column[None, :]) & present[:, None]
        shared += same * w[:, None]
    return weighted_depth[:, None] + weighted_depth[None, :] - 2.0 * shared


def tree_leaf_distances(tree: MuralTree) -> LeafDistances:
    """Path-length matrix over the leaves of a tree"""
    return LeafDistances(tree.leaves, node_distances(tree, tree.leaves))


def forest_distance_matrix(
    forest: MuralForest,
    assignments: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> DistanceMatrix:
    """
    Average of the per-tree leaf path distances

    Leaf-pair distances are computed once per tree and broadcast to the row
    pairs that fall in those leaves.

    Args:
        forest: Fitted forest
        assignments: Leaf index per tree and row, shape (n_trees, n_rows);
            defaults to the training assignments
        n_jobs: Worker count for the per-tree leaf distances

    Returns:
        DistanceMatrix over the rows
    """
    if assignments is None:
        assignments = forest.leaf_assignments
    n_rows = assignments.shape[1]

    per_tree = Parallel(n_jobs=n_jobs)(delayed(tree_leaf_distances)(tree) for tree in forest.trees)
    total = np.zeros((n_rows, n_rows))
    for leaf_distances, leaves in zip(per_tree, assignments):
        idx = leaf_distances.position()[leaves]
        total += leaf_distances.matrix[np.ix_(idx, idx)]

    values = total / forest.n_trees
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    logger.info("Distance matrix over %d rows from %d trees", n_rows, forest.n_trees)
    return DistanceMatrix(values)
