"""MURAL trees: construction, routing and structural queries"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from datamodel import Dataset, InvariantError
from forest.splits import split_from_dict, split_node

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Node:
    parent: int
    depth: int
    edge_weight: float
    n_rows: int
    split: Optional[object] = None
    children: Tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def to_list(self) -> List:
        return [
            self.parent,
            self.depth,
            self.edge_weight,
            self.n_rows,
            self.split.to_dict() if self.split is not None else None,
            list(self.children),
        ]

    @classmethod
    def from_list(cls, data: List) -> "Node":
        parent, depth, weight, n_rows, split, children = data
        return cls(
            int(parent),
            int(depth),
            float(weight),
            int(n_rows),
            split_from_dict(split) if split is not None else None,
            tuple(int(c) for c in children),
        )


@dataclass(frozen=True, eq=False)
class MuralTree:
    """
    Unsupervised tree stored as a flat node array, root at index 0

    Parents always precede their children. Leaves carry no rows themselves;
    the forest keeps the training leaf of every row.
    """

    nodes: Tuple[Node, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes or self.nodes[0].parent != -1:
            raise InvariantError("tree must have a root at index 0")

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def parents(self) -> np.ndarray:
        return np.array([n.parent for n in self.nodes], dtype=np.int64)

    @cached_property
    def depths(self) -> np.ndarray:
        return np.array([n.depth for n in self.nodes], dtype=np.int64)

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """Weight of the edge into each node (0 for the root)"""
        return np.array([n.edge_weight if n.parent >= 0 else 0.0 for n in self.nodes])

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.array([i for i, n in enumerate(self.nodes) if n.is_leaf], dtype=np.int64)

    @cached_property
    def max_depth(self) -> int:
        return int(self.depths.max())

    @cached_property
    def signature(self) -> str:
        """Structural hash used to check that distributions belong to this tree"""
        digest = hashlib.sha256(self.parents.tobytes())
        digest.update(self.edge_weights.tobytes())
        return digest.hexdigest()

    @cached_property
    def child_slot(self) -> np.ndarray:
        """Position of each node among its parent's children (-1 for the root)"""
        slots = np.full(len(self.nodes), -1, dtype=np.int64)
        for node in self.nodes:
            for slot, child in enumerate(node.children):
                slots[child] = slot
        return slots

    def child_sizes(self, index: int) -> List[int]:
        return [self.nodes[c].n_rows for c in self.nodes[index].children]

    def scaled(self, factor: float) -> "MuralTree":
        """Same tree with every edge weight multiplied by factor"""
        return MuralTree(tuple(replace(n, edge_weight=n.edge_weight * factor) for n in self.nodes))

    def to_dict(self) -> Dict:
        return {"nodes": [n.to_list() for n in self.nodes]}

    @classmethod
    def from_dict(cls, data: Dict) -> "MuralTree":
        return cls(tuple(Node.from_list(n) for n in data["nodes"]))


def apply_tree(tree: MuralTree, values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    Leaf index of every row

    Masked values at a split go to the child (or child pair) that received
    the most training rows, leftmost on ties.
    """
    n = values.shape[0]
    leaves = np.full(n, -1, dtype=np.int64)
    stack = [(0, np.arange(n))]
    while stack:
        index, rows = stack.pop()
        node = tree.nodes[index]
        if node.is_leaf:
            leaves[rows] = index
            continue
        slots = node.split.assign(values, mask, rows, tree.child_sizes(index))
        for slot, child in enumerate(node.children):
            selected = rows[slots == slot]
            if selected.size:
                stack.append((child, selected))
    return leaves


def route(tree: MuralTree, values: np.ndarray, mask: np.ndarray) -> int:
    """Leaf index for a single row (feature vector plus missing mask)"""
    values = np.asarray(values, dtype=np.float64).reshape(1, -1)
    mask = np.asarray(mask, dtype=bool).reshape(1, -1)
    return int(apply_tree(tree, values, mask)[0])


def build_tree(
    d: Dataset,
    config,
    rng: np.random.Generator,
    mnar_vars: Optional[FrozenSet[int]] = None,
) -> Tuple[MuralTree, np.ndarray]:
    """
    Grow one tree from the full row set by recursive split_node calls

    Args:
        d: Standardized dataset (MNAR masks may remain)
        config: ForestConfig
        rng: Random stream of this tree
        mnar_vars: Variables treated as MNAR (default: every masked column)

    Returns:
        Tuple of (tree, training leaf index per row)
    """
    if mnar_vars is None:
        mnar_vars = frozenset(d.masked_columns())

    records = [{"parent": -1, "depth": 0, "weight": 0.0, "n_rows": d.n_rows, "split": None, "children": ()}]
    leaf_of_row = np.full(d.n_rows, -1, dtype=np.int64)
    stack = [(0, np.arange(d.n_rows), frozenset())]

    while stack:
        index, rows, path_vars = stack.pop()
        depth = records[index]["depth"]
        result = split_node(rows, depth, config, d, rng, path_vars, mnar_vars)
        if result is None:
            leaf_of_row[rows] = index
            continue

        weight = config.four_way_edge_weight if result.spec.n_children == 4 else 1.0
        child_ids = []
        for child_rows in result.children:
            child_ids.append(len(records))
            records.append({
                "parent": index, "depth": depth + 1, "weight": weight,
                "n_rows": len(child_rows), "split": None, "children": (),
            })
        records[index]["split"] = result.spec
        records[index]["children"] = tuple(child_ids)

        child_path = path_vars | frozenset(result.spec.variables())
        for child, child_rows in reversed(list(zip(child_ids, result.children))):
            stack.append((child, child_rows, child_path))

    nodes = tuple(
        Node(r["parent"], r["depth"], r["weight"], r["n_rows"], r["split"], r["children"])
        for r in records
    )
    tree = MuralTree(nodes)
    logger.debug("Built tree: %d nodes, %d leaves, depth %d", len(nodes), len(tree.leaves), tree.max_depth)
    return tree, leaf_of_row
