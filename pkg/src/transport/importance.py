"""Feature importance from per-node transport contributions"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from datamodel import CohortError
from forest import MuralForest
from transport.tree_wasserstein import cohort_distribution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureImportanceReport:
    """(variable, share) pairs sorted by share descending, ties by name"""

    entries: Tuple[Tuple[str, float], ...]
    total: float
    degenerate: bool

    def share(self, name: str) -> float:
        return dict(self.entries).get(name, 0.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.entries), columns=["variable", "share"])

    def to_table(self) -> str:
        lines = ["variable\tshare"]
        lines.extend(f"{name}\t{value!r}" for name, value in self.entries)
        return "\n".join(lines) + "\n"


def node_contributions(forest: MuralForest, t: int, leaves_a: np.ndarray, leaves_b: np.ndarray) -> Dict[int, float]:
    """Contribution of every non-root node of tree t, credited to a variable of its parent's split"""
    tree = forest.trees[t]
    mu = cohort_distribution(tree, leaves_a)
    nu = cohort_distribution(tree, leaves_b)
    contributions = tree.edge_weights * np.abs(mu.masses - nu.masses)
    credited: Dict[int, float] = {}
    for index in np.nonzero(contributions > 0)[0].tolist():
        parent = tree.nodes[index].parent
        var = tree.nodes[parent].split.credited_var(int(tree.child_slot[index]))
        credited[var] = credited.get(var, 0.0) + float(contributions[index])
    return credited


def feature_importance(
    forest: MuralForest,
    cohort_a: Sequence[int],
    cohort_b: Sequence[int],
    assignments: Optional[np.ndarray] = None,
) -> FeatureImportanceReport:
    """
    Attribute the cohort TSWD to the variables whose splits separate the cohorts

    Every node's contribution w_t * |D(t, mu) - D(t, nu)| goes to the split
    variable of its parent. An MNAR four-way split credits its aux variable
    for the two missing-branch children; a binary four-way split credits the
    binary variable for all four. Totals over all trees are normalized to
    sum to 1.

    Args:
        forest: Fitted forest
        cohort_a: Row indices of the first cohort
        cohort_b: Row indices of the second cohort
        assignments: Leaf index per tree and row (defaults to the training leaves)

    Returns:
        FeatureImportanceReport; `degenerate` is set when the cohorts are
        indistinguishable and every share is 0
    """
    a = np.asarray(cohort_a, dtype=np.int64)
    b = np.asarray(cohort_b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise CohortError("cohort is empty")
    if assignments is None:
        assignments = forest.leaf_assignments

    totals = np.zeros(len(forest.schema))
    for t in range(forest.n_trees):
        for var, value in node_contributions(forest, t, assignments[t, a], assignments[t, b]).items():
            totals[var] += value

    total = float(totals.sum())
    names: List[str] = forest.schema.names
    if total > 0:
        shares = totals / total
    else:
        shares = np.zeros_like(totals)
    entries = sorted(zip(names, (float(s) for s in shares)), key=lambda item: (-item[1], item[0]))
    if total == 0:
        logger.warning("Cohorts are indistinguishable in every tree; all importances are 0")
    return FeatureImportanceReport(tuple(entries), total, total == 0)
