"""
Cohort expressions

A cohort is either `@path` (a file of 0-based row ids separated by commas,
whitespace or newlines) or a conjunction of clauses joined by `&` or `and`:

    age > 80 & male == 1
    bilirubin missing and severity >= 2

Comparisons never select rows whose value is masked.
"""
import operator
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from datamodel import CohortError, Dataset

COMPARISONS: Dict[str, Callable] = {
    "<=": operator.le,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    ">": operator.gt,
}

_COMPARISON = re.compile(r"^\s*(?P<column>[^\s<>=!]+)\s*(?P<op><=|>=|==|!=|<|>)\s*(?P<literal>\S+)\s*$")
_PRESENCE = re.compile(r"^\s*(?P<column>\S+)\s+(?P<op>missing|observed)\s*$")
_CONJUNCTION = re.compile(r"\s*&\s*|\s+and\s+")


@dataclass(frozen=True)
class Clause:
    column: str
    op: str
    literal: Optional[float] = None

    def evaluate(self, d: Dataset) -> np.ndarray:
        values, mask = d.column(self.column)
        if self.op == "missing":
            return mask.copy()
        if self.op == "observed":
            return ~mask
        with np.errstate(invalid="ignore"):
            return COMPARISONS[self.op](values, self.literal) & ~mask


def parse_clause(text: str, expression: str) -> Clause:
    match = _PRESENCE.match(text)
    if match:
        return Clause(match["column"], match["op"])
    match = _COMPARISON.match(text)
    if not match:
        raise CohortError(f"malformed cohort expression '{expression}': cannot parse '{text.strip()}'")
    try:
        literal = float(match["literal"])
    except ValueError:
        raise CohortError(f"malformed cohort expression '{expression}': '{match['literal']}' is not a number")
    return Clause(match["column"], match["op"], literal)


def parse_expression(expression: str) -> List[Clause]:
    if not expression or not expression.strip():
        raise CohortError("empty cohort expression")
    return [parse_clause(part, expression) for part in _CONJUNCTION.split(expression.strip())]


def _read_row_ids(path: Path, n_rows: int, expression: str) -> np.ndarray:
    if not path.exists():
        raise CohortError(f"cohort file not found: {path}")
    tokens = re.split(r"[\s,]+", path.read_text().strip())
    try:
        rows = np.array(sorted({int(t) for t in tokens if t}), dtype=np.int64)
    except ValueError:
        raise CohortError(f"cohort file '{expression}' must contain integer row ids")
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise CohortError(f"cohort file '{expression}' has row ids outside 0..{n_rows - 1}")
    return rows


def select_rows(expression: str, d: Dataset) -> np.ndarray:
    """
    Row indices selected by a cohort expression

    Args:
        expression: Clause conjunction or `@file`
        d: Dataset in its original units

    Returns:
        Sorted row indices
    """
    if expression.strip().startswith("@"):
        return _read_row_ids(Path(expression.strip()[1:]), d.n_rows, expression)

    selected = np.ones(d.n_rows, dtype=bool)
    for clause in parse_expression(expression):
        if clause.column not in d.names:
            raise CohortError(f"cohort expression '{expression}' names unknown column '{clause.column}'")
        selected &= clause.evaluate(d)
    return np.nonzero(selected)[0]


def resolve_cohorts(expr_a: str, expr_b: str, d: Dataset, allow_overlap: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate both cohorts; they must be non-empty and, unless allowed, disjoint"""
    a = select_rows(expr_a, d)
    b = select_rows(expr_b, d)
    if a.size == 0:
        raise CohortError(f"cohort '{expr_a}' selects no rows")
    if b.size == 0:
        raise CohortError(f"cohort '{expr_b}' selects no rows")
    overlap = np.intersect1d(a, b)
    if overlap.size and not allow_overlap:
        raise CohortError(f"cohorts share {overlap.size} row(s); pass --allow-overlap to permit this")
    return a, b
