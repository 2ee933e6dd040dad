"""Pairwise two-sample tests that separate MNAR columns from randomly missing ones"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import chi2_contingency, mannwhitneyu

from datamodel import DataError, Dataset
from datamodel.schema import Missingness

logger = logging.getLogger(__name__)

MIN_GROUP_ROWS = 5


@dataclass(frozen=True)
class TestEvidence:
    """One pairwise comparison of column `other` between masked and observed rows"""

    other: str
    test: str
    statistic: float
    p_value: float


@dataclass(frozen=True)
class ColumnMissingness:
    name: str
    missing_count: int
    classification: Missingness
    p_value: float
    evidence: Tuple[TestEvidence, ...] = ()
    insufficient_data: bool = False
    source: str = "test"  # "test" or "hint"


@dataclass(frozen=True)
class MissingnessProfile:
    """Classification of every column that has masked cells"""

    alpha: float
    columns: Tuple[ColumnMissingness, ...] = field(default_factory=tuple)

    def get(self, name: str) -> Optional[ColumnMissingness]:
        for entry in self.columns:
            if entry.name == name:
                return entry
        return None

    @property
    def mnar_columns(self) -> List[str]:
        return [c.name for c in self.columns if c.classification == Missingness.MNAR]

    @property
    def random_columns(self) -> List[str]:
        return [c.name for c in self.columns if c.classification == Missingness.RANDOM]

    def __len__(self) -> int:
        return len(self.columns)


def _compare(d: Dataset, v: int, u: int) -> Optional[TestEvidence]:
    """Compare column u between rows where v is masked and rows where it is observed"""
    observed_u = ~d.mask[:, u]
    missing_v = d.mask[:, v]
    in_missing = missing_v & observed_u
    in_observed = ~missing_v & observed_u
    if in_missing.sum() < 1 or in_observed.sum() < 1:
        return None

    column = d.schema[u]
    values = d.values[:, u]
    if column.kind.thresholdable:
        a, b = values[in_missing], values[in_observed]
        if np.ptp(np.concatenate([a, b])) == 0:
            return None
        statistic, p_value = mannwhitneyu(a, b, alternative="two-sided")
        test = "rank-sum"
    else:
        codes = values[observed_u].astype(np.int64)
        flag = missing_v[observed_u].astype(np.int64)
        table = np.zeros((2, column.kind.levels))
        np.add.at(table, (flag, codes), 1)
        table = table[:, table.sum(axis=0) > 0]
        if table.shape[1] < 2:
            return None
        statistic, p_value, _, _ = chi2_contingency(table)
        test = "chi-square"

    if not np.isfinite(p_value):
        return None
    return TestEvidence(column.name, test, float(statistic), float(p_value))


def _classify_column(d: Dataset, v: int, alpha: float) -> ColumnMissingness:
    column = d.schema[v]
    missing = d.mask[:, v]
    n_missing = int(missing.sum())
    n_observed = d.n_rows - n_missing
    hint = column.missingness

    if n_missing < MIN_GROUP_ROWS or n_observed < MIN_GROUP_ROWS:
        classification = Missingness.MNAR if hint == Missingness.MNAR else Missingness.RANDOM
        logger.info("Column '%s': insufficient data for testing, classified by hint", column.name)
        return ColumnMissingness(
            column.name, n_missing, classification,
            p_value=0.0 if classification == Missingness.MNAR else 1.0,
            insufficient_data=True, source="hint",
        )

    evidence = []
    for u in range(d.n_cols):
        if u == v:
            continue
        result = _compare(d, v, u)
        if result is not None:
            evidence.append(result)

    if evidence:
        # Bonferroni over the pairwise tests
        p_value = min(1.0, min(e.p_value for e in evidence) * len(evidence))
    else:
        p_value = 1.0

    if hint == Missingness.AUTO:
        classification = Missingness.MNAR if p_value <= alpha else Missingness.RANDOM
        source = "test"
    else:
        classification = hint
        source = "hint"

    return ColumnMissingness(column.name, n_missing, classification, p_value, tuple(evidence), False, source)


def detect_mnar(d: Dataset, alpha: float = 0.05, n_jobs: int = 1) -> MissingnessProfile:
    """
    Classify each partially masked column as MNAR or randomly missing

    For every other column, rows where the target is masked are compared
    with rows where it is observed (rank-sum for continuous and ordinal
    columns, chi-square on the contingency table for binary and categorical
    ones). The column's p-value is the Bonferroni-adjusted minimum over those
    tests; p <= alpha means MNAR.

    Args:
        d: Dataset to analyze
        alpha: Significance level
        n_jobs: Worker count for the per-column loop

    Returns:
        MissingnessProfile with one entry per masked column
    """
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha must be in (0, 1), got {alpha}")

    targets = d.masked_columns()
    entries = Parallel(n_jobs=n_jobs)(delayed(_classify_column)(d, v, alpha) for v in targets)
    for entry in entries:
        logger.info(
            "Column '%s': %d masked, p=%.3g -> %s",
            entry.name, entry.missing_count, entry.p_value, entry.classification.value,
        )
    return MissingnessProfile(alpha, tuple(entries))


def profile_report(profile: MissingnessProfile) -> str:
    """Human-readable report, one line per column"""
    lines = [f"# alpha={profile.alpha}", "column\tmissing_count\tp_value\tclassification"]
    for entry in profile.columns:
        note = " (insufficient data)" if entry.insufficient_data else ""
        lines.append(
            f"{entry.name}\t{entry.missing_count}\t{entry.p_value:.6g}\t{entry.classification.value}{note}"
        )
    return "\n".join(lines) + "\n"


def profile_to_dict(profile: MissingnessProfile) -> Dict:
    return {
        "alpha": profile.alpha,
        "columns": [
            {
                "name": e.name,
                "missing_count": e.missing_count,
                "classification": e.classification.value,
                "p_value": e.p_value,
                "insufficient_data": e.insufficient_data,
                "source": e.source,
                "evidence": [
                    {"other": t.other, "test": t.test, "statistic": t.statistic, "p_value": t.p_value}
                    for t in e.evidence
                ],
            }
            for e in profile.columns
        ],
    }
