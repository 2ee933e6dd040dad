"""Synthetic datasets: the 5-D Swiss roll and a mixed-type latent-group cohort"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from datamodel import ColumnKind, ColumnSpec, ConfigError, Dataset, Schema
from missingness import induce_mcar

logger = logging.getLogger(__name__)

SWISS_ROLL_COLUMNS = ("x1", "x2", "x3", "x4", "x5")


@dataclass(frozen=True, eq=False)
class SwissRollSample:
    """Intrinsic coordinates (t, h) and the complete ambient dataset"""

    t: np.ndarray
    h: np.ndarray
    complete: Dataset

    @property
    def ambient(self) -> np.ndarray:
        return self.complete.values

    @property
    def n(self) -> int:
        return len(self.t)


def gen_swiss_roll_5d(n: int = 3000, noise: float = 0.0, seed: int = 0) -> SwissRollSample:
    """
    Swiss roll in five dimensions

    t ~ U[1.5pi, 4.5pi], h ~ U[0, 20]; the ambient coordinates are
    (t cos t, h, t sin t, 0.5 t + N(0, 1), 0.5 h + N(0, 1)). A positive
    `noise` adds N(0, noise^2) to the first three coordinates.
    """
    if n < 10:
        raise ConfigError(f"Swiss roll needs n >= 10, got {n}")
    rng = np.random.default_rng(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, n)
    h = rng.uniform(0.0, 20.0, n)
    ambient = np.column_stack([
        t * np.cos(t),
        h,
        t * np.sin(t),
        0.5 * t + rng.normal(0.0, 1.0, n),
        0.5 * h + rng.normal(0.0, 1.0, n),
    ])
    if noise > 0:
        ambient[:, :3] += rng.normal(0.0, noise, (n, 3))

    schema = Schema(tuple(ColumnSpec(name, ColumnKind.continuous()) for name in SWISS_ROLL_COLUMNS))
    complete = Dataset(schema, ambient, np.zeros_like(ambient, dtype=bool))
    return SwissRollSample(t, h, complete)


def induce_swiss_roll_missingness(
    sample: SwissRollSample,
    seed: int = 0,
    mnar_quantile: float = 0.7,
    mcar_fraction: float = 0.2,
) -> Dataset:
    """
    Mask x1 where t exceeds its mnar_quantile (not at random), and
    mcar_fraction of x2 and of x3 completely at random
    """
    if not 0.0 < mnar_quantile < 1.0:
        raise ConfigError("mnar_quantile must be in (0, 1)")
    d = sample.complete
    d = d.with_mask("x1", sample.t > np.quantile(sample.t, mnar_quantile))
    seeds = np.random.SeedSequence([seed, 1]).generate_state(2)
    d = induce_mcar(d, "x2", mcar_fraction, int(seeds[0]))
    d = induce_mcar(d, "x3", mcar_fraction, int(seeds[1]))
    logger.debug("Swiss roll missingness: %d masked cells", int(d.mask.sum()))
    return d


@dataclass(frozen=True)
class MnarRule:
    """Mask `column` where its value is beyond its `quantile` (above or below)"""

    column: str
    quantile: float = 0.9
    direction: str = "above"


@dataclass(frozen=True)
class ClinicalSpec:
    columns: Tuple[ColumnSpec, ...]
    n_groups: int = 2
    separation: float = 3.0
    mnar_rules: Tuple[MnarRule, ...] = ()

    def validate(self) -> None:
        if self.n_groups < 1:
            raise ConfigError("n_groups must be >= 1")
        if not self.columns:
            raise ConfigError("clinical spec needs at least one column")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ConfigError("clinical spec has duplicate column names")
        kinds = {c.name: c.kind for c in self.columns}
        for rule in self.mnar_rules:
            if rule.column not in kinds:
                raise ConfigError(f"MNAR rule names unknown column '{rule.column}'")
            if not kinds[rule.column].is_continuous:
                raise ConfigError(f"MNAR rule column '{rule.column}' must be continuous")
            if not 0.0 < rule.quantile < 1.0:
                raise ConfigError(f"MNAR rule quantile must be in (0, 1), got {rule.quantile}")
            if rule.direction not in ("above", "below"):
                raise ConfigError(f"MNAR rule direction must be above or below, got '{rule.direction}'")


def default_clinical_spec(n_groups: int = 2, separation: float = 3.0) -> ClinicalSpec:
    columns = (
        ColumnSpec("age", ColumnKind.continuous()),
        ColumnSpec("heart_rate", ColumnKind.continuous()),
        ColumnSpec("bilirubin", ColumnKind.continuous()),
        ColumnSpec("lactate", ColumnKind.continuous()),
        ColumnSpec("male", ColumnKind.binary()),
        ColumnSpec("severity", ColumnKind.ordinal(4)),
        ColumnSpec("unit", ColumnKind.categorical(3)),
    )
    return ClinicalSpec(columns, n_groups, separation, (MnarRule("bilirubin", 0.9, "above"),))


def _column_values(kind: ColumnKind, shift: np.ndarray, spec: ClinicalSpec, rng) -> np.ndarray:
    n = len(shift)
    if kind.is_continuous:
        return spec.separation * shift + rng.normal(0.0, 1.0, n)
    if kind.is_binary:
        p = np.where(shift % 2 == 0, 0.2, 0.8)
        return (rng.random(n) < p).astype(np.float64)
    if kind.is_ordinal:
        scale = (kind.levels - 1) / max(spec.n_groups - 1, 1)
        raw = np.rint(shift * scale + rng.normal(0.0, 0.5, n))
        return np.clip(raw, 0, kind.levels - 1)
    # categorical: group-preferred category with probability 0.7
    preferred = shift % kind.levels
    uniform = rng.integers(0, kind.levels, n)
    return np.where(rng.random(n) < 0.7, preferred, uniform).astype(np.float64)


def gen_mixed_clinical(
    n: int,
    spec: Optional[ClinicalSpec] = None,
    seed: int = 0,
) -> Tuple[Dataset, np.ndarray]:
    """
    Latent-group mixture over mixed-type columns

    Column c of a row in group g is driven by the shift (g + c) mod n_groups:
    continuous columns have mean separation * shift and unit variance,
    binary columns are 1 with probability 0.2 or 0.8 by the parity of the
    shift, ordinal columns are a rounded noisy ramp over the levels, and
    categorical columns prefer category shift mod levels.

    Returns:
        Tuple of (dataset with the MNAR rules applied, group label per row)
    """
    spec = spec or default_clinical_spec()
    spec.validate()
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")

    rng = np.random.default_rng(seed)
    labels = rng.integers(0, spec.n_groups, n)
    values = np.empty((n, len(spec.columns)))
    for c, column in enumerate(spec.columns):
        shift = (labels + c) % spec.n_groups
        values[:, c] = _column_values(column.kind, shift, spec, rng)

    schema = Schema(spec.columns)
    mask = np.zeros_like(values, dtype=bool)
    for rule in spec.mnar_rules:
        c = schema.index(rule.column)
        cut = np.quantile(values[:, c], rule.quantile)
        mask[:, c] |= values[:, c] > cut if rule.direction == "above" else values[:, c] < cut
    return Dataset(schema, values, mask), labels
