"""Evaluation reports: YAML summary, CSV table and a separate timing sidecar"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from datamodel import EvaluationError

logger = logging.getLogger(__name__)

REPORT_FILE = 'eval_report.yaml'
TABLE_FILE = 'eval_table.csv'
TIMING_FILE = 'timing.yaml'


@dataclass(frozen=True)
class MetricSummary:
    method: str
    metric: str
    values: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        """Sample standard deviation over seeds (0 for a single seed)"""
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))


@dataclass(frozen=True)
class EvalReport:
    """
    Metric values per method (or ablation setting) over seeds

    `timing` holds wall-clock seconds per method and seed; it is written to
    its own file so the report and table stay reproducible byte for byte.
    """

    experiment: str
    config: Dict
    seeds: Tuple[int, ...]
    rows: Tuple[MetricSummary, ...]
    timing: Dict[str, Tuple[float, ...]] = field(default_factory=dict)

    @property
    def methods(self) -> List[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    @property
    def metrics(self) -> List[str]:
        return list(dict.fromkeys(r.metric for r in self.rows))

    def get(self, method: str, metric: str) -> MetricSummary:
        for row in self.rows:
            if row.method == method and row.metric == metric:
                return row
        raise EvaluationError(f"no result for {method} / {metric}")

    def to_dict(self) -> Dict:
        return {
            'experiment': self.experiment,
            'seeds': list(self.seeds),
            'config': self.config,
            'results': [
                {
                    'method': r.method,
                    'metric': r.metric,
                    'mean': r.mean,
                    'std': r.std,
                    'values': [float(v) for v in r.values],
                }
                for r in self.rows
            ],
        }

    def to_frame(self) -> pd.DataFrame:
        """One row per method, `<metric>_mean` and `<metric>_std` columns"""
        records = []
        for method in self.methods:
            record = {'method': method}
            for metric in self.metrics:
                summary = self.get(method, metric)
                record[f'{metric}_mean'] = summary.mean
                record[f'{metric}_std'] = summary.std
            records.append(record)
        return pd.DataFrame(records)

    def to_text(self) -> str:
        """Console table with mean ± std cells"""
        width = max(len(m) for m in self.methods) + 2
        header = "method".ljust(width) + "".join(metric.rjust(20) for metric in self.metrics)
        lines = [header, "-" * len(header)]
        for method in self.methods:
            cells = []
            for metric in self.metrics:
                summary = self.get(method, metric)
                cells.append(f"{summary.mean:.3f} ± {summary.std:.3f}".rjust(20))
            lines.append(method.ljust(width) + "".join(cells))
        return "\n".join(lines) + "\n"


def summarize(
    experiment: str,
    config: Dict,
    seeds: Sequence[int],
    results: Dict[str, List[Dict[str, float]]],
    timing: Dict[str, List[float]],
) -> EvalReport:
    """
    Build a report from per-seed metric dictionaries

    Args:
        experiment: Experiment name
        config: Resolved configuration as a mapping
        seeds: Seeds in trial order
        results: method -> one {metric: value} dict per seed
        timing: method -> seconds per seed
    """
    rows = []
    for method, per_seed in results.items():
        for metric in per_seed[0]:
            rows.append(MetricSummary(method, metric, tuple(float(r[metric]) for r in per_seed)))
    return EvalReport(
        experiment=experiment,
        config=config,
        seeds=tuple(int(s) for s in seeds),
        rows=tuple(rows),
        timing={m: tuple(float(s) for s in v) for m, v in timing.items()},
    )


def write_report(report: EvalReport, output_dir) -> List[Path]:
    """Write the YAML report, the CSV table and the timing sidecar"""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    report_path = out / REPORT_FILE
    report_path.write_text(yaml.safe_dump(report.to_dict(), sort_keys=False, default_flow_style=False))

    table_path = out / TABLE_FILE
    table_path.write_bytes(report.to_frame().to_csv(index=False, lineterminator='\n').encode('utf-8'))

    timing_path = out / TIMING_FILE
    timing = {
        method: {'mean_seconds': float(np.mean(values)), 'seconds': list(values)}
        for method, values in report.timing.items()
    }
    timing_path.write_text(yaml.safe_dump(timing, sort_keys=False, default_flow_style=False))

    logger.info("Wrote evaluation report to %s", out)
    return [report_path, table_path, timing_path]
