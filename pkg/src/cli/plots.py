"""Optional static plots"""
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from evaluation.report import EvalReport  # noqa: E402
from transport import FeatureImportanceReport  # noqa: E402

logger = logging.getLogger(__name__)


def plot_importance(report: FeatureImportanceReport, path, top: int = 20) -> Path:
    """Horizontal bar chart of the largest feature-importance shares"""
    entries = list(report.entries[:top])[::-1]
    fig, ax = plt.subplots(figsize=(6, 0.35 * len(entries) + 1.2))
    ax.barh([name for name, _ in entries], [share for _, share in entries], color="#3a6ea5")
    ax.set_xlabel("share of TSWD")
    ax.set_title("Feature importance")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("Wrote importance plot to %s", path)
    return Path(path)


def plot_precision(report: EvalReport, path) -> Path:
    """P@k (mean ± std over seeds) per method or ablation setting"""
    metrics = [m for m in report.metrics if m.startswith("P@")]
    ks = [int(m[2:]) for m in metrics]
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in report.methods:
        means = [report.get(method, m).mean for m in metrics]
        stds = [report.get(method, m).std for m in metrics]
        ax.errorbar(ks, means, yerr=stds, marker="o", capsize=3, label=method)
    ax.set_xscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel("precision at k")
    ax.set_title(report.experiment)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("Wrote precision plot to %s", path)
    return Path(path)
