"""Report figures rendered to files next to the delimited outputs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evalkit import EvalReport, _CATEGORY_LABELS
from .semlm import OovStats


def save_ner_report_figure(report: EvalReport, path, dpi: int = 150) -> None:
    """Grouped precision/recall/F1 bars per category plus micro and macro."""
    labels = [_CATEGORY_LABELS.get(cat, cat) for cat in report.per_category]
    labels += ["Micro avg", "Macro avg"]
    groups = list(report.per_category.values()) + [report.micro, report.macro]
    metrics = ("precision", "recall", "f1")
    x = np.arange(len(labels))
    width = 0.25
    fig, ax = plt.subplots(figsize=(1.8 * len(labels) + 2, 4))
    for k, metric in enumerate(metrics):
        ax.bar(x + (k - 1) * width, [g[metric] for g in groups], width, label=metric)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Entity recognition report (%d utterances)" % report.utterances)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_oov_figure(stats: OovStats, path, dpi: int = 150) -> None:
    """Token counts split into in-vocabulary, OOV non-entity and OOV entity."""
    in_vocab = stats.total_words - stats.oov_words
    oov_other = stats.oov_words - stats.oov_entity_words
    fig, ax = plt.subplots(figsize=(5, 4))
    bars = ax.bar(
        ["in vocab", "OOV other", "OOV entity"],
        [in_vocab, oov_other, stats.oov_entity_words],
        color=["#4c72b0", "#dd8452", "#c44e52"],
    )
    ax.bar_label(bars)
    ax.set_ylabel("tokens")
    ax.set_title("OOV rate %.1f%%, entity share of OOV %.1f%%"
                 % (100 * stats.oov_rate, 100 * stats.entity_share_of_oov))
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
