"""Render evaluation figures to files with byte-stable output.

PNG metadata is pinned so repeated runs of the same evaluation produce
identical bytes, keeping figures inside the determinism contract of the
other artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .promptkit import FEATURE_NAMES

_SAVEFIG_KWARGS = {"dpi": 120, "metadata": {"Software": "redflag"}}


def roc_points(scored: list[tuple[float, int]]) -> tuple[list[float], list[float]]:
    """Staircase ROC coordinates, thresholds descending, tied scores grouped."""
    n_pos = sum(1 for _, label in scored if label == 1)
    n_neg = len(scored) - n_pos
    ordered = sorted(scored, key=lambda pair: -pair[0])
    fprs, tprs = [0.0], [0.0]
    tp = fp = 0
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j][0] == ordered[i][0]:
            tp += ordered[j][1]
            fp += 1 - ordered[j][1]
            j += 1
        fprs.append(fp / n_neg if n_neg else 0.0)
        tprs.append(tp / n_pos if n_pos else 0.0)
        i = j
    return fprs, tprs


def save_roc_curves(
    path: Path | str,
    baseline_scored: list[tuple[float, int]],
    enriched_scored: list[tuple[float, int]],
    baseline_auc: float,
    enriched_auc: float,
) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    for scored, aucval, label, style in (
        (baseline_scored, baseline_auc, "baseline", "--"),
        (enriched_scored, enriched_auc, "enriched", "-"),
    ):
        fprs, tprs = roc_points(scored)
        ax.plot(fprs, tprs, style, label=f"{label} (AUC {aucval:.3f})")
    ax.plot([0, 1], [0, 1], ":", color="grey", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("Risk score ROC, held-out windows")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def save_feature_separation(
    path: Path | str,
    quantified_rows: list[tuple[tuple[float, ...], int]],
) -> None:
    """Grouped bars of per-class means for each quantified feature."""
    means = {}
    for class_label in (0, 1):
        rows = [features for features, label in quantified_rows if label == class_label]
        means[class_label] = [
            sum(row[k] for row in rows) / len(rows) if rows else 0.0
            for k in range(len(FEATURE_NAMES))
        ]
    positions = range(len(FEATURE_NAMES))
    width = 0.38
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(
        [p - width / 2 for p in positions],
        means[0],
        width,
        label="benign windows",
        color="#7a9cc6",
    )
    ax.bar(
        [p + width / 2 for p in positions],
        means[1],
        width,
        label="flagged windows",
        color="#c65b5b",
    )
    ax.set_xticks(list(positions))
    ax.set_xticklabels(FEATURE_NAMES, rotation=25, ha="right", fontsize=8)
    ax.set_ylabel("mean quantified value")
    ax.set_title("Class separation of quantified features")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)
