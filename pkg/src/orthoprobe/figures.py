"""Figure rendering for report outputs.

Every figure goes next to a CSV/JSON twin carrying the same numbers, so
plots stay a convenience, never the only record.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _atomic_savefig(fig, path, dpi=150):
    tmp = f"{path}.tmp{os.getpid()}"
    fig.savefig(tmp, dpi=dpi, bbox_inches="tight", format=os.path.splitext(path)[1][1:])
    os.replace(tmp, path)
    plt.close(fig)


def heatmap(values, row_labels, col_labels, path, title="", fmt="{:.3f}", cmap="RdYlGn"):
    """Annotated heatmap; None/NaN cells render as 'n/a'."""
    arr = np.array(
        [[np.nan if v is None else float(v) for v in row] for row in values], dtype=float
    )
    h = max(2.0, 0.5 * arr.shape[0] + 1.2)
    w = max(3.0, 0.9 * arr.shape[1] + 1.5)
    fig, ax = plt.subplots(figsize=(w, h))
    masked = np.ma.masked_invalid(arr)
    im = ax.imshow(masked, cmap=cmap, aspect="auto")
    ax.set_xticks(range(arr.shape[1]), labels=col_labels, rotation=45, ha="right")
    ax.set_yticks(range(arr.shape[0]), labels=row_labels)
    for i in range(arr.shape[0]):
        for j in range(arr.shape[1]):
            text = "n/a" if np.isnan(arr[i, j]) else fmt.format(arr[i, j])
            ax.text(j, i, text, ha="center", va="center", fontsize=8)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _atomic_savefig(fig, path)


def loss_curves(records, path, title="training"):
    """Train/dev loss and learning rate per epoch from a training log."""
    epochs = [r.epoch for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r.train_loss for r in records], label="train", marker="o", ms=3)
    ax.plot(epochs, [r.dev_loss for r in records], label="dev", marker="s", ms=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend(loc="upper right")
    ax2 = ax.twinx()
    ax2.plot(epochs, [r.lr for r in records], color="gray", ls="--", alpha=0.6)
    ax2.set_ylabel("learning rate", color="gray")
    _atomic_savefig(fig, path)


def fewshot_curves(rows, path, metric="uas", title=""):
    """Attachment score vs few-shot size, one line per target language.

    ``rows`` are dicts with language, fewshot_size, and the metric.
    """
    by_lang = {}
    for row in rows:
        if row.get(metric) is None:
            continue
        by_lang.setdefault(row["language"], []).append(
            (row.get("fewshot_size") or 0, row[metric])
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for lang, pts in sorted(by_lang.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=lang)
    ax.set_xlabel("target-language training sentences")
    ax.set_ylabel(metric.upper())
    ax.set_xscale("symlog")
    if title:
        ax.set_title(title)
    if by_lang:
        ax.legend()
    _atomic_savefig(fig, path)
