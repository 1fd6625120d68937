"""Matplotlib renderings written next to the delimited report files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# Strip the Software chunk so identical runs yield byte-identical PNGs.
_PNG_META = {"metadata": {"Software": None}}


def save_loss_curve(log, path: str) -> None:
    """Training loss per iteration."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot([r.iteration for r in log.records], [r.loss for r in log.records], lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_PNG_META)
    plt.close(fig)


def save_accuracy_bars(report, path: str) -> None:
    """Hit rate at each requested k."""
    ks = sorted(report.accuracy)
    values = [report.accuracy[k] for k in ks]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar([f"acc@{k}" for k in ks], values, color="#4878a8")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("accuracy")
    ax.set_title("linking accuracy")
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.3f}", ha="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_PNG_META)
    plt.close(fig)


def save_loss_compare_chart(rows, path: str) -> None:
    """Grouped accuracy bars per objective; rows are (kind, final_loss, acc1, acc5)."""
    kinds = [r[0] for r in rows]
    acc1 = [r[2] for r in rows]
    acc5 = [r[3] for r in rows]
    x = range(len(kinds))
    width = 0.38
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.bar([i - width / 2 for i in x], acc1, width, label="acc@1", color="#4878a8")
    ax.bar([i + width / 2 for i in x], acc5, width, label="acc@5", color="#e1812c")
    ax.set_xticks(list(x))
    ax.set_xticklabels(kinds, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("accuracy")
    ax.set_title("objectives compared on one benchmark")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_PNG_META)
    plt.close(fig)
