"""SVG figures from a results directory: sup-norm boxplots and averaged ROC
curves. The plotted numbers are always written next to the figures as CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .._base import ConfigurationError
from .csvio import fmt

__all__ = ["emit_plots"]


def _read_rows(path):
    if not path.exists():
        raise ConfigurationError(f"missing input file {path}")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _boxplot_data(metrics):
    seen = {}
    for row in metrics:
        if not row["status"].startswith("ok"):
            continue
        seen[(row["estimator"], row["replicate"])] = float(row["supnorm"])
    by_est = {}
    for (tag, _), v in sorted(seen.items()):
        by_est.setdefault(tag, []).append(v)
    return by_est


def _roc_data(roc_rows):
    curves = {}
    for row in roc_rows:
        curves.setdefault(row["estimator"], []).append(
            (int(row["lambda_index"]), float(row["fpr"]), float(row["tpr"]))
        )
    out = {}
    for tag, pts in curves.items():
        pts.sort()
        out[tag] = [(0.0, 0.0)] + [(f, t) for _, f, t in pts]
    return out


def emit_plots(results_dir) -> list[Path]:
    """Write ``supnorm_boxplot.svg`` and ``roc.svg`` plus their data CSVs.

    Raises
    ------
    ConfigurationError
        If ``metrics.csv`` or ``roc.csv`` is missing or has no data rows.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d = Path(results_dir)
    metrics = _read_rows(d / "metrics.csv")
    roc_rows = _read_rows(d / "roc.csv")
    boxes = _boxplot_data(metrics)
    if not boxes:
        raise ConfigurationError("metrics.csv has no data rows")
    curves = _roc_data(roc_rows)
    if not curves:
        raise ConfigurationError("roc.csv has no data rows")

    with open(d / "boxplot_data.csv", "w", newline="\n") as fh:
        fh.write("estimator,count,min,q1,median,q3,max\n")
        for tag, vals in boxes.items():
            q = np.percentile(vals, [0, 25, 50, 75, 100])
            fh.write(",".join([tag, str(len(vals))] + [fmt(v) for v in q]) + "\n")
    with open(d / "roc_plot_data.csv", "w", newline="\n") as fh:
        fh.write("estimator,point,fpr,tpr\n")
        for tag, pts in curves.items():
            for k, (f, t) in enumerate(pts):
                fh.write(f"{tag},{k},{fmt(f)},{fmt(t)}\n")

    written = []
    rc = {"svg.fonttype": "none", "svg.hashsalt": "robggm", "axes.unicode_minus": False}
    with matplotlib.rc_context(rc):
        fig, ax = plt.subplots(figsize=(6, 4))
        tags = list(boxes)
        ax.boxplot([boxes[t] for t in tags])
        ax.set_xticks(range(1, len(tags) + 1), tags)
        ax.set_ylabel("sup-norm error of covariance")
        fig.tight_layout()
        path = d / "supnorm_boxplot.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(5, 5))
        for tag, pts in curves.items():
            f, t = zip(*pts)
            ax.plot(f, t, marker="o", markersize=3, label=tag, gid=f"roc-curve-{tag}")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("FPR")
        ax.set_ylabel("TPR")
        ax.legend(loc="lower right")
        fig.tight_layout()
        path = d / "roc.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
