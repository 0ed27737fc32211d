"""Edge-recovery rates, matrix errors and replicate-averaged ROC curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import ConfigurationError

__all__ = ["MetricsRecord", "compare_edges", "matrix_errors", "roc_curve", "roc_auc"]


@dataclass(frozen=True)
class MetricsRecord:
    estimator: str
    seed: int
    lam: float
    tpr: float
    fpr: float
    mse: float = float("nan")
    supnorm: float = float("nan")
    lambda_index: int = 0


def _pairs(edges):
    pairs = getattr(edges, "pairs", edges)
    return {(min(i, j), max(i, j)) for i, j in pairs}


def compare_edges(est, truth, p: int | None = None) -> tuple[float, float]:
    """True and false positive rates of ``est`` against ``truth``.

    The edge universe is the ``p(p-1)/2`` unordered pairs. ``p`` is taken from
    the edge sets when they carry it.
    """
    if p is None:
        p = getattr(truth, "p", None) or getattr(est, "p", None)
    if p is None:
        raise ConfigurationError("p is required for plain pair collections")
    for e in (est, truth):
        if getattr(e, "p", p) != p:
            raise ConfigurationError("edge sets refer to different dimensions")
    e_hat, e_true = _pairs(est), _pairs(truth)
    universe = p * (p - 1) // 2
    n_true = len(e_true)
    if n_true == 0 or n_true == universe:
        raise ConfigurationError("true edge set must be neither empty nor complete")
    tp = len(e_hat & e_true)
    fp = len(e_hat - e_true)
    return tp / n_true, fp / (universe - n_true)


def matrix_errors(omega_hat, omega, sigma_hat, sigma) -> tuple[float, float]:
    """``(||Omega_hat - Omega||_F / p, max_ij |Sigma_hat - Sigma|)``."""
    omega_hat, omega = np.asarray(omega_hat, float), np.asarray(omega, float)
    sigma_hat, sigma = np.asarray(sigma_hat, float), np.asarray(sigma, float)
    if omega_hat.shape != omega.shape or sigma_hat.shape != sigma.shape:
        raise ConfigurationError("matrices are not conformable")
    mse = float(np.linalg.norm(omega_hat - omega, "fro") / omega.shape[0])
    supnorm = float(np.max(np.abs(sigma_hat - sigma), initial=0.0))
    return mse, supnorm


def roc_curve(records) -> list[tuple[float, float]]:
    """Average (FPR, TPR) per grid position over replicates.

    Records are grouped by ``lambda_index``; every replicate (seed) must cover
    the same set of grid positions. Points come back in grid order, which is
    decreasing penalty.
    """
    by_seed: dict[int, dict[int, MetricsRecord]] = {}
    for r in records:
        by_seed.setdefault(r.seed, {})[r.lambda_index] = r
    if not by_seed:
        raise ConfigurationError("no records to average")
    grids = {tuple(sorted(v)) for v in by_seed.values()}
    if len(grids) != 1:
        raise ConfigurationError("replicates were evaluated on different grids")
    (grid,) = grids
    points = []
    for k in grid:
        fprs = [by_seed[s][k].fpr for s in sorted(by_seed)]
        tprs = [by_seed[s][k].tpr for s in sorted(by_seed)]
        points.append((float(np.mean(fprs)), float(np.mean(tprs))))
    return points


def roc_auc(points) -> float:
    """Trapezoidal area under ROC points, anchored at (0, 0) and (1, 1)."""
    pts = sorted((float(f), float(t)) for f, t in points)
    pts = [(0.0, 0.0)] + pts + [(1.0, 1.0)]
    fpr = np.array([p[0] for p in pts])
    tpr = np.array([p[1] for p in pts])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
