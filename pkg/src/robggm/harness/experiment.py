"""Seeded simulation campaigns: generate, contaminate, estimate, select,
evaluate, and write the results tables."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..covmat import assemble_cov, psd_project, write_matrix_csv
from ..datagen import contaminate, generate_graph, sample_clean
from ..evalmetrics import MetricsRecord, compare_edges, matrix_errors, roc_auc, roc_curve
from ..graphest import edges_from_nodewise, edges_from_precision, glasso_path, nodewise_lasso
from ..select import cv2_select, lambda_grid, stars_select
from .config import ExperimentConfig, parse_estimator
from .csvio import fmt, write_edges

__all__ = ["METRIC_COLUMNS", "CampaignResult", "run_experiment", "run_replicate"]

log = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "replicate", "seed", "estimator", "graph_method", "selection", "lambda_index",
    "lambda", "mse", "tpr", "fpr", "supnorm", "n_edges", "status",
)
SUMMARY_STATS = ("lambda", "mse", "tpr", "fpr", "supnorm")


@dataclass
class CampaignResult:
    out: Path
    rows: list
    roc: dict = field(default_factory=dict)
    failed: bool = False
    error: str = ""

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0


def _cov_kwargs(gamma):
    return {} if gamma is None else {"gamma": gamma}


def _fit_path(cfg, sp, grid):
    """Edge sets (and precision matrices for glasso) along the grid."""
    if cfg.graph_method == "glasso":
        fits = glasso_path(sp, grid)
        return [(edges_from_precision(f), f.omega) for f in fits]
    out = []
    B = None
    for lam in grid:
        B = nodewise_lasso(sp, lam, warm_start=B)
        out.append((edges_from_nodewise(B, cfg.rule), B.copy()))
    return out


def run_replicate(cfg: ExperimentConfig, replicate: int, model=None, keep_estimates=False):
    """All estimators on one simulated data set.

    Returns ``(rows, path_records, estimates)``; ``estimates`` maps tag to
    ``(sigma_hat, selected fit, selected edges)`` when ``keep_estimates``.
    """
    if model is None:
        model = generate_graph(cfg.graph, cfg.p, cfg.seed, hub_size=cfg.hub_size)
    seed = cfg.seed + replicate
    x = contaminate(sample_clean(model, cfg.n, seed), cfg.contamination(), seed).values
    rows, path_records, estimates = [], [], {}
    for tag in sorted(cfg.estimators):
        method, gamma = parse_estimator(tag)
        kw = _cov_kwargs(gamma)
        s = assemble_cov(x, method, **kw)
        sp = psd_project(s, 0.0)
        supnorm = float(np.max(np.abs(s.matrix - model.sigma)))
        grid = lambda_grid(sp, cfg.lambda_count, cfg.lambda_ratio)
        path = _fit_path(cfg, sp, grid)
        path_rows = []
        for k, (edges, fit) in enumerate(path):
            tpr, fpr = compare_edges(edges, model.edges, cfg.p)
            mse = float("nan")
            if cfg.graph_method == "glasso":
                mse = matrix_errors(fit, model.omega, s.matrix, model.sigma)[0]
            path_rows.append({
                "replicate": replicate, "seed": seed, "estimator": tag,
                "graph_method": cfg.graph_method, "selection": cfg.selection,
                "lambda_index": k, "lambda": float(grid[k]), "mse": mse, "tpr": tpr,
                "fpr": fpr, "supnorm": supnorm, "n_edges": len(edges), "status": "ok",
            })
            path_records.append(MetricsRecord(tag, seed, float(grid[k]), tpr, fpr, mse,
                                              supnorm, lambda_index=k))
        if cfg.selection == "roc":
            rows.extend(path_rows)
            chosen = len(grid) - 1
        else:
            if cfg.selection == "cv2":
                lam, _ = cv2_select(x, method, grid, seed, symmetric=cfg.cv_symmetric, **kw)
            else:
                lam = stars_select(x, method, grid, cfg.stars_subsamples, cfg.stars_cut,
                                   seed, **kw)
            chosen = int(np.flatnonzero(grid == lam)[0])
            rows.append(path_rows[chosen])
        if keep_estimates:
            estimates[tag] = (s.matrix, path[chosen][1], path[chosen][0])
    return rows, path_records, estimates


def _worker(args):
    cfg, replicate = args
    rows, records, _ = run_replicate(cfg, replicate)
    return rows, records


def _sentinel(message):
    row = {c: "" for c in METRIC_COLUMNS}
    row.update({"replicate": -1, "estimator": "FAILED", "status": f"FAILED: {message}"})
    return row


def _write_metrics(path, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(METRIC_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for c in METRIC_COLUMNS:
                v = row[c]
                cells.append(v.replace(",", ";").replace("\n", " ") if isinstance(v, str) else fmt(v))
            fh.write(",".join(cells) + "\n")


def summarize(rows, by_lambda: bool):
    """Mean and sample SD of the metric columns per estimator (and grid index)."""
    groups = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (row["estimator"], row["lambda_index"] if by_lambda else -1)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        members = groups[key]
        rec = {"estimator": key[0], "lambda_index": key[1], "count": len(members)}
        for stat in SUMMARY_STATS:
            vals = np.array([m[stat] for m in members], dtype=float)
            rec[f"{stat}_mean"] = float(np.mean(vals))
            rec[f"{stat}_sd"] = float(np.std(vals, ddof=1)) if vals.size > 1 else float("nan")
        out.append(rec)
    return out


def _write_table(path, records, columns):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for r in records:
            fh.write(",".join(r[c] if isinstance(r[c], str) else fmt(r[c]) for c in columns) + "\n")


def _write_estimates(out, cfg, model, estimates):
    truth = out / "truth"
    truth.mkdir(exist_ok=True)
    write_matrix_csv(truth / "omega.csv", model.omega)
    write_matrix_csv(truth / "sigma.csv", model.sigma)
    write_edges(truth / "edges.txt", model.edges, cfg.p)
    for tag, (sigma_hat, fit, edges) in estimates.items():
        d = out / "estimates" / tag
        d.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(d / "sigma_hat.csv", sigma_hat)
        name = "omega_hat.csv" if cfg.graph_method == "glasso" else "beta_hat.csv"
        write_matrix_csv(d / name, fit)
        write_edges(d / "edges.txt", edges)


def run_experiment(cfg: ExperimentConfig, plots: bool = True) -> CampaignResult:
    """Run a campaign and write its outputs into ``cfg.out``.

    The graph is generated once from ``cfg.seed``; replicate ``r`` uses seed
    ``cfg.seed + r`` for its data. Writes ``metrics.csv``, ``summary.csv``,
    ``roc.csv``, ``config.json`` and the first replicate's estimates.
    On failure the completed replicates are still written, followed by a
    ``FAILED`` sentinel row, and the result carries ``failed=True``.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")

    rows, records = [], []
    failed, error = False, ""
    try:
        model = generate_graph(cfg.graph, cfg.p, cfg.seed, hub_size=cfg.hub_size)
        first_rows, first_records, estimates = run_replicate(cfg, 0, model, keep_estimates=True)
        rows.extend(first_rows)
        records.extend(first_records)
        _write_estimates(out, cfg, model, estimates)
        jobs = [(cfg, r) for r in range(1, cfg.replicates)]
        if cfg.threads > 1 and jobs:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                results = pool.map(_worker, jobs)
                for rep_rows, rep_records in results:
                    rows.extend(rep_rows)
                    records.extend(rep_records)
        else:
            for job in jobs:
                rep_rows, rep_records = _worker(job)
                rows.extend(rep_rows)
                records.extend(rep_records)
                log.info("replicate %d done", job[1])
    except Exception as exc:  # any module error ends the campaign
        failed, error = True, f"{type(exc).__name__}: {exc}"
        log.error("campaign failed: %s", error)

    rows.sort(key=lambda r: (r["replicate"], r["estimator"], r["lambda_index"]))
    if failed:
        rows.append(_sentinel(error))
    _write_metrics(out / "metrics.csv", rows)

    summary = summarize(rows, by_lambda=cfg.selection == "roc")
    columns = ["estimator", "lambda_index", "count"] + [
        f"{s}_{k}" for s in SUMMARY_STATS for k in ("mean", "sd")
    ]
    _write_table(out / "summary.csv", summary, columns)

    roc = {}
    roc_rows = []
    if not failed:
        for tag in sorted(cfg.estimators):
            pts = roc_curve([r for r in records if r.estimator == tag])
            auc = roc_auc(pts)
            roc[tag] = (pts, auc)
            for k, (f, t) in enumerate(pts):
                roc_rows.append({"estimator": tag, "lambda_index": k, "fpr": f, "tpr": t, "auc": auc})
    _write_table(out / "roc.csv", roc_rows, ["estimator", "lambda_index", "fpr", "tpr", "auc"])

    if plots and not failed:
        from .plots import emit_plots

        emit_plots(out)
    return CampaignResult(out, rows, roc, failed, error)
