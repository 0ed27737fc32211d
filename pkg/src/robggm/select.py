"""Penalty grids and penalty selection (2-fold CV for glasso, StARS for
node-wise regression, edge-count targeting by bisection)."""

from __future__ import annotations

import numpy as np

from ._base import ConfigurationError, rng_for
from .covmat import assemble_cov, psd_project
from .graphest import (
    edges_from_nodewise,
    edges_from_precision,
    glasso,
    glasso_path,
    nodewise_lasso,
)

__all__ = [
    "lambda_grid",
    "cv_split",
    "cv_losses",
    "cv2_select",
    "stars_instability",
    "stars_select",
    "lambda_for_edges",
]

# Evaluation-fold covariances are lifted to this floor so log-likelihoods stay finite.
EVAL_DELTA = 1e-6


def lambda_grid(S, count: int = 10, ratio: float = 0.05) -> np.ndarray:
    """Log-spaced penalties from ``max_{i != j} |S_ij|`` down to ``ratio`` times it."""
    m = np.asarray(getattr(S, "matrix", S), dtype=float)
    if count < 2:
        raise ConfigurationError("grid needs at least 2 points")
    if not 0 < ratio < 1:
        raise ConfigurationError("ratio must lie in (0, 1)")
    off = np.abs(m - np.diag(np.diag(m)))
    lam_max = float(off.max())
    if lam_max == 0:
        raise ConfigurationError("all off-diagonal entries are zero")
    grid = lam_max * ratio ** (np.arange(count) / (count - 1))
    grid[0], grid[-1] = lam_max, ratio * lam_max
    return grid


def cv_split(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random row split into folds of sizes ``ceil(n/2)`` and ``floor(n/2)``."""
    perm = rng_for("cv_split", seed).permutation(n)
    half = (n + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def cv_losses(sigma_fit, sigma_eval, grid) -> np.ndarray:
    """``tr(S_eval Omega(lam)) - log det Omega(lam)`` with Omega fit on ``sigma_fit``."""
    s_eval = np.asarray(getattr(sigma_eval, "matrix", sigma_eval), dtype=float)
    losses = []
    for est in glasso_path(sigma_fit, grid):
        sign, logdet = np.linalg.slogdet(est.omega)
        if sign <= 0:
            raise ConfigurationError("fitted precision matrix is not positive definite")
        losses.append(float(np.sum(s_eval * est.omega) - logdet))
    return np.array(losses)


def _first_argmin(values):
    # grid is descending, so the first minimizer is the largest penalty
    return int(np.argmin(values))


def cv2_select(data, method: str, grid, seed: int, symmetric: bool = False, **cov_kw):
    """Two-fold cross-validated glasso penalty.

    Fits on fold 1 and scores on fold 2. With ``symmetric=True`` the loss is
    averaged over both directions.

    Returns
    -------
    lambda_star : float
        Grid value with the smallest loss; ties go to the larger penalty.
    losses : ndarray
    """
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    if n < 20:
        raise ConfigurationError(f"2-fold CV needs n >= 20, got {n}")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 1:
        return float(grid[0]), np.array([np.nan])
    f1, f2 = cv_split(n, seed)
    s1 = assemble_cov(x[f1], method, **cov_kw)
    s2 = assemble_cov(x[f2], method, **cov_kw)
    losses = cv_losses(psd_project(s1, 0.0), psd_project(s2, EVAL_DELTA), grid)
    if symmetric:
        losses = (losses + cv_losses(psd_project(s2, 0.0), psd_project(s1, EVAL_DELTA), grid)) / 2
    return float(grid[_first_argmin(losses)]), losses


def stars_instability(counts: np.ndarray, subsamples: int) -> float:
    """Mean of ``2 theta (1 - theta)`` over vertex pairs, theta = counts / subsamples."""
    p = counts.shape[0]
    iu = np.triu_indices(p, k=1)
    theta = counts[iu] / subsamples
    return float(np.mean(2 * theta * (1 - theta)))


def stars_select(data, method: str, grid, subsamples: int = 10, cut: float = 0.2,
                 seed: int = 0, full_output: bool = False, **cov_kw):
    """StARS penalty for node-wise regression with the OR rule.

    Edge selection frequencies come from ``subsamples`` draws of
    ``floor(n/2)`` rows without replacement. The instability is made
    monotone by a running maximum from the sparse end of the grid, and the
    smallest penalty whose monotone instability stays within ``cut`` is
    returned (the largest grid value if none does).
    """
    if subsamples < 2:
        raise ConfigurationError("StARS needs at least 2 subsamples")
    x = np.asarray(data, dtype=float)
    n, p = x.shape
    grid = np.sort(np.asarray(grid, dtype=float))[::-1]
    rng = rng_for("stars", seed)
    counts = np.zeros((grid.size, p, p))
    for _ in range(subsamples):
        rows = np.sort(rng.choice(n, size=n // 2, replace=False))
        s = psd_project(assemble_cov(x[rows], method, **cov_kw), 0.0)
        B = None
        for k, lam in enumerate(grid):
            B = nodewise_lasso(s, lam, warm_start=B)
            counts[k] += edges_from_nodewise(B, "or").adjacency()
    instability = np.array([stars_instability(c, subsamples) for c in counts])
    monotone = np.maximum.accumulate(instability)
    ok = np.flatnonzero(monotone <= cut)
    lam = float(grid[ok[-1]]) if ok.size else float(grid[0])
    if full_output:
        return lam, {"instability": instability, "monotone": monotone, "grid": grid}
    return lam


def lambda_for_edges(S, target: int, tol: float = 1e-4, max_iter: int = 60):
    """Bisection on the glasso penalty for an estimate with ``target`` edges.

    Returns the estimate whose edge count is closest to ``target`` among the
    bisection iterates (exact when reachable).
    """
    m = np.asarray(getattr(S, "matrix", S), dtype=float)
    p = m.shape[0]
    if not 0 <= target <= p * (p - 1) // 2:
        raise ConfigurationError(f"target edge count {target} out of range")
    hi = float(np.abs(m - np.diag(np.diag(m))).max())
    if hi == 0:
        raise ConfigurationError("all off-diagonal entries are zero")
    lo = 0.0
    best = glasso(m, hi, tol=tol)
    best_gap = abs(len(edges_from_precision(best)) - target)
    for _ in range(max_iter):
        if best_gap == 0:
            break
        mid = (lo + hi) / 2
        est = glasso(m, mid, tol=tol)
        count = len(edges_from_precision(est))
        gap = abs(count - target)
        if gap < best_gap or (gap == best_gap and mid > best.lam):
            best, best_gap = est, gap
        if count > target:
            lo = mid
        else:
            hi = mid
    return best
