"""Sparse precision estimation: graphical lasso, node-wise lasso and edge rules.

The graphical lasso penalizes every entry of the precision matrix, the
diagonal included, so the solver's working covariance carries
``W_jj = S_jj + lambda``. Solutions are accepted only once the KKT residual
computed from the returned precision matrix and its exact inverse is below
``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._base import ConfigurationError, ConvergenceError

__all__ = [
    "PrecisionEstimate",
    "EdgeSet",
    "glasso",
    "glasso_path",
    "glasso_objective",
    "glasso_kkt_residual",
    "nodewise_lasso",
    "nodewise_kkt_residual",
    "edges_from_precision",
    "edges_from_nodewise",
]

DEFAULT_TOL = 1e-4
MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class PrecisionEstimate:
    omega: np.ndarray
    lam: float
    objective: float
    kkt_residual: float
    iterations: int
    # solver working covariance, the inverse of omega at convergence
    covariance: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True)
class EdgeSet:
    """Undirected edges as 0-based pairs ``(i, j)`` with ``i < j``."""

    p: int
    pairs: frozenset

    def __post_init__(self):
        pairs = frozenset((int(min(i, j)), int(max(i, j))) for i, j in self.pairs)
        for i, j in pairs:
            if i == j or i < 0 or j >= self.p:
                raise ConfigurationError(f"invalid edge ({i}, {j}) for p={self.p}")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __contains__(self, pair):
        i, j = pair
        return (min(i, j), max(i, j)) in self.pairs

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.pairs:
            adj[i, j] = adj[j, i] = True
        return adj


def _as_matrix(S):
    m = getattr(S, "matrix", S)
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError("covariance input must be a square matrix")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12):
        raise ConfigurationError("covariance input must be symmetric")
    return (m + m.T) / 2


@njit(cache=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _lasso_cd(Q, b, lam, beta, tol, max_sweeps):
    """Coordinate descent for 0.5 b'Qb - b'x + lam |x|_1, in place on beta."""
    m = b.size
    r = Q @ beta
    for sweep in range(max_sweeps):
        delta = 0.0
        for i in range(m):
            qii = Q[i, i]
            old = beta[i]
            if qii <= 0.0:
                new = 0.0
            else:
                new = _soft(b[i] - (r[i] - qii * old), lam) / qii
            if new != old:
                diff = new - old
                beta[i] = new
                for k in range(m):
                    r[k] += diff * Q[k, i]
                if abs(diff) > delta:
                    delta = abs(diff)
        if delta < tol:
            return sweep + 1
    return -1


@njit(cache=True)
def _glasso_sweeps(S, lam, W, B, inner_tol, outer_tol, max_sweeps):
    """Block coordinate descent on the working covariance W.

    Column j of B holds the lasso coefficients for variable j (B[j, j] = 0).
    Returns the number of sweeps, or -1 when max_sweeps is exhausted.
    """
    p = S.shape[0]
    r = np.empty(p)
    for sweep in range(max_sweeps):
        w_change = 0.0
        for j in range(p):
            for i in range(p):
                acc = 0.0
                if i != j:
                    for k in range(p):
                        if k != j:
                            acc += W[i, k] * B[k, j]
                r[i] = acc
            for _ in range(max_sweeps):
                delta = 0.0
                for i in range(p):
                    if i == j:
                        continue
                    qii = W[i, i]
                    old = B[i, j]
                    new = _soft(S[i, j] - (r[i] - qii * old), lam) / qii
                    if new != old:
                        diff = new - old
                        B[i, j] = new
                        for k in range(p):
                            if k != j:
                                r[k] += diff * W[k, i]
                        if abs(diff) > delta:
                            delta = abs(diff)
                if delta < inner_tol:
                    break
            for i in range(p):
                if i != j:
                    d = abs(r[i] - W[i, j])
                    if d > w_change:
                        w_change = d
                    W[i, j] = r[i]
                    W[j, i] = r[i]
        if w_change < outer_tol:
            return sweep + 1
    return -1


def _precision_from_blocks(W, B):
    p = W.shape[0]
    omega = np.empty((p, p))
    for j in range(p):
        col = B[:, j]
        denom = W[j, j] - W[:, j] @ col
        ojj = 1.0 / denom
        omega[:, j] = -col * ojj
        omega[j, j] = ojj
    return (omega + omega.T) / 2


def glasso_objective(S, omega, lam) -> float:
    """``tr(S Omega) - log det Omega + lam * sum |Omega_ij|`` (inf if not PD)."""
    S = np.asarray(getattr(S, "matrix", S), dtype=float)
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return float("inf")
    return float(np.sum(S * omega) - logdet + lam * np.abs(omega).sum())


def glasso_kkt_residual(S, omega, lam) -> float:
    """Max violation of the graphical lasso optimality conditions."""
    S = np.asarray(getattr(S, "matrix", S), dtype=float)
    g = S - np.linalg.inv(omega)
    active = omega != 0
    res = np.where(active, np.abs(g + lam * np.sign(omega)), np.maximum(np.abs(g) - lam, 0.0))
    return float(res.max())


def glasso(S, lam: float, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS,
           warm_start: PrecisionEstimate | None = None) -> PrecisionEstimate:
    """Graphical lasso with an l1 penalty on all entries of the precision.

    Parameters
    ----------
    S : CovEstimate or array_like
        Symmetric positive semidefinite covariance estimate.
    lam : float
        Penalty level, positive.
    tol : float
        Bound on the KKT residual of the returned solution.
    max_sweeps : int
        Cap on block coordinate sweeps.
    warm_start : PrecisionEstimate, optional
        Solution at a nearby (usually larger) penalty to start from.

    Raises
    ------
    ConvergenceError
        Carrying the best iterate if the KKT residual does not reach ``tol``.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    S = _as_matrix(S)
    p = S.shape[0]
    scale = float(np.mean(np.diag(S))) + lam
    # W = S + lam I is dual feasible and PD; B = 0 is the primal start
    # diag(1 / (S_jj + lam)). Warm starts reuse only the regression coefficients.
    W = S + lam * np.eye(p)
    B = np.zeros((p, p))
    if warm_start is not None and warm_start.p == p:
        omega0 = warm_start.omega
        B = -omega0 / np.diag(omega0)[None, :]
        np.fill_diagonal(B, 0.0)

    inner, outer = 1e-9 * scale, 1e-8 * scale
    total = 0
    best = None
    while True:
        sweeps = _glasso_sweeps(S, lam, W, B, inner, outer, max_sweeps - total)
        total += max_sweeps - total if sweeps < 0 else sweeps
        omega = _precision_from_blocks(W, B)
        residual = glasso_kkt_residual(S, omega, lam)
        est = PrecisionEstimate(omega, lam, glasso_objective(S, omega, lam), residual,
                                total, W.copy())
        if best is None or residual < best.kkt_residual:
            best = est
        if residual <= tol:
            return est
        if not np.isfinite(residual) or sweeps < 0 or total >= max_sweeps or outer < 1e-15 * scale:
            raise ConvergenceError(
                f"glasso did not reach KKT residual {tol} (got {best.kkt_residual:.3g})",
                best=best, residual=best.kkt_residual,
            )
        inner, outer = inner * 1e-2, outer * 1e-2


def glasso_path(S, lambdas, tol: float = DEFAULT_TOL) -> list[PrecisionEstimate]:
    """Glasso along a penalty grid, warm-starting from the previous solution."""
    out = []
    prev = None
    for lam in lambdas:
        prev = glasso(S, float(lam), tol=tol, warm_start=prev)
        out.append(prev)
    return out


def nodewise_kkt_residual(S, B, lam) -> float:
    S = _as_matrix(S)
    p = S.shape[0]
    worst = 0.0
    for j in range(p):
        idx = np.r_[0:j, j + 1 : p]
        beta = B[j, idx]
        g = S[np.ix_(idx, idx)] @ beta - S[idx, j]
        res = np.where(beta != 0, np.abs(g + lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
        if res.size:
            worst = max(worst, float(res.max()))
    return worst


def nodewise_lasso(S, lam: float, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS,
                   warm_start: np.ndarray | None = None) -> np.ndarray:
    """Node-wise l1 regressions on a covariance estimate.

    Returns a p x p array whose row ``j`` holds the coefficients of variable
    ``j`` on all others (the diagonal is zero): row ``j`` minimizes
    ``0.5 b' S_{-j,-j} b - S_{j,-j} b + lam |b|_1``.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    S = _as_matrix(S)
    p = S.shape[0]
    B = np.zeros((p, p)) if warm_start is None else np.array(warm_start, dtype=float)
    scale = float(np.mean(np.diag(S)))
    inner = 1e-10 * scale
    for j in range(p):
        idx = np.r_[0:j, j + 1 : p]
        Q = np.ascontiguousarray(S[np.ix_(idx, idx)])
        b = np.ascontiguousarray(S[idx, j])
        beta = np.ascontiguousarray(B[j, idx])
        # a sweep cap is not fatal by itself; the KKT check below decides
        _lasso_cd(Q, b, lam, beta, inner, max_sweeps)
        B[j, idx] = beta
    residual = nodewise_kkt_residual(S, B, lam)
    if residual > tol:
        raise ConvergenceError(f"node-wise lasso KKT residual {residual:.3g} exceeds {tol}",
                               best=B, residual=residual)
    return B


def edges_from_precision(omega, zero_tol: float = 1e-8) -> EdgeSet:
    omega = np.asarray(getattr(omega, "omega", omega), dtype=float)
    p = omega.shape[0]
    rows, cols = np.nonzero(np.triu(np.abs(omega) > zero_tol, k=1))
    return EdgeSet(p, frozenset(zip(rows.tolist(), cols.tolist())))


def edges_from_nodewise(B, rule: str = "or", zero_tol: float = 1e-8) -> EdgeSet:
    """Combine node-wise supports with the ``and`` or ``or`` rule."""
    nz = np.abs(np.asarray(B, dtype=float)) > zero_tol
    np.fill_diagonal(nz, False)
    if rule == "and":
        adj = nz & nz.T
    elif rule == "or":
        adj = nz | nz.T
    else:
        raise ConfigurationError(f"unknown edge rule {rule!r}")
    rows, cols = np.nonzero(np.triu(adj, k=1))
    return EdgeSet(nz.shape[0], frozenset(zip(rows.tolist(), cols.tolist())))
