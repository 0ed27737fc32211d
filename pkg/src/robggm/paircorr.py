"""Pairwise correlation and covariance estimators.

The gamma-divergence correlation minimizes, over ``|rho| <= R``,

    d(rho) = -(1/gamma) log sum_i exp(-gamma q_i / (2 (1 - rho**2)))
             + log(1 - rho**2) / (2 (1 + gamma)),
    q_i    = z_ij**2 + z_ik**2 - 2 rho z_ij z_ik,

by projected gradient descent with a doubling backtracking search on the
step parameter. All pairs of a matrix are run in lockstep as one batch; each
pair keeps its own iterate, step parameter and convergence flag, so the
batch gives exactly the same answer as running the pairs one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import kendalltau, rankdata

from ._base import ConfigurationError, DegenerateScaleError
from .unirobust import qn_scale, qn_scale_rows

__all__ = [
    "RANK_METHODS",
    "PgdConfig",
    "standardize",
    "gamma_corr_value_grad",
    "gamma_corr",
    "gamma_corr_matrix",
    "rank_corr",
    "rank_corr_matrix",
    "normal_scores",
    "gk_pairwise_cov",
    "gk_cov_matrix",
]

RANK_METHODS = ("kendall", "spearman", "gauss_rank")

_MAX_BACKTRACK = 200


@dataclass(frozen=True)
class PgdConfig:
    gamma: float
    R: float = 0.99
    s0: float = 0.01
    tol: float = 1e-8
    max_iter: int = 500

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.R < 1:
            raise ConfigurationError(f"R must lie in (0, 1), got {self.R}")
        if not self.s0 > 0:
            raise ConfigurationError("s0 must be positive")
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigurationError("tol must be positive and max_iter at least 1")


def standardize(data, fits) -> np.ndarray:
    """Column-wise ``(x - mu) / sqrt(sigma2)`` using one fit per column."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    fits = list(fits)
    if len(fits) != x.shape[1]:
        raise ConfigurationError("need exactly one univariate fit per column")
    mu = np.array([f.mu for f in fits], dtype=float)
    sigma2 = np.array([f.sigma2 for f in fits], dtype=float)
    bad = np.flatnonzero(~(sigma2 > 0))
    if bad.size:
        raise DegenerateScaleError(f"non-positive variance for column {int(bad[0])}")
    return (x - mu) / np.sqrt(sigma2)


def _value_grad(rho, ss, pp, gamma):
    """Objective (without the ``-log(n)/gamma`` constant) and gradient, per row.

    ``ss = z_j**2 + z_k**2`` and ``pp = z_j * z_k`` have one row per pair. The
    log-sum-exp is evaluated as ``amax + log1p(mean(expm1(a - amax)))`` so the
    value keeps full precision when gamma is tiny.
    """
    one_m = 1.0 - rho * rho
    q = ss - 2.0 * rho[:, None] * pp
    a = (-gamma / (2.0 * one_m))[:, None] * q
    amax = a.max(axis=1)
    e = np.expm1(a - amax[:, None])
    mean_e = e.mean(axis=1)
    lse = amax + np.log1p(mean_e)
    value = -lse / gamma + np.log(one_m) / (2.0 * (1.0 + gamma))
    w = (1.0 + e) / (e.shape[1] * (1.0 + mean_e))[:, None]
    term = (rho / one_m**2)[:, None] * q - pp / one_m[:, None]
    grad = np.einsum("ij,ij->i", w, term) - rho / ((1.0 + gamma) * one_m)
    return value, grad


def _pair_arrays(zj, zk):
    zj = np.asarray(zj, dtype=float)
    zk = np.asarray(zk, dtype=float)
    if zj.shape != zk.shape:
        raise ConfigurationError("paired vectors must have equal length")
    return zj * zj + zk * zk, zj * zk


def gamma_corr_value_grad(rho: float, zj, zk, gamma: float) -> tuple[float, float]:
    """Gamma-divergence correlation objective and its derivative at ``rho``."""
    if not abs(rho) < 1:
        raise ConfigurationError(f"|rho| must be < 1, got {rho}")
    ss, pp = _pair_arrays(np.atleast_1d(zj), np.atleast_1d(zk))
    value, grad = _value_grad(np.array([float(rho)]), ss[None, :], pp[None, :], gamma)
    return float(value[0] - math.log(ss.size) / gamma), float(grad[0])


def _pgd_batch(ss, pp, cfg: PgdConfig, record=False):
    m = ss.shape[0]
    gamma, R = cfg.gamma, cfg.R
    rho = np.zeros(m)
    s = np.full(m, cfg.s0)
    val, grad = _value_grad(rho, ss, pp, gamma)
    iterations = np.zeros(m, dtype=int)
    converged = np.zeros(m, dtype=bool)
    active = np.arange(m)
    steps = []
    for _ in range(cfg.max_iter):
        if active.size == 0:
            break
        r0, v0, g0 = rho[active], val[active], grad[active]
        st = s[active].copy()
        new_rho, new_val, new_grad = r0.copy(), v0.copy(), g0.copy()
        todo = np.arange(active.size)
        for _ in range(_MAX_BACKTRACK):
            cand = np.clip(r0[todo] - g0[todo] / st[todo], -R, R)
            cv, cg = _value_grad(cand, ss[active[todo]], pp[active[todo]], gamma)
            d = cand - r0[todo]
            model = v0[todo] + g0[todo] * d + 0.5 * st[todo] * d * d
            # rounding guard only; the test is the majorization condition
            ok = cv <= model + 1e-12 * (1.0 + np.abs(v0[todo]))
            acc = todo[ok]
            new_rho[acc], new_val[acc], new_grad[acc] = cand[ok], cv[ok], cg[ok]
            todo = todo[~ok]
            if todo.size == 0:
                break
            st[todo] *= 2.0
        if record:
            steps.append((active.copy(), r0.copy(), new_rho.copy(), st.copy()))
        step = np.abs(new_rho - r0)
        rho[active], val[active], grad[active] = new_rho, new_val, new_grad
        s[active] = st
        iterations[active] += 1
        done = step < cfg.tol
        converged[active[done]] = True
        active = active[~done]
    return rho, iterations, converged, val, steps


def gamma_corr(zj, zk, cfg: PgdConfig, full_output: bool = False):
    """Gamma-divergence correlation of one standardized pair.

    Parameters
    ----------
    zj, zk : array_like
        Standardized observations of the two variables.
    cfg : PgdConfig
    full_output : bool
        Also return a dict with ``iterations``, ``converged``, ``value`` and
        ``steps`` (accepted ``(rho_old, rho_new, s)`` triples).

    Returns
    -------
    rho : float
        Estimate in ``[-R, R]``. If the iteration cap is reached the last
        (and best) iterate is returned and ``converged`` is False.
    """
    ss, pp = _pair_arrays(zj, zk)
    if ss.size < 3:
        raise ConfigurationError("gamma_corr needs at least 3 observations")
    rho, iters, conv, val, steps = _pgd_batch(ss[None, :], pp[None, :], cfg, record=full_output)
    r = float(rho[0])
    if not full_output:
        return r
    info = {
        "iterations": int(iters[0]),
        "converged": bool(conv[0]),
        "value": float(val[0] - math.log(ss.size) / cfg.gamma),
        "steps": [(float(a[0]), float(b[0]), float(c[0])) for _, a, b, c in steps],
    }
    return r, info


def gamma_corr_matrix(z, cfg: PgdConfig, full_output: bool = False):
    """Gamma-divergence correlation for every column pair of ``z``.

    Returns a symmetric matrix with unit diagonal; with ``full_output`` also
    the number of pairs that hit the iteration cap.
    """
    z = np.asarray(z, dtype=float)
    n, p = z.shape
    if n < 3:
        raise ConfigurationError("gamma_corr needs at least 3 observations")
    iu, ju = np.triu_indices(p, k=1)
    corr = np.eye(p)
    failed = 0
    # batches bound the (pairs x n) temporaries
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, iu.size, chunk):
        a, b = iu[start : start + chunk], ju[start : start + chunk]
        za, zb = z[:, a].T, z[:, b].T
        rho, _, conv, _, _ = _pgd_batch(za * za + zb * zb, za * zb, cfg)
        corr[a, b] = rho
        corr[b, a] = rho
        failed += int(np.count_nonzero(~conv))
    if full_output:
        return corr, {"nonconverged_pairs": failed}
    return corr


def _check_rank_input(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ConfigurationError("rank correlation needs equal-length inputs")
    if x.size < 2:
        raise ConfigurationError("rank correlation needs at least 2 observations")
    for v in (x, y):
        if np.all(v == v[0]):
            raise DegenerateScaleError("rank correlation of a constant vector")
    return x, y


def _pair_signs(x):
    i, j = np.triu_indices(x.shape[-1], k=1)
    return np.sign(x[..., i] - x[..., j])


def normal_scores(x) -> np.ndarray:
    """Van der Waerden scores ``Phi^-1(R_i / (n + 1))`` from midranks.

    Computed on the lower half of the ranks and mirrored so that reversing
    the ranks negates the scores exactly.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    r = rankdata(x, axis=0)
    low = r <= (n + 1) / 2
    return np.where(low, ndtri(r / (n + 1)), -ndtri((n + 1 - r) / (n + 1)))


def _gauss_rank_denominator(n):
    return float(np.sum(normal_scores(np.arange(1.0, n + 1)) ** 2))


def _spearman_transform(rs):
    # 2 sin(pi/6) rounds below 1, so perfect rank agreement is passed through
    rs = np.asarray(rs, dtype=float)
    r = np.where(np.abs(rs) == 1.0, rs, 2 * np.sin(np.pi * rs / 6))
    return float(r) if r.ndim == 0 else r


def rank_corr(x, y, method: str) -> float:
    """Rank-based estimate of the Gaussian correlation.

    ``kendall`` gives ``sin(pi tau_b / 2)``, ``spearman`` gives
    ``2 sin(pi r_s / 6)`` and ``gauss_rank`` the normal-scores correlation.
    Output is clamped to ``[-1, 1]``.
    """
    x, y = _check_rank_input(x, y)
    if method == "kendall":
        # tau-b in O(n log n)
        tau = float(kendalltau(x, y).statistic)
        r = math.sin(math.pi * tau / 2)
    elif method == "spearman":
        rx, ry = rankdata(x), rankdata(y)
        rx -= rx.mean()
        ry -= ry.mean()
        rs = (rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry))
        r = _spearman_transform(rs)
    elif method == "gauss_rank":
        r = float(normal_scores(x) @ normal_scores(y)) / _gauss_rank_denominator(x.size)
    else:
        raise ConfigurationError(f"unknown rank correlation method {method!r}")
    return float(min(1.0, max(-1.0, r)))


def rank_corr_matrix(x, method: str) -> np.ndarray:
    """All pairwise :func:`rank_corr` values for the columns of ``x``."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    const = np.flatnonzero(np.all(x == x[0], axis=0))
    if const.size:
        raise DegenerateScaleError(f"column {int(const[0])} is constant")
    if method == "kendall":
        if p * n * (n - 1) // 2 > 50_000_000:
            out = np.eye(p)
            for j in range(p):
                for k in range(j + 1, p):
                    out[j, k] = out[k, j] = rank_corr(x[:, j], x[:, k], "kendall")
            return out
        signs = _pair_signs(x.T)
        gram = signs @ signs.T
        d = np.sqrt(np.diag(gram))
        r = np.sin(np.pi * (gram / np.outer(d, d)) / 2)
    elif method == "spearman":
        ranks = rankdata(x, axis=0)
        ranks -= ranks.mean(axis=0)
        gram = ranks.T @ ranks
        d = np.sqrt(np.diag(gram))
        r = _spearman_transform(gram / np.outer(d, d))
    elif method == "gauss_rank":
        scores = normal_scores(x)
        r = (scores.T @ scores) / _gauss_rank_denominator(n)
    else:
        raise ConfigurationError(f"unknown rank correlation method {method!r}")
    r = np.clip(r, -1.0, 1.0)
    r = (r + r.T) / 2
    np.fill_diagonal(r, 1.0)
    return r


def gk_pairwise_cov(xj, xk, scale=qn_scale) -> float:
    """Gnanadesikan-Kettenring covariance with a robust scale in place of the
    standard deviation:

        (s(a xj + b xk)**2 - s(a xj - b xk)**2) / (4 a b),  a = 1/s(xj), b = 1/s(xk)
    """
    xj = np.asarray(xj, dtype=float)
    xk = np.asarray(xk, dtype=float)
    if xj.shape != xk.shape:
        raise ConfigurationError("paired vectors must have equal length")
    sj, sk = scale(xj), scale(xk)
    if not (sj > 0 and sk > 0):
        raise DegenerateScaleError("zero robust scale in pairwise covariance")
    a, b = 1.0 / sj, 1.0 / sk
    plus = scale(a * xj + b * xk)
    minus = scale(a * xj - b * xk)
    return (plus * plus - minus * minus) / (4.0 * a * b)


def gk_cov_matrix(x) -> np.ndarray:
    """Qn-based GK covariance for all column pairs; diagonal is ``Qn**2``."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    scales = qn_scale_rows(x.T)
    bad = np.flatnonzero(~(scales > 0))
    if bad.size:
        raise DegenerateScaleError(f"zero Qn scale for column {int(bad[0])}")
    alpha = 1.0 / scales
    u = x * alpha
    iu, ju = np.triu_indices(p, k=1)
    cov = np.diag(scales**2)
    chunk = 256
    for start in range(0, iu.size, chunk):
        a, b = iu[start : start + chunk], ju[start : start + chunk]
        plus = qn_scale_rows((u[:, a] + u[:, b]).T)
        minus = qn_scale_rows((u[:, a] - u[:, b]).T)
        vals = (plus**2 - minus**2) / (4.0 * alpha[a] * alpha[b])
        cov[a, b] = vals
        cov[b, a] = vals
    return cov
