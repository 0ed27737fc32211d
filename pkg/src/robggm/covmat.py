"""Full covariance estimates from univariate and pairwise pieces, plus the
eigenvalue-clipping projection onto ``{S : S >= delta I}``."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._base import ConfigurationError, DegenerateScaleError
from .paircorr import PgdConfig, gamma_corr_matrix, gk_cov_matrix, rank_corr_matrix, standardize
from .unirobust import GammaConfig, gamma_univariate_fit, median_mad, qn_scale_rows

__all__ = [
    "COV_METHODS",
    "CovEstimate",
    "assemble_cov",
    "psd_project",
    "write_matrix_csv",
    "read_matrix_csv",
]

COV_METHODS = ("gamma", "kendall", "spearman", "gauss_rank", "gk_qn", "sample")


@dataclass(frozen=True)
class CovEstimate:
    matrix: np.ndarray
    method: str
    projected: bool = False
    min_eigenvalue: float = float("nan")
    gamma: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError("covariance estimate must be square")
        if not np.array_equal(m, m.T):
            raise ConfigurationError("covariance estimate must be exactly symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if np.isnan(self.min_eigenvalue):
            object.__setattr__(self, "min_eigenvalue", float(np.linalg.eigvalsh(m)[0]))

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


def _column_mad(x):
    out = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        try:
            out[j] = median_mad(x[:, j])[1]
        except DegenerateScaleError:
            raise DegenerateScaleError(f"column {j} has zero MAD") from None
    return out


def _gamma_cov(x, gamma_cfg, pgd):
    fits = []
    for j in range(x.shape[1]):
        try:
            fits.append(gamma_univariate_fit(x[:, j], gamma_cfg))
        except DegenerateScaleError as exc:
            raise DegenerateScaleError(f"column {j}: {exc}") from None
    z = standardize(x, fits)
    corr = gamma_corr_matrix(z, pgd)
    sd = np.sqrt([f.sigma2 for f in fits])
    cov = corr * np.outer(sd, sd)
    np.fill_diagonal(cov, [f.sigma2 for f in fits])
    return cov


def assemble_cov(
    data,
    method: str,
    gamma: float = 0.3,
    gamma_cfg: GammaConfig | None = None,
    pgd: PgdConfig | None = None,
) -> CovEstimate:
    """Robust covariance estimate ``sqrt(s_jj) sqrt(s_kk) rho_jk``.

    Parameters
    ----------
    data : array_like, shape (n, p)
    method : str
        ``gamma`` (gamma-divergence scale and correlation), ``kendall`` and
        ``spearman`` (MAD scale), ``gauss_rank`` (Qn scale), ``gk_qn``
        (pairwise GK covariance with Qn) or ``sample``.
    gamma : float
        Divergence parameter when ``method="gamma"``; ignored if explicit
        configs are passed.
    gamma_cfg, pgd : optional
        Full configurations for the univariate fit and the correlation PGD.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ConfigurationError("data must be an n x p matrix")
    n, p = x.shape
    if n < 3 or p < 2:
        raise ConfigurationError(f"need n >= 3 and p >= 2, got n={n}, p={p}")

    used_gamma = None
    if method == "gamma":
        gamma_cfg = gamma_cfg or GammaConfig(gamma)
        pgd = pgd or PgdConfig(gamma_cfg.gamma)
        used_gamma = pgd.gamma
        cov = _gamma_cov(x, gamma_cfg, pgd)
    elif method in ("kendall", "spearman"):
        sd = _column_mad(x)
        cov = rank_corr_matrix(x, method) * np.outer(sd, sd)
        np.fill_diagonal(cov, sd**2)
    elif method == "gauss_rank":
        sd = qn_scale_rows(x.T)
        bad = np.flatnonzero(~(sd > 0))
        if bad.size:
            raise DegenerateScaleError(f"column {int(bad[0])} has zero Qn scale")
        cov = rank_corr_matrix(x, method) * np.outer(sd, sd)
        np.fill_diagonal(cov, sd**2)
    elif method == "gk_qn":
        cov = gk_cov_matrix(x)
    elif method == "sample":
        cov = np.cov(x, rowvar=False)
        bad = np.flatnonzero(~(np.diag(cov) > 0))
        if bad.size:
            raise DegenerateScaleError(f"column {int(bad[0])} has zero variance")
    else:
        raise ConfigurationError(f"unknown covariance method {method!r}")
    cov = np.triu(cov) + np.triu(cov, 1).T
    return CovEstimate(cov, method, gamma=used_gamma)


def psd_project(est, delta: float = 0.0) -> CovEstimate:
    """Frobenius-nearest matrix with all eigenvalues at least ``delta``.

    ``est`` is a :class:`CovEstimate` or a symmetric array. An input that
    already satisfies the constraint is returned unchanged.
    """
    if delta < 0:
        raise ConfigurationError("delta must be non-negative")
    if not isinstance(est, CovEstimate):
        est = CovEstimate(np.asarray(est, dtype=float), "input")
    m = est.matrix
    vals, vecs = np.linalg.eigh(m)
    if vals[0] >= delta:
        return replace(est, projected=True, min_eigenvalue=float(vals[0]))
    clipped = np.maximum(vals, delta)
    s = (vecs * clipped) @ vecs.T
    s = (s + s.T) / 2
    return CovEstimate(s, est.method, projected=True, gamma=est.gamma)


def write_matrix_csv(path, matrix, names=None) -> None:
    """Row-major CSV with 17 significant digits and ``\\n`` line endings."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="\n") as fh:
        if names is not None:
            fh.write(",".join(names) + "\n")
        for row in matrix:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    """Inverse of :func:`write_matrix_csv`; a column-name header is skipped."""
    with open(path) as fh:
        first = fh.readline().split(",")
    try:
        [float(c) for c in first]
        skip = 0
    except ValueError:
        skip = 1
    m = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip)
    if m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"{path}: matrix is not square")
    return m
