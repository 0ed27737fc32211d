"""Univariate robust location and scale.

The gamma-divergence fit is the fixed-point iteration

    mu    <- sum_i w_i x_i
    sigma <- (1 + gamma) * sum_i w_i (x_i - mu)**2

with softmax weights ``w_i ~ exp(-gamma (x_i - mu)**2 / (2 sigma))``, started
from the median with the MAD as the starting variance (``init="mad"``;
``"mad_squared"`` starts from its square instead). Cells far out in the tails get weights
that are numerically zero, which is what makes the fit robust to cell-wise
outliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._base import ConfigurationError, DegenerateScaleError

__all__ = [
    "MAD_CONSTANT",
    "QN_CONSTANT",
    "GammaConfig",
    "UnivariateFit",
    "median_mad",
    "gamma_univariate_objective",
    "gamma_univariate_fit",
    "qn_scale",
]

MAD_CONSTANT = 1.4826
QN_CONSTANT = 2.2219


@dataclass(frozen=True)
class GammaConfig:
    gamma: float
    tol: float = 1e-8
    max_iter: int = 1000
    # starting variance: "mad" uses the MAD itself, "mad_squared" uses MAD**2
    init: str = "mad"

    def __post_init__(self):
        if self.init not in ("mad", "mad_squared"):
            raise ConfigurationError(f"unknown initializer {self.init!r}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")


@dataclass(frozen=True)
class UnivariateFit:
    mu: float
    sigma2: float
    iterations: int = 0
    converged: bool = True


def median_mad(x) -> tuple[float, float]:
    """Median and normal-consistent MAD (``1.4826 * median|x - median|``).

    Raises
    ------
    DegenerateScaleError
        If the MAD is zero, i.e. at least half of the values coincide.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise ConfigurationError("median_mad needs at least one value")
    med = float(np.median(x))
    mad = MAD_CONSTANT * float(np.median(np.abs(x - med)))
    if mad == 0.0:
        raise DegenerateScaleError("MAD is zero; over half of the values are tied")
    return med, mad


def gamma_univariate_objective(x, mu: float, sigma2: float, gamma: float) -> float:
    """Gamma-divergence between the empirical law of ``x`` and N(mu, sigma2)."""
    x = np.asarray(x, dtype=float)
    a = -gamma * (x - mu) ** 2 / (2.0 * sigma2)
    return -logsumexp(a) / gamma + math.log(sigma2) / (2.0 * (1.0 + gamma))


def _weights(x, mu, sigma2, gamma):
    a = -gamma * (x - mu) ** 2 / (2.0 * sigma2)
    a -= a.max()
    w = np.exp(a)
    return w / w.sum()


def gamma_univariate_fit(x, cfg: GammaConfig) -> UnivariateFit:
    """Robust (mu, sigma2) for one variable by the gamma-divergence iteration.

    Convergence is declared when both ``|d mu| / sigma`` and
    ``|d sigma2| / sigma2`` drop below ``cfg.tol``. Hitting ``max_iter``
    returns the last iterate with ``converged=False``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise ConfigurationError("gamma_univariate_fit needs at least 2 values")
    mu, mad = median_mad(x)
    sigma2 = mad if cfg.init == "mad" else mad * mad
    gamma = cfg.gamma
    for it in range(1, cfg.max_iter + 1):
        w = _weights(x, mu, sigma2, gamma)
        # centred form keeps symmetric samples exactly at their centre
        mu_new = mu + float(w @ (x - mu))
        sigma2_new = (1.0 + gamma) * float(w @ (x - mu_new) ** 2)
        if not sigma2_new > 0:
            raise DegenerateScaleError("gamma fit collapsed to zero variance")
        scale = max(sigma2, 1e-12)
        change = max(abs(mu_new - mu) / math.sqrt(scale), abs(sigma2_new - sigma2) / scale)
        mu, sigma2 = mu_new, sigma2_new
        if change < cfg.tol:
            return UnivariateFit(mu, sigma2, it, True)
    return UnivariateFit(mu, sigma2, cfg.max_iter, False)


def _qn_order_index(n):
    h = n // 2 + 1
    return h * (h - 1) // 2


def qn_scale(x) -> float:
    """Rousseeuw-Croux Qn: ``2.2219`` times the k-th smallest pairwise gap,
    ``k = C(h, 2)`` with ``h = n // 2 + 1``.

    No finite-sample correction is applied. A constant sample gives 0.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ConfigurationError("qn_scale needs at least 2 values")
    iu, ju = np.triu_indices(n, k=1)
    gaps = np.abs(x[iu] - x[ju])
    k = _qn_order_index(n)
    return QN_CONSTANT * float(np.partition(gaps, k - 1)[k - 1])


def qn_scale_rows(m, chunk: int = 128) -> np.ndarray:
    """Qn of every row of a 2-D array (same definition as :func:`qn_scale`)."""
    m = np.asarray(m, dtype=float)
    rows, n = m.shape
    if n < 2:
        raise ConfigurationError("qn_scale needs at least 2 values")
    iu, ju = np.triu_indices(n, k=1)
    k = _qn_order_index(n)
    out = np.empty(rows)
    for start in range(0, rows, chunk):
        block = m[start : start + chunk]
        gaps = np.abs(block[:, iu] - block[:, ju])
        out[start : start + chunk] = np.partition(gaps, k - 1, axis=1)[:, k - 1]
    return QN_CONSTANT * out
