"""Ground-truth graphical models, clean Gaussian samples and cell-wise
contamination.

Graph weights follow the usual simulation recipe: a 0/1 adjacency ``A`` is
turned into ``0.3 * A + (|lambda_min| + 0.2) * I``, inverted, and rescaled to
unit variances. The precision matrix is rescaled by the same diagonal so its
support is exactly the adjacency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import ConfigurationError, DataMatrix, rng_for

__all__ = [
    "GRAPH_KINDS",
    "PrecisionModel",
    "ContaminationSpec",
    "generate_graph",
    "sample_clean",
    "contaminate",
    "contamination_mask",
]

GRAPH_KINDS = ("chain", "hub", "scale_free", "random")

EDGE_WEIGHT = 0.3
DIAGONAL_MARGIN = 0.2
HUB_GROUP_SIZE = 20


@dataclass(frozen=True)
class PrecisionModel:
    """Ground truth for one simulated graph.

    ``edges`` holds 0-based pairs ``(i, j)`` with ``i < j``.
    """

    kind: str
    omega: np.ndarray
    sigma: np.ndarray
    edges: frozenset

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj


@dataclass(frozen=True)
class ContaminationSpec:
    """Cell-wise contamination: each cell is replaced with probability ``eps``.

    ``asymmetric`` draws replacements from N(contam_mean, contam_sd**2);
    ``symmetric`` flips the sign of the mean with probability 1/2.
    """

    eps: float
    scenario: str = "asymmetric"
    contam_mean: float = 10.0
    contam_sd: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ConfigurationError(f"eps must lie in [0, 1], got {self.eps}")
        aliases = {"asym": "asymmetric", "sym": "symmetric"}
        scenario = aliases.get(self.scenario, self.scenario)
        if scenario not in ("asymmetric", "symmetric"):
            raise ConfigurationError(f"unknown contamination scenario {self.scenario!r}")
        object.__setattr__(self, "scenario", scenario)
        if self.contam_sd < 0:
            raise ConfigurationError("contam_sd must be non-negative")


def _chain(p, rng):
    adj = np.zeros((p, p), dtype=bool)
    idx = np.arange(p - 1)
    adj[idx, idx + 1] = True
    return adj


def _hub(p, rng, group_size):
    if p % group_size:
        raise ConfigurationError(
            f"hub graph needs p divisible by the group size {group_size}, got p={p}"
        )
    adj = np.zeros((p, p), dtype=bool)
    for start in range(0, p, group_size):
        adj[start, start + 1 : start + group_size] = True
    return adj


def _scale_free(p, rng):
    # Preferential-attachment tree: each new node attaches to one existing
    # node chosen with probability proportional to its degree.
    adj = np.zeros((p, p), dtype=bool)
    adj[0, 1] = True
    degree = np.zeros(p)
    degree[:2] = 1.0
    for new in range(2, p):
        prob = degree[:new] / degree[:new].sum()
        target = rng.choice(new, p=prob)
        adj[target, new] = True
        degree[target] += 1.0
        degree[new] = 1.0
    return adj


def _random(p, rng):
    prob = min(1.0, 3.0 / (p - 1))
    upper = np.triu(rng.random((p, p)) < prob, k=1)
    return upper


def generate_graph(kind: str, p: int, seed: int = 0, hub_size: int = HUB_GROUP_SIZE) -> PrecisionModel:
    """Build a ground-truth precision model of the requested topology.

    Parameters
    ----------
    kind : {"chain", "hub", "scale_free", "random"}
    p : int
        Number of variables, at least 2.
    seed : int
        Seed for the randomized topologies (scale_free, random).
    hub_size : int
        Group size for the hub graph; the first node of each group is the hub.

    Returns
    -------
    PrecisionModel
        ``sigma`` has unit diagonal and ``omega @ sigma`` is the identity;
        ``omega`` is exactly zero off the edge set.
    """
    if p < 2:
        raise ConfigurationError(f"p must be at least 2, got {p}")
    rng = rng_for("graph", seed)
    if kind == "chain":
        upper = _chain(p, rng)
    elif kind == "hub":
        upper = _hub(p, rng, hub_size)
    elif kind == "scale_free":
        upper = _scale_free(p, rng)
    elif kind == "random":
        upper = _random(p, rng)
    else:
        raise ConfigurationError(f"unknown graph kind {kind!r}")

    adj = upper | upper.T
    weights = EDGE_WEIGHT * adj.astype(float)
    lam_min = np.linalg.eigvalsh(weights)[0]
    omega_raw = weights + (abs(lam_min) + DIAGONAL_MARGIN) * np.eye(p)
    sigma_raw = np.linalg.inv(omega_raw)
    sigma_raw = (sigma_raw + sigma_raw.T) / 2
    d = np.sqrt(np.diag(sigma_raw))
    sigma = sigma_raw / np.outer(d, d)
    np.fill_diagonal(sigma, 1.0)
    omega = omega_raw * np.outer(d, d)
    omega[~adj & ~np.eye(p, dtype=bool)] = 0.0

    rows, cols = np.nonzero(np.triu(adj, k=1))
    edges = frozenset(zip(rows.tolist(), cols.tolist()))
    for arr in (omega, sigma):
        arr.setflags(write=False)
    return PrecisionModel(kind=kind, omega=omega, sigma=sigma, edges=edges)


def sample_clean(model: PrecisionModel, n: int, seed: int) -> DataMatrix:
    """Draw ``n`` rows from N_p(0, model.sigma)."""
    if n < 1:
        raise ConfigurationError(f"n must be at least 1, got {n}")
    rng = rng_for("sample", seed)
    chol = np.linalg.cholesky(model.sigma)
    z = rng.standard_normal((n, model.p))
    return DataMatrix(z @ chol.T)


def contamination_mask(shape, eps: float, seed: int) -> np.ndarray:
    """Boolean replacement indicators that :func:`contaminate` uses."""
    rng = rng_for("contaminate", seed)
    return rng.random(shape) < eps


def contaminate(clean, spec: ContaminationSpec, seed: int) -> DataMatrix:
    """Replace each cell independently with probability ``spec.eps``.

    Replacement values are drawn for every cell whether or not it is
    replaced, so the stream layout does not depend on ``eps``.
    """
    values = np.asarray(clean, dtype=float)
    rng = rng_for("contaminate", seed)
    mask = rng.random(values.shape) < spec.eps
    noise = spec.contam_sd * rng.standard_normal(values.shape)
    signs = np.where(rng.random(values.shape) < 0.5, -1.0, 1.0)
    if spec.scenario == "asymmetric":
        signs[:] = 1.0
    outliers = signs * spec.contam_mean + noise
    names = clean.names if isinstance(clean, DataMatrix) else None
    return DataMatrix(np.where(mask, outliers, values), names=names)
