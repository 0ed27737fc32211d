"""Shared exceptions, seeded random streams and the data container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigurationError",
    "DegenerateScaleError",
    "ConvergenceError",
    "DataMatrix",
    "rng_for",
]


class ConfigurationError(ValueError):
    """Invalid parameters for an operation."""


class DegenerateScaleError(ValueError):
    """A robust scale estimate came out as zero."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate and its residual are kept on the exception so callers
    can inspect or salvage them.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


# Each operation draws from its own stream: SeedSequence(seed, spawn_key=(id,)).
# Adding a new consumer therefore never shifts the draws of an existing one.
_STREAMS = {
    "graph": 1,
    "sample": 2,
    "contaminate": 3,
    "cv_split": 4,
    "stars": 5,
}


def rng_for(stream: str, seed: int) -> np.random.Generator:
    """PCG64 generator for the named stream and seed."""
    try:
        key = _STREAMS[stream]
    except KeyError:
        raise ConfigurationError(f"unknown random stream {stream!r}") from None
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,)))
    )


@dataclass(frozen=True)
class DataMatrix:
    """n x p observations, rows are samples."""

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ConfigurationError("data matrix must be two-dimensional")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("data matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != values.shape[1]:
                raise ConfigurationError("number of column names does not match p")
            object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)
