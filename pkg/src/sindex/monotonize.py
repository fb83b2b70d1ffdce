"""Monotonization operators for gridded functions.

Two operators: a running maximum, and the rearrangement that sorts the
values ascending on an equispaced window.  Both are idempotent and never
increase the sup-distance to a nondecreasing reference.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridFunction:
    """Function values on strictly increasing abscissae."""

    xs: np.ndarray
    vs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.vs, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or len(xs) < 2:
            raise ConfigError("grid function needs matching 1-d arrays, length >= 2")
        if not np.all(np.diff(xs) > 0):
            raise ConfigError("abscissae must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vs", vs)


def monotonize_naive(f: GridFunction) -> GridFunction:
    """Running maximum left to right; abscissae unchanged."""
    return GridFunction(f.xs, np.maximum.accumulate(f.vs))


def rearrange(f: GridFunction) -> GridFunction:
    """Sort the values ascending and reassign them to the same abscissae."""
    return GridFunction(f.xs, np.sort(f.vs))


MONOTONIZERS = {"naive": monotonize_naive, "rearrange": rearrange}


def get_monotonizer(name: str):
    try:
        return MONOTONIZERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown monotonizer {name!r}; choose from {sorted(MONOTONIZERS)}"
        ) from None
