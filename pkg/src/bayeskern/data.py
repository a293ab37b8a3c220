"""Shared containers: datasets, Gaussian states and predictive curves."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, EmptyDataset


def as_inputs(x, dim=None):
    """Coerce query input(s) to a 2-D ``(P, d)`` array.

    A 1-D array is read as ``P`` scalar inputs when ``dim`` is 1 (or unknown),
    and as a single point otherwise.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if dim in (None, 1) else x.reshape(1, -1)
    elif x.ndim != 2:
        raise DimensionMismatch(f"inputs must be at most 2-D, got {x.ndim}-D")
    if dim is not None and x.shape[1] != dim:
        raise DimensionMismatch(f"inputs have dimension {x.shape[1]}, expected {dim}")
    return x


@dataclass(frozen=True)
class Dataset:
    """``N`` input rows of dimension ``d`` paired with ``N`` scalar outputs."""

    X: np.ndarray
    y: np.ndarray
    input_names: tuple = field(default=())

    def __post_init__(self):
        X = as_inputs(self.X)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if X.shape[0] != y.size:
            raise DimensionMismatch(f"{X.shape[0]} input rows but {y.size} outputs")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if not self.input_names:
            names = ("x",) if X.shape[1] == 1 else tuple(f"x{i + 1}" for i in range(X.shape[1]))
            object.__setattr__(self, "input_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def variance(self):
        return np.diag(self.cov).copy()


class Predictive(NamedTuple):
    """Per-query predictive mean and variance."""

    mean: np.ndarray
    variance: np.ndarray
