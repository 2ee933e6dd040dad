"""Distance, affinity and diffusion matrices"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np

from datamodel import ConfigError, DataError


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Dense symmetric non-negative matrix with zero diagonal"""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError(f"distance matrix must be square, got {values.shape}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DataError("distance matrix entries must be finite and non-negative")
        if not np.allclose(values, values.T, rtol=1e-9, atol=1e-12):
            raise DataError("distance matrix is not symmetric")
        if np.any(np.abs(np.diag(values)) > 1e-12):
            raise DataError("distance matrix has a nonzero diagonal")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def restrict(self, rows) -> "DistanceMatrix":
        rows = np.asarray(rows)
        return DistanceMatrix(self.values[np.ix_(rows, rows)])


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Symmetric kernel matrix in (0, 1] with unit diagonal"""

    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class DiffusionOperator:
    """Row-stochastic P = D^-1 K, keeping the degree vector D"""

    values: np.ndarray
    degrees: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.degrees is not None:
            object.__setattr__(self, "degrees", _frozen(self.degrees))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Fixed:
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("bandwidth epsilon must be positive")

    def __str__(self) -> str:
        return repr(float(self.epsilon))


@dataclass(frozen=True)
class AdaptiveKnn:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("adaptive bandwidth k must be >= 1")

    def __str__(self) -> str:
        return f"knn:{self.k}"


Bandwidth = Union[Fixed, AdaptiveKnn]


def parse_bandwidth(text) -> Bandwidth:
    """`knn` / `knn:<k>` for the adaptive rule, or a positive number for a fixed epsilon"""
    if isinstance(text, (Fixed, AdaptiveKnn)):
        return text
    text = str(text).strip().lower()
    if text.startswith("knn"):
        _, _, k = text.partition(":")
        try:
            return AdaptiveKnn(int(k) if k else 5)
        except ValueError:
            raise ConfigError(f"malformed bandwidth '{text}'")
    try:
        return Fixed(float(text))
    except ValueError:
        raise ConfigError(f"malformed bandwidth '{text}' (use a number or knn:<k>)")


KERNELS: Dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "gaussian": lambda d, eps: np.exp(-(d ** 2) / eps),
    "laplacian": lambda d, eps: np.exp(-d / np.sqrt(eps)),
}


def adaptive_epsilon(dm: DistanceMatrix, k: int) -> float:
    """Squared median over rows of the k-th smallest nonzero distance"""
    kth = []
    for i in range(dm.n):
        row = np.delete(dm.values[i], i)
        nonzero = np.sort(row[row > 0])
        if nonzero.size:
            kth.append(nonzero[min(k, nonzero.size) - 1])
    if not kth:
        raise DataError("adaptive bandwidth needs at least one nonzero distance")
    return float(np.median(kth)) ** 2


def affinity(dm: DistanceMatrix, bandwidth: Bandwidth = AdaptiveKnn(), kernel: str = "gaussian") -> AffinityMatrix:
    """
    Kernel affinities K(i, j) = exp(-D(i, j)^2 / epsilon)

    Args:
        dm: Distance matrix
        bandwidth: Fixed(epsilon) or AdaptiveKnn(k)
        kernel: Name in KERNELS

    Returns:
        AffinityMatrix
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel '{kernel}'")
    bandwidth = parse_bandwidth(bandwidth)
    if isinstance(bandwidth, AdaptiveKnn):
        epsilon = adaptive_epsilon(dm, bandwidth.k)
    else:
        epsilon = float(bandwidth.epsilon)
    values = KERNELS[kernel](dm.values, epsilon)
    np.fill_diagonal(values, 1.0)
    return AffinityMatrix(values, epsilon)


def diffusion(k: AffinityMatrix) -> DiffusionOperator:
    """Row-normalize an affinity matrix into a Markov transition matrix"""
    degrees = k.values.sum(axis=1)
    if np.any(degrees <= 0):
        raise DataError("affinity matrix has a zero row")
    return DiffusionOperator(k.values / degrees[:, None], degrees)
