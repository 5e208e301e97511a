from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .errors import DimensionMismatchError

ROW_SUM_TOLERANCE = 1e-6


def _frozen_matrix(values: Any, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64, order="C", copy=True)
    if array.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got ndim={array.ndim}")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


class MethodTag(str, Enum):
    FCM = "FCM"
    HSFC = "HSFC"


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen_matrix(self.values, "DataMatrix"))
        names = tuple(str(item) for item in self.feature_names)
        if names and len(names) != self.p:
            raise ValueError(f"feature_names has {len(names)} entries for p={self.p}")
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class CentroidMatrix:
    g: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", _frozen_matrix(self.g, "CentroidMatrix"))

    @property
    def K(self) -> int:
        return int(self.g.shape[0])

    @property
    def p(self) -> int:
        return int(self.g.shape[1])


@dataclass(frozen=True)
class MembershipMatrix:
    """Fuzzy memberships; rows are probability vectors over the K clusters."""

    mu: np.ndarray

    def __post_init__(self) -> None:
        mu = _frozen_matrix(self.mu, "MembershipMatrix")
        if np.any(mu < 0.0) or np.any(mu > 1.0):
            raise ValueError("MembershipMatrix entries must lie in [0, 1]")
        deviation = np.abs(mu.sum(axis=1) - 1.0)
        worst = int(np.argmax(deviation))
        if deviation[worst] > ROW_SUM_TOLERANCE:
            raise ValueError(
                f"MembershipMatrix row {worst} sums to {mu[worst].sum():.12g}, "
                f"outside 1 +/- {ROW_SUM_TOLERANCE}"
            )
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return int(self.mu.shape[0])

    @property
    def K(self) -> int:
        return int(self.mu.shape[1])

    def column_sums(self) -> np.ndarray:
        return self.mu.sum(axis=0)

    def column_sums_in_bounds(self) -> bool:
        sums = self.column_sums()
        return bool(np.all(sums > 0.0) and np.all(sums < self.n))


@dataclass(frozen=True)
class HardPartition:
    labels: np.ndarray
    n_clusters: int

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if labels.size < 1:
            raise ValueError("HardPartition needs at least one object")
        k = int(self.n_clusters)
        if k < 1:
            raise ValueError(f"HardPartition n_clusters must be >= 1, got {k}")
        if np.any(labels < 0) or np.any(labels >= k):
            raise ValueError(f"HardPartition labels must lie in [0, {k - 1}]")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_clusters", k)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "HardPartition":
        array = np.asarray(labels, dtype=np.int64)
        return cls(labels=array, n_clusters=int(array.max()) + 1 if array.size else 1)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def cardinalities(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)


@dataclass(frozen=True)
class ClusteringResult:
    centroids: CentroidMatrix
    memberships: MembershipMatrix
    objective: float
    objective_trace: tuple[float, ...]
    iterations: int
    seed: int
    method_tag: MethodTag
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.centroids.K != self.memberships.K:
            raise DimensionMismatchError("K", self.centroids.K, self.memberships.K, "result")
        object.__setattr__(self, "objective", float(self.objective))
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))


def validate_dims(X: DataMatrix, G: CentroidMatrix, U: MembershipMatrix) -> None:
    if X.p != G.p:
        raise DimensionMismatchError("p", X.p, G.p, "data vs centroids")
    if X.n != U.n:
        raise DimensionMismatchError("n", X.n, U.n, "data vs memberships")
    if G.K != U.K:
        raise DimensionMismatchError("K", G.K, U.K, "centroids vs memberships")


def squared_distances(X: DataMatrix, G: CentroidMatrix) -> np.ndarray:
    if X.p != G.p:
        raise DimensionMismatchError("p", X.p, G.p, "data vs centroids")
    diff = X.values[:, None, :] - G.g[None, :, :]
    return np.einsum("ikj,ikj->ik", diff, diff)
