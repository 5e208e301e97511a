from __future__ import annotations

from math import comb

import numpy as np

from .errors import DimensionMismatchError
from .models import (
    CentroidMatrix,
    DataMatrix,
    HardPartition,
    MembershipMatrix,
    squared_distances,
    validate_dims,
)


def within_ss(X: DataMatrix, U: MembershipMatrix, G: CentroidMatrix) -> float:
    """W(P): memberships enter with exponent 1 whatever fuzzifier produced them."""
    validate_dims(X, G, U)
    return float(np.sum(U.mu * squared_distances(X, G)))


def crisp(U: MembershipMatrix) -> HardPartition:
    # np.argmax returns the first maximum, i.e. the lowest cluster index on ties
    return HardPartition(labels=np.argmax(U.mu, axis=1), n_clusters=U.K)


def crisp_within_ss(X: DataMatrix, partition: HardPartition) -> float:
    if X.n != partition.n:
        raise DimensionMismatchError("n", X.n, partition.n, "data vs partition")
    total = 0.0
    for k in range(partition.n_clusters):
        members = X.values[partition.labels == k]
        if members.shape[0] == 0:
            continue
        centred = members - members.mean(axis=0)
        total += float(np.sum(centred * centred))
    return total


def partition_entropy(U: MembershipMatrix) -> np.ndarray:
    mu = U.mu
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mu > 0.0, -mu * np.log(mu), 0.0)
    return terms.sum(axis=1)


def contingency_table(a: HardPartition, b: HardPartition) -> np.ndarray:
    if a.n != b.n:
        raise DimensionMismatchError("n", a.n, b.n, "partition lengths")
    table = np.zeros((a.n_clusters, b.n_clusters), dtype=np.int64)
    np.add.at(table, (a.labels, b.labels), 1)
    return table


def _pair_counts(a: HardPartition, b: HardPartition) -> tuple[int, int, int, int]:
    table = contingency_table(a, b)
    index = sum(comb(int(c), 2) for c in table.ravel())
    rows = sum(comb(int(c), 2) for c in table.sum(axis=1))
    cols = sum(comb(int(c), 2) for c in table.sum(axis=0))
    return index, rows, cols, comb(a.n, 2)


def rand_index(a: HardPartition, b: HardPartition) -> float:
    index, rows, cols, pairs = _pair_counts(a, b)
    if pairs == 0:
        return 1.0
    agreements = pairs + 2 * index - rows - cols
    return agreements / pairs


def adjusted_rand_index(a: HardPartition, b: HardPartition) -> float:
    """Hubert-Arabie ARI from exact integer pair counts.

    ARI = 2 (I*N - A*B) / ((A + B) * N - 2*A*B) with I the within-cell pairs,
    A/B the within-cluster pairs of each partition and N the total pair count.
    When the denominator vanishes (all singletons or one cluster on both
    sides) the value is 1 for equal partitions and 0 otherwise.
    """
    index, rows, cols, pairs = _pair_counts(a, b)
    numerator = 2 * (index * pairs - rows * cols)
    denominator = (rows + cols) * pairs - 2 * rows * cols
    if denominator == 0:
        return 1.0 if _same_partition(a, b) else 0.0
    return numerator / denominator


def _same_partition(a: HardPartition, b: HardPartition) -> bool:
    table = contingency_table(a, b)
    nonzero = table > 0
    return bool(np.all(nonzero.sum(axis=1) <= 1) and np.all(nonzero.sum(axis=0) <= 1))
