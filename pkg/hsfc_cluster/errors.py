from __future__ import annotations

from typing import Sequence


class DataFormatError(ValueError):
    def __init__(self, message: str, *, row: int | None = None, column: int | None = None) -> None:
        location = ""
        if row is not None:
            location += f" row={row}"
        if column is not None:
            location += f" column={column}"
        super().__init__(f"{message}{location}")
        self.row = row
        self.column = column


class DimensionMismatchError(ValueError):
    def __init__(self, pair: str, left: int, right: int, context: str = "") -> None:
        suffix = f" ({context})" if context else ""
        super().__init__(f"dimension mismatch on {pair}: {left} != {right}{suffix}")
        self.pair = pair
        self.left = left
        self.right = right


class ClusteringError(RuntimeError):
    """Base class for solver failures surfaced to callers."""


class DegenerateClusterError(ClusteringError):
    def __init__(self, cluster: int) -> None:
        super().__init__(f"cluster {cluster} has zero membership mass")
        self.cluster = cluster


class RootSolveError(ClusteringError):
    def __init__(self, indices: Sequence[int], residuals: Sequence[float]) -> None:
        shown = ", ".join(f"{i}:{r:.3e}" for i, r in list(zip(indices, residuals))[:5])
        super().__init__(f"root solve did not converge for {len(indices)} object(s) [{shown}]")
        self.indices = tuple(int(i) for i in indices)
        self.residuals = tuple(float(r) for r in residuals)
