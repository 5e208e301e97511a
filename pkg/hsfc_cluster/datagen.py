from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .models import DataMatrix, HardPartition

logger = logging.getLogger(__name__)

DEFAULT_P = 2
DEFAULT_SEPARATION = 10.0
WIDE_SD = 3.0

# code -> (n, K, equal_card, equal_sd)
TABLE_DESIGNS: dict[str, tuple[int, int, bool, bool]] = {
    "T1": (525, 3, True, True),
    "T2": (525, 7, True, True),
    "T3": (105, 3, True, True),
    "T4": (105, 7, True, True),
    "T5": (525, 3, True, False),
    "T6": (525, 7, True, False),
    "T7": (105, 3, True, False),
    "T8": (105, 7, True, False),
    "T9": (525, 3, False, True),
    "T10": (525, 7, False, True),
    "T11": (105, 3, False, True),
    "T12": (105, 7, False, True),
    "T13": (525, 3, False, False),
    "T14": (525, 7, False, False),
    "T15": (105, 3, False, False),
    "T16": (105, 7, False, False),
}


@dataclass(frozen=True)
class TableSpec:
    n: int
    K: int
    equal_card: bool
    equal_sd: bool
    p: int = DEFAULT_P
    separation: float = DEFAULT_SEPARATION
    seed: int = 0
    code: str = ""

    def __post_init__(self) -> None:
        if int(self.K) < 2:
            raise ValueError(f"TableSpec.K must be >= 2, got {self.K}")
        if int(self.p) < 1:
            raise ValueError(f"TableSpec.p must be >= 1, got {self.p}")
        if not float(self.separation) > 0.0:
            raise ValueError(f"TableSpec.separation must be > 0, got {self.separation}")
        minimum = self.K if self.equal_card else 2 * (self.K - 1)
        if int(self.n) < minimum:
            raise ValueError(f"TableSpec.n={self.n} too small for K={self.K} non-empty clusters")

    @property
    def label(self) -> str:
        return self.code or f"n{self.n}_k{self.K}"


def spec_from_code(
    code: str, *, p: int = DEFAULT_P, separation: float = DEFAULT_SEPARATION, seed: int = 0
) -> TableSpec:
    key = str(code).strip().upper()
    if key not in TABLE_DESIGNS:
        raise ValueError(f"unknown table code: {code!r} (expected T1..T16)")
    n, K, equal_card, equal_sd = TABLE_DESIGNS[key]
    return TableSpec(
        n=n,
        K=K,
        equal_card=equal_card,
        equal_sd=equal_sd,
        p=p,
        separation=separation,
        seed=seed,
        code=key,
    )


def with_seed(spec: TableSpec, seed: int) -> TableSpec:
    return replace(spec, seed=seed)


def cardinalities(n: int, K: int, equal_card: bool) -> list[int]:
    if equal_card:
        base, extra = divmod(n, K)
        return [base + (1 if k < extra else 0) for k in range(K)]
    large = math.floor(n / 2 + 0.5)
    base, extra = divmod(n - large, K - 1)
    return [large] + [base + (1 if k < extra else 0) for k in range(K - 1)]


def cluster_centers(K: int, p: int, separation: float) -> np.ndarray:
    """Vertices of a regular K-gon with side ``separation`` (a line when p == 1)."""
    centers = np.zeros((K, p))
    if p == 1:
        centers[:, 0] = separation * (np.arange(K) - (K - 1) / 2.0)
        return centers
    radius = separation / (2.0 * math.sin(math.pi / K))
    angles = 2.0 * math.pi * np.arange(K) / K
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller from the PCG64 uniform stream, so a seed gives the same draws everywhere."""
    half = (size + 1) // 2
    u1 = 1.0 - rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:size]


def cluster_sds(K: int, equal_sd: bool) -> list[float]:
    return [1.0 if equal_sd or k > 0 else WIDE_SD for k in range(K)]


def generate(spec: TableSpec) -> tuple[DataMatrix, HardPartition]:
    sizes = cardinalities(spec.n, spec.K, spec.equal_card)
    centers = cluster_centers(spec.K, spec.p, spec.separation)
    sds = np.repeat(cluster_sds(spec.K, spec.equal_sd), sizes)
    labels = np.repeat(np.arange(spec.K), sizes)

    rng = np.random.default_rng(spec.seed)
    noise = standard_normals(rng, spec.n * spec.p).reshape(spec.n, spec.p)
    values = centers[labels] + sds[:, None] * noise
    logger.debug(
        "table_generated code=%s n=%s K=%s p=%s seed=%s sizes=%s",
        spec.label,
        spec.n,
        spec.K,
        spec.p,
        spec.seed,
        sizes,
    )
    names = tuple(f"x{j + 1}" for j in range(spec.p))
    truth = HardPartition(labels=labels, n_clusters=spec.K)
    return DataMatrix(values=values, feature_names=names), truth
