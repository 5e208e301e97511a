from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClusterError, DimensionMismatchError
from .models import (
    CentroidMatrix,
    ClusteringResult,
    DataMatrix,
    MembershipMatrix,
    MethodTag,
    squared_distances,
    validate_dims,
)

logger = logging.getLogger(__name__)

COINCIDENCE_SQ_DIST = 1e-30


@dataclass(frozen=True)
class FcmConfig:
    K: int
    m: float = 2.0
    tol: float = 1e-9
    max_iter: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.K) < 2:
            raise ValueError(f"FcmConfig.K must be >= 2, got {self.K}")
        if not float(self.m) > 1.0:
            raise ValueError(f"FcmConfig.m must be > 1, got {self.m}")
        if not float(self.tol) > 0.0:
            raise ValueError(f"FcmConfig.tol must be > 0, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"FcmConfig.max_iter must be >= 1, got {self.max_iter}")


def fcm_objective(X: DataMatrix, U: MembershipMatrix, G: CentroidMatrix, m: float) -> float:
    validate_dims(X, G, U)
    return float(np.sum(U.mu**m * squared_distances(X, G)))


def fcm_update_centroids(X: DataMatrix, U: MembershipMatrix, m: float) -> CentroidMatrix:
    if X.n != U.n:
        raise DimensionMismatchError("n", X.n, U.n, "data vs memberships")
    weights = U.mu**m
    mass = weights.sum(axis=0)
    empty = np.flatnonzero(mass <= 0.0)
    if empty.size:
        raise DegenerateClusterError(int(empty[0]))
    return CentroidMatrix(g=(weights.T @ X.values) / mass[:, None])


def fcm_update_memberships(X: DataMatrix, G: CentroidMatrix, m: float) -> MembershipMatrix:
    sq = squared_distances(X, G)
    mu = np.empty_like(sq)

    coincident = (sq < COINCIDENCE_SQ_DIST).any(axis=1)
    if coincident.any():
        nearest = np.argmin(sq[coincident], axis=1)
        hard = np.zeros((int(coincident.sum()), G.K))
        hard[np.arange(hard.shape[0]), nearest] = 1.0
        mu[coincident] = hard

    regular = ~coincident
    if regular.any():
        # ratios against the row minimum stay in (0, 1], so no overflow for m near 1
        rows = sq[regular]
        scaled = (rows / rows.min(axis=1, keepdims=True)) ** (-1.0 / (m - 1.0))
        mu[regular] = scaled / scaled.sum(axis=1, keepdims=True)
    return MembershipMatrix(mu=mu)


def initial_memberships(n: int, K: int, rng: np.random.Generator) -> MembershipMatrix:
    draws = rng.uniform(size=(n, K))
    return MembershipMatrix(mu=draws / draws.sum(axis=1, keepdims=True))


def fcm_fit(X: DataMatrix, cfg: FcmConfig) -> ClusteringResult:
    if cfg.K > X.n:
        raise ValueError(f"K={cfg.K} exceeds the number of objects n={X.n}")
    rng = np.random.default_rng(cfg.seed)
    U = initial_memberships(X.n, cfg.K, rng)

    trace: list[float] = []
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iter + 1):
        G = fcm_update_centroids(X, U, cfg.m)
        U = fcm_update_memberships(X, G, cfg.m)
        objective = fcm_objective(X, U, G, cfg.m)
        previous = trace[-1] if trace else None
        trace.append(objective)
        logger.debug(
            "fcm_iteration seed=%s iteration=%s objective=%.12g", cfg.seed, iterations, objective
        )
        if objective <= 0.0 or (previous is not None and previous - objective < cfg.tol):
            converged = True
            break

    objective = trace[-1]
    logger.debug(
        "fcm_fit_done seed=%s K=%s iterations=%s objective=%.12g",
        cfg.seed,
        cfg.K,
        iterations,
        objective,
    )
    return ClusteringResult(
        centroids=G,
        memberships=U,
        objective=objective,
        objective_trace=tuple(trace),
        iterations=iterations,
        seed=cfg.seed,
        method_tag=MethodTag.FCM,
        diagnostics={
            "m": float(cfg.m),
            "converged": converged,
            "column_sums_in_bounds": U.column_sums_in_bounds(),
        },
    )
