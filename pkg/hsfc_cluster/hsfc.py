from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .evaluation import within_ss
from .models import CentroidMatrix, ClusteringResult, DataMatrix, MembershipMatrix, MethodTag
from .smoothing import (
    SmoothingParams,
    min_distances,
    minimize_smoothed,
    psi,
    solve_all_z,
    theta_matrix,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HsfcConfig:
    K: int
    epsilon: float = 0.01
    gamma0: float = 0.001
    tau0: float = 0.001
    rho1: float = 0.25
    rho2: float = 0.25
    rho3: float = 0.25
    N: int = 10
    epsilon_fixed: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.K) < 2:
            raise ValueError(f"HsfcConfig.K must be >= 2, got {self.K}")
        for name in ("rho1", "rho2", "rho3"):
            value = float(getattr(self, name))
            if not 0.0 < value < 1.0:
                raise ValueError(f"HsfcConfig.{name} must lie in (0, 1), got {value}")
        for name in ("epsilon", "gamma0", "tau0"):
            value = float(getattr(self, name))
            if not value > 0.0:
                raise ValueError(f"HsfcConfig.{name} must be > 0, got {value}")
        if int(self.N) < 1:
            raise ValueError(f"HsfcConfig.N must be >= 1, got {self.N}")

    def initial_params(self) -> SmoothingParams:
        return SmoothingParams(gamma=self.gamma0, tau=self.tau0, epsilon=self.epsilon)

    def next_params(self, prm: SmoothingParams) -> SmoothingParams:
        return prm.shrink(self.rho1, self.rho2, None if self.epsilon_fixed else self.rho3)


def extract_memberships(
    X: DataMatrix, G: CentroidMatrix, prm: SmoothingParams
) -> MembershipMatrix:
    """mu_ik = psi(z_i - theta_ik, tau) / epsilon, normalised by the row's psi sum.

    At an exact root the row sum equals epsilon, so the normalisation only removes
    the residual of the root solve.
    """
    thetas = theta_matrix(X.values, G.g, prm.gamma)
    solved = solve_all_z(thetas, prm, min_distances(X.values, G.g))
    weights = psi(solved.z[:, None] - thetas, prm.tau)
    return MembershipMatrix(mu=weights / weights.sum(axis=1, keepdims=True))


def initial_centroids(X: DataMatrix, K: int, rng: np.random.Generator) -> CentroidMatrix:
    """K distinct data points; repeated rows are sampled once when enough distinct ones exist."""
    pool = X.values
    distinct = np.unique(pool, axis=0)
    if K <= distinct.shape[0] < X.n:
        pool = distinct
    rows = rng.choice(pool.shape[0], size=K, replace=False)
    return CentroidMatrix(g=pool[np.sort(rows)])


def crisp_surrogate(X: DataMatrix, G: CentroidMatrix) -> float:
    d = min_distances(X.values, G.g)
    return float(np.sum(d * d))


def hsfc_fit(X: DataMatrix, cfg: HsfcConfig) -> ClusteringResult:
    if cfg.K > X.n:
        raise ValueError(f"K={cfg.K} exceeds the number of objects n={X.n}")
    rng = np.random.default_rng(cfg.seed)
    G = initial_centroids(X, cfg.K, rng)
    prm = cfg.initial_params()

    objective_trace: list[float] = []
    surrogate_trace: list[float] = []
    steps: list[dict[str, float | int | bool]] = []
    inner_iterations = 0
    line_search_failures = 0
    newton_peak = 0

    for step in range(1, cfg.N + 1):
        inner = minimize_smoothed(G, X, prm)
        G = inner.centroids
        objective_trace.append(inner.f)
        surrogate_trace.append(crisp_surrogate(X, G))
        inner_iterations += inner.iterations
        line_search_failures += int(inner.line_search_failed)
        newton_peak = max(newton_peak, inner.max_newton_iters)
        steps.append(
            {
                "step": step,
                "gamma": prm.gamma,
                "tau": prm.tau,
                "epsilon": prm.epsilon,
                "f": inner.f,
                "inner_iterations": inner.iterations,
                "converged": inner.converged,
                "line_search_failed": inner.line_search_failed,
            }
        )
        logger.debug(
            "hsfc_outer_step seed=%s step=%s gamma=%.6g tau=%.6g epsilon=%.6g f=%.12g inner=%s",
            cfg.seed,
            step,
            prm.gamma,
            prm.tau,
            prm.epsilon,
            inner.f,
            inner.iterations,
        )
        prm = cfg.next_params(prm)

    U = extract_memberships(X, G, prm)
    objective = within_ss(X, U, G)
    if line_search_failures:
        logger.debug(
            "hsfc_inner_flagged seed=%s line_search_failures=%s of %s outer steps",
            cfg.seed,
            line_search_failures,
            cfg.N,
        )
    logger.debug("hsfc_fit_done seed=%s K=%s wp=%.12g", cfg.seed, cfg.K, objective)
    return ClusteringResult(
        centroids=G,
        memberships=U,
        objective=objective,
        objective_trace=tuple(objective_trace),
        iterations=cfg.N,
        seed=cfg.seed,
        method_tag=MethodTag.HSFC,
        diagnostics={
            "final_params": {"gamma": prm.gamma, "tau": prm.tau, "epsilon": prm.epsilon},
            "surrogate_trace": surrogate_trace,
            "steps": steps,
            "inner_iterations": inner_iterations,
            "line_search_failures": line_search_failures,
            "max_newton_iters": newton_peak,
            "column_sums_in_bounds": U.column_sums_in_bounds(),
        },
    )
