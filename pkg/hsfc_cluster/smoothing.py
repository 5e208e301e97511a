from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, RootSolveError
from .models import CentroidMatrix, DataMatrix
from .quasi_newton import minimize_bfgs

logger = logging.getLogger(__name__)

ROOT_MAX_ITER = 100
INNER_MAX_ITER = 200
INNER_GTOL = 1e-6
INNER_TARGET_GTOL = 1e-10
_BRACKET_MAX_DOUBLINGS = 2000
_STALL_ULPS = 4.0 * np.finfo(np.float64).eps
_EVAL_ULPS = 16.0 * np.finfo(np.float64).eps
_F_NOISE = 16.0 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class SmoothingParams:
    gamma: float
    tau: float
    epsilon: float

    def __post_init__(self) -> None:
        for name in ("gamma", "tau", "epsilon"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError(f"SmoothingParams.{name} must be > 0, got {value}")
            object.__setattr__(self, name, value)

    def shrink(self, rho1: float, rho2: float, rho3: float | None = None) -> "SmoothingParams":
        return SmoothingParams(
            gamma=self.gamma * rho1,
            tau=self.tau * rho2,
            epsilon=self.epsilon * rho3 if rho3 is not None else self.epsilon,
        )


@dataclass(frozen=True)
class ZSolve:
    z: np.ndarray
    residuals: np.ndarray
    newton_iters: np.ndarray
    resolution_limited: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.resolution_limited is None:
            object.__setattr__(self, "resolution_limited", np.zeros(np.shape(self.z), dtype=bool))
        for name in ("z", "residuals", "newton_iters", "resolution_limited"):
            array = np.array(getattr(self, name), copy=True)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def max_iters(self) -> int:
        return int(self.newton_iters.max()) if self.newton_iters.size else 0

    @property
    def resolution_limited_count(self) -> int:
        return int(np.count_nonzero(self.resolution_limited))


@dataclass(frozen=True)
class InnerSolution:
    centroids: CentroidMatrix
    f: float
    f_initial: float
    iterations: int
    converged: bool
    line_search_failed: bool
    f_trace: tuple[float, ...]
    max_newton_iters: int


def root_tolerance(epsilon: float) -> float:
    return 1e-12 * max(1.0, float(epsilon))


def _unwrap(value: np.ndarray, scalar: bool) -> np.ndarray | float:
    return float(value[0]) if scalar else value


def psi(y: np.ndarray | float, tau: float) -> np.ndarray | float:
    """(y + sqrt(y**2 + tau**2)) / 2, evaluated without cancellation for y < 0."""
    scalar = np.ndim(y) == 0
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    r = np.hypot(y_arr, tau)
    out = np.empty_like(r)
    pos = y_arr >= 0.0
    out[pos] = 0.5 * (y_arr[pos] + r[pos])
    neg = ~pos
    out[neg] = 0.5 * tau * tau / (r[neg] - y_arr[neg])
    return _unwrap(out, scalar)


def psi_prime(y: np.ndarray | float, tau: float) -> np.ndarray | float:
    scalar = np.ndim(y) == 0
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    r = np.hypot(y_arr, tau)
    out = np.empty_like(r)
    pos = y_arr >= 0.0
    out[pos] = 0.5 * (1.0 + y_arr[pos] / r[pos])
    neg = ~pos
    out[neg] = 0.5 * tau * tau / (r[neg] * (r[neg] - y_arr[neg]))
    return _unwrap(out, scalar)


def theta(x: np.ndarray, g: np.ndarray, gamma: float) -> float:
    x_arr = np.asarray(x, dtype=np.float64).reshape(-1)
    g_arr = np.asarray(g, dtype=np.float64).reshape(-1)
    if x_arr.size != g_arr.size:
        raise DimensionMismatchError("p", x_arr.size, g_arr.size, "theta operands")
    diff = x_arr - g_arr
    return float(np.sqrt(diff @ diff + gamma * gamma))


def _squared_distances(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - g[None, :, :]
    return np.einsum("ikj,ikj->ik", diff, diff)


def theta_matrix(x: np.ndarray, g: np.ndarray, gamma: float) -> np.ndarray:
    if x.shape[1] != g.shape[1]:
        raise DimensionMismatchError("p", x.shape[1], g.shape[1], "data vs centroids")
    return np.sqrt(_squared_distances(x, g) + gamma * gamma)


def min_distances(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.sqrt(_squared_distances(x, g).min(axis=1))


def _h_and_slope(
    z: np.ndarray, thetas: np.ndarray, prm: SmoothingParams
) -> tuple[np.ndarray, np.ndarray]:
    y = z[:, None] - thetas
    return psi(y, prm.tau).sum(axis=1) - prm.epsilon, psi_prime(y, prm.tau).sum(axis=1)


def _grow_brackets(
    z0: np.ndarray, h0: np.ndarray, thetas: np.ndarray, prm: SmoothingParams
) -> tuple[np.ndarray, np.ndarray]:
    lo = z0.copy()
    hi = z0.copy()
    h_lo = h0.copy()
    h_hi = h0.copy()
    base = max(prm.epsilon, prm.tau, prm.gamma)
    step_hi = np.full(z0.shape, base)
    step_lo = np.full(z0.shape, base)
    for _ in range(_BRACKET_MAX_DOUBLINGS):
        grow_hi = h_hi < 0.0
        grow_lo = h_lo > 0.0
        if not (grow_hi.any() or grow_lo.any()):
            return lo, hi
        if grow_hi.any():
            lo[grow_hi] = hi[grow_hi]
            hi[grow_hi] = hi[grow_hi] + step_hi[grow_hi]
            step_hi[grow_hi] *= 2.0
            h_hi[grow_hi] = _h_and_slope(hi[grow_hi], thetas[grow_hi], prm)[0]
        if grow_lo.any():
            hi[grow_lo] = lo[grow_lo]
            lo[grow_lo] = lo[grow_lo] - step_lo[grow_lo]
            step_lo[grow_lo] *= 2.0
            h_lo[grow_lo] = _h_and_slope(lo[grow_lo], thetas[grow_lo], prm)[0]
    bad = np.flatnonzero((h_hi < 0.0) | (h_lo > 0.0))
    raise RootSolveError(bad, np.abs(h0[bad]))


def solve_all_z(thetas: np.ndarray, prm: SmoothingParams, z0: np.ndarray) -> ZSolve:
    """Safeguarded Newton on every row of ``thetas`` at once.

    Newton steps that leave the bracket [lo, hi], or that fail to halve the
    previous step, are replaced by bisection.
    """
    z = np.array(z0, dtype=np.float64).reshape(-1)
    tol = root_tolerance(prm.epsilon)
    stop_tol = 1e-3 * tol
    h_val, slope = _h_and_slope(z, thetas, prm)
    lo, hi = _grow_brackets(z, h_val, thetas, prm)
    dx_old = hi - lo
    dx = dx_old.copy()
    iters = np.zeros(z.shape, dtype=np.int64)
    active = np.abs(h_val) > stop_tol
    stalled_at = np.zeros(z.shape, dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(ROOT_MAX_ITER):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            x_a, f_a, d_a = z[idx], h_val[idx], slope[idx]
            lo_a, hi_a = lo[idx], hi[idx]
            newton = x_a - f_a / d_a
            bisect = (
                ~np.isfinite(newton)
                | (newton <= lo_a)
                | (newton >= hi_a)
                | (np.abs(2.0 * f_a) > np.abs(dx_old[idx] * d_a))
            )
            x_new = np.where(bisect, 0.5 * (lo_a + hi_a), newton)
            dx_old[idx] = dx[idx]
            dx[idx] = x_new - x_a
            f_new, d_new = _h_and_slope(x_new, thetas[idx], prm)
            z[idx], h_val[idx], slope[idx] = x_new, f_new, d_new
            iters[idx] += 1
            below = f_new < 0.0
            lo[idx[below]] = x_new[below]
            hi[idx[~below]] = x_new[~below]
            resolution = _STALL_ULPS * np.maximum(1.0, np.abs(x_new))
            stalled = (np.abs(dx[idx]) <= resolution) | (hi[idx] - lo[idx] <= resolution)
            done = (np.abs(f_new) <= stop_tol) | stalled
            stalled_at[idx[stalled]] = True
            active[idx[done]] = False

    residuals = np.abs(h_val)
    # h cannot be evaluated more finely than a few ulps of its largest operand
    scale = np.maximum(1.0, np.maximum(np.abs(z), thetas.max(axis=1)))
    attainable = np.maximum(tol, _EVAL_ULPS * thetas.shape[1] * scale)
    limited = (residuals > tol) & stalled_at & ~active & (residuals <= attainable)
    failed = np.flatnonzero((residuals > tol) & ~limited)
    if failed.size:
        raise RootSolveError(failed, residuals[failed])
    if limited.any():
        logger.debug(
            "root_solve_resolution_limited count=%s max_residual=%.3e tol=%.3e",
            int(np.count_nonzero(limited)),
            float(residuals[limited].max()),
            tol,
        )
    return ZSolve(z=z, residuals=residuals, newton_iters=iters, resolution_limited=limited)


def h(z: float, x_i: np.ndarray, G: CentroidMatrix, prm: SmoothingParams) -> float:
    row = np.asarray(x_i, dtype=np.float64).reshape(1, -1)
    thetas = theta_matrix(row, G.g, prm.gamma)[0]
    return float(psi(z - thetas, prm.tau).sum() - prm.epsilon)


def solve_z(
    x_i: np.ndarray, G: CentroidMatrix, prm: SmoothingParams, z0: float | None = None
) -> tuple[float, int]:
    row = np.asarray(x_i, dtype=np.float64).reshape(1, -1)
    thetas = theta_matrix(row, G.g, prm.gamma)
    start = float(min_distances(row, G.g)[0]) if z0 is None else float(z0)
    solved = solve_all_z(thetas, prm, np.array([start]))
    return float(solved.z[0]), int(solved.newton_iters[0])


def _objective_arrays(
    g: np.ndarray, x: np.ndarray, prm: SmoothingParams
) -> tuple[float, ZSolve, np.ndarray]:
    thetas = theta_matrix(x, g, prm.gamma)
    solved = solve_all_z(thetas, prm, min_distances(x, g))
    return float(np.sum(solved.z * solved.z)), solved, thetas


def _gradient_arrays(
    g: np.ndarray, x: np.ndarray, prm: SmoothingParams, z: np.ndarray, thetas: np.ndarray
) -> np.ndarray:
    slopes = psi_prime(z[:, None] - thetas, prm.tau)
    weights = -2.0 * z[:, None] * slopes / (thetas * slopes.sum(axis=1)[:, None])
    return weights.T @ x - weights.sum(axis=0)[:, None] * g


def smoothed_objective(
    G: CentroidMatrix, X: DataMatrix, prm: SmoothingParams
) -> tuple[float, ZSolve]:
    """f(G) = sum_i z_i**2 where z_i solves sum_k psi(z - theta(x_i, g_k), tau) = epsilon."""
    if G.p != X.p:
        raise DimensionMismatchError("p", X.p, G.p, "data vs centroids")
    f, solved, _ = _objective_arrays(G.g, X.values, prm)
    return f, solved


def smoothed_gradient(
    G: CentroidMatrix, X: DataMatrix, prm: SmoothingParams, zs: ZSolve
) -> np.ndarray:
    if G.p != X.p:
        raise DimensionMismatchError("p", X.p, G.p, "data vs centroids")
    if zs.z.shape[0] != X.n:
        raise DimensionMismatchError("n", X.n, zs.z.shape[0], "data vs roots")
    thetas = theta_matrix(X.values, G.g, prm.gamma)
    return _gradient_arrays(G.g, X.values, prm, zs.z, thetas)


def minimize_smoothed(
    G0: CentroidMatrix,
    X: DataMatrix,
    prm: SmoothingParams,
    *,
    max_iter: int = INNER_MAX_ITER,
    gtol: float = INNER_GTOL,
) -> InnerSolution:
    if G0.p != X.p:
        raise DimensionMismatchError("p", X.p, G0.p, "data vs centroids")
    shape = G0.g.shape
    x = X.values
    newton_peak = [0]

    def fun(flat: np.ndarray) -> tuple[float, np.ndarray]:
        g = flat.reshape(shape)
        f, solved, thetas = _objective_arrays(g, x, prm)
        newton_peak[0] = max(newton_peak[0], solved.max_iters)
        return f, _gradient_arrays(g, x, prm, solved.z, thetas).reshape(-1)

    result = minimize_bfgs(
        fun,
        G0.g.reshape(-1),
        gtol=min(gtol, INNER_TARGET_GTOL),
        max_iter=max_iter,
        fnoise=_F_NOISE,
    )
    # converged means max|grad| <= gtol * max(1, |f|)
    contract_met = float(np.max(np.abs(result.grad))) <= gtol * max(1.0, abs(result.f))
    converged = result.converged or contract_met
    line_search_failed = result.line_search_failed and not contract_met
    logger.debug(
        "inner_minimize_done f0=%.12g f=%.12g iterations=%s converged=%s line_search_failed=%s",
        result.f_trace[0],
        result.f,
        result.iterations,
        converged,
        line_search_failed,
    )
    return InnerSolution(
        centroids=CentroidMatrix(g=result.x.reshape(shape)),
        f=result.f,
        f_initial=result.f_trace[0],
        iterations=result.iterations,
        converged=converged,
        line_search_failed=line_search_failed,
        f_trace=result.f_trace,
        max_newton_iters=newton_peak[0],
    )
