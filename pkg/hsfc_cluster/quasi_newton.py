from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 60
CURVATURE_FLOOR = 1e-12


@dataclass(frozen=True)
class QuasiNewtonResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    evaluations: int
    converged: bool
    line_search_failed: bool
    f_trace: tuple[float, ...]


def _gradient_small(grad: np.ndarray, f: float, gtol: float) -> bool:
    return float(np.max(np.abs(grad))) <= gtol * max(1.0, abs(f))


def _backtrack(
    fun: Objective,
    x: np.ndarray,
    f: float,
    direction: np.ndarray,
    slope: float,
    alpha0: float,
    noise: float = 0.0,
) -> tuple[np.ndarray, float, np.ndarray, int] | None:
    alpha = alpha0
    evaluations = 0
    for _ in range(MAX_BACKTRACKS):
        if alpha * abs(slope) <= noise:
            return None
        candidate = x + alpha * direction
        f_new, g_new = fun(candidate)
        evaluations += 1
        if np.isfinite(f_new) and f_new < f and f_new <= f + ARMIJO_C1 * alpha * slope:
            return candidate, float(f_new), g_new, evaluations
        alpha *= 0.5
    return None


def minimize_bfgs(
    fun: Objective,
    x0: np.ndarray,
    *,
    gtol: float = 1e-6,
    max_iter: int = 200,
    fnoise: float = 0.0,
) -> QuasiNewtonResult:
    """Minimize ``fun`` from ``x0``.

    Stops when ``max|grad| <= gtol * max(1, |f|)``, after ``max_iter`` accepted
    steps, or when no sufficient-decrease step exists along either the quasi-Newton
    or the steepest-descent direction. Accepted steps strictly decrease ``f``.

    ``fnoise`` is the relative accuracy of ``f``: trial steps whose predicted
    decrease falls below ``fnoise * max(1, |f|)`` count as a failed line search.
    """
    x = np.array(x0, dtype=np.float64).reshape(-1)
    f, grad = fun(x)
    f = float(f)
    evaluations = 1
    trace = [f]
    inverse_hessian: np.ndarray | None = None
    identity = np.eye(x.size)
    converged = _gradient_small(grad, f, gtol)
    line_search_failed = False
    iterations = 0

    while not converged and iterations < max_iter:
        if inverse_hessian is None:
            direction = -grad
            alpha0 = min(1.0, 1.0 / max(float(np.max(np.abs(grad))), 1e-300))
        else:
            direction = -inverse_hessian @ grad
            alpha0 = 1.0
        noise = fnoise * max(1.0, abs(f))
        slope = float(grad @ direction)
        if not slope < 0.0:
            inverse_hessian = None
            direction = -grad
            slope = float(grad @ direction)
            alpha0 = min(1.0, 1.0 / max(float(np.max(np.abs(grad))), 1e-300))

        step = _backtrack(fun, x, f, direction, slope, alpha0, noise)
        if step is None and inverse_hessian is not None:
            # quasi-Newton direction exhausted; retry once along -grad
            inverse_hessian = None
            direction = -grad
            slope = float(grad @ direction)
            alpha0 = min(1.0, 1.0 / max(float(np.max(np.abs(grad))), 1e-300))
            evaluations += MAX_BACKTRACKS
            step = _backtrack(fun, x, f, direction, slope, alpha0, noise)
        if step is None:
            evaluations += MAX_BACKTRACKS
            line_search_failed = True
            logger.debug(
                "quasi_newton_line_search_failed iteration=%s f=%.12g grad_inf=%.3e",
                iterations,
                f,
                float(np.max(np.abs(grad))),
            )
            break

        x_new, f_new, grad_new, used = step
        evaluations += used
        s = x_new - x
        y = grad_new - grad
        sy = float(s @ y)
        if sy > CURVATURE_FLOOR * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            if inverse_hessian is None:
                inverse_hessian = identity * (sy / float(y @ y))
            rho = 1.0 / sy
            left = identity - rho * np.outer(s, y)
            inverse_hessian = left @ inverse_hessian @ left.T + rho * np.outer(s, s)

        x, f, grad = x_new, f_new, grad_new
        trace.append(f)
        iterations += 1
        converged = _gradient_small(grad, f, gtol)

    return QuasiNewtonResult(
        x=x,
        f=f,
        grad=grad,
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
        line_search_failed=line_search_failed,
        f_trace=tuple(trace),
    )
