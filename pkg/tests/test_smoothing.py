import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hsfc_cluster.smoothing as smoothing
from hsfc_cluster.errors import DimensionMismatchError, RootSolveError
from hsfc_cluster.models import CentroidMatrix, DataMatrix
from hsfc_cluster.smoothing import (
    SmoothingParams,
    h,
    min_distances,
    minimize_smoothed,
    psi,
    psi_prime,
    root_tolerance,
    smoothed_gradient,
    smoothed_objective,
    solve_all_z,
    solve_z,
    theta,
    theta_matrix,
)

DEFAULTS = SmoothingParams(gamma=0.001, tau=0.001, epsilon=0.01)

ys = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
taus = st.floats(min_value=1e-6, max_value=10.0)


@settings(max_examples=200, deadline=None)
@given(y=ys, tau=taus)
def test_psi_is_a_positive_upper_bound_of_the_hinge(y, tau):
    value = psi(y, tau)
    assert value > 0.0
    assert value >= max(y, 0.0)
    assert value - max(y, 0.0) <= tau / 2.0 * (1.0 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(y=ys, step=st.floats(min_value=1e-3, max_value=10.0), tau=taus)
def test_psi_is_increasing_with_slope_in_unit_interval(y, step, tau):
    assert psi(y + step, tau) >= psi(y, tau)
    slope = psi_prime(y, tau)
    assert 0.0 < slope <= 1.0


def test_psi_at_zero_is_half_tau():
    assert psi(0.0, 0.3) == pytest.approx(0.15)
    assert psi_prime(0.0, 0.3) == pytest.approx(0.5)


def test_psi_prime_matches_central_difference():
    step = 1e-6
    numeric = (psi(1.7 + step, 0.3) - psi(1.7 - step, 0.3)) / (2.0 * step)
    assert psi_prime(1.7, 0.3) == pytest.approx(numeric, rel=1e-8)


def test_psi_has_no_cancellation_for_large_negative_arguments():
    tau = 1e-3
    y = -1e8
    assert psi(y, tau) == pytest.approx(tau * tau / (4.0 * abs(y)), rel=1e-12)


def test_psi_vectorised_matches_scalar():
    values = np.array([-3.0, -1e-9, 0.0, 2.5])
    np.testing.assert_allclose(psi(values, 0.1), [psi(float(v), 0.1) for v in values])


def test_theta_is_smoothed_distance():
    assert theta([3.0, 4.0], [0.0, 0.0], 0.0) == pytest.approx(5.0)
    assert theta([1.0], [1.0], 0.25) == pytest.approx(0.25)
    assert theta([0.0, 0.0], [3.0, 4.0], 1e-3) >= 5.0
    with pytest.raises(DimensionMismatchError):
        theta([1.0, 2.0], [1.0], 0.1)


def test_h_examples():
    G = CentroidMatrix(g=[[0.0]])
    prm = SmoothingParams(gamma=1e-9, tau=0.001, epsilon=0.01)
    x = np.array([5.0])
    assert h(-1e12, x, G, prm) == pytest.approx(-0.01, rel=1e-9)
    assert h(5.0, x, G, prm) == pytest.approx(0.0005 - 0.01, rel=1e-9)
    assert abs(h(5.009975, x, G, prm)) <= 1e-12


def test_solve_z_single_centroid_closed_form():
    prm = SmoothingParams(gamma=1e-9, tau=0.001, epsilon=0.01)
    z, iterations = solve_z(np.array([5.0]), CentroidMatrix(g=[[0.0]]), prm)
    assert z == pytest.approx(5.009975, abs=1e-12)
    assert iterations <= 25


def test_solve_z_two_equidistant_centroids_closed_form():
    prm = SmoothingParams(gamma=1e-9, tau=0.001, epsilon=0.01)
    G = CentroidMatrix(g=[[3.0, 4.0], [-3.0, -4.0]])
    z, _ = solve_z(np.array([0.0, 0.0]), G, prm)
    assert z == pytest.approx(5.0 + 0.005 - 0.001**2 / 0.02, abs=1e-12)


def test_solve_z_accepts_poor_initial_guess():
    prm = SmoothingParams(gamma=1e-9, tau=0.001, epsilon=0.01)
    G = CentroidMatrix(g=[[0.0]])
    for start in (-1e4, 0.0, 1e4):
        z, _ = solve_z(np.array([5.0]), G, prm, z0=start)
        assert z == pytest.approx(5.009975, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    K=st.integers(min_value=1, max_value=6),
    gamma=st.floats(min_value=1e-8, max_value=1.0),
    tau=st.floats(min_value=1e-8, max_value=0.1),
    epsilon=st.floats(min_value=1e-3, max_value=1.0),
)
def test_root_solve_meets_tolerance(seed, K, gamma, tau, epsilon):
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=5.0, size=(12, 3))
    g = rng.normal(scale=5.0, size=(K, 3))
    prm = SmoothingParams(gamma=gamma, tau=tau, epsilon=epsilon)
    thetas = theta_matrix(x, g, gamma)
    solved = solve_all_z(thetas, prm, min_distances(x, g))
    assert np.all(np.isfinite(solved.z))
    exact = ~solved.resolution_limited
    assert np.all(solved.residuals[exact] <= root_tolerance(epsilon))
    scale = np.maximum(1.0, np.maximum(np.abs(solved.z), thetas.max(axis=1)))
    floor = 16.0 * np.finfo(float).eps * K * scale
    assert np.all(solved.residuals[~exact] <= floor[~exact])


def test_root_solve_on_iris_converges_quickly(iris):
    G = iris.values[[0, 50, 100]]
    thetas = theta_matrix(iris.values, G, DEFAULTS.gamma)
    solved = solve_all_z(thetas, DEFAULTS, min_distances(iris.values, G))
    assert solved.max_iters <= 25
    assert np.all(solved.residuals <= root_tolerance(DEFAULTS.epsilon))


def test_root_solve_failure_raises(monkeypatch):
    monkeypatch.setattr(smoothing, "ROOT_MAX_ITER", 0)
    with pytest.raises(RootSolveError) as info:
        solve_z(np.array([5.0]), CentroidMatrix(g=[[0.0]]), DEFAULTS)
    assert info.value.indices == (0,)


def test_root_solve_far_from_origin_is_resolution_limited():
    rng = np.random.default_rng(8)
    x = 1e7 + rng.normal(scale=1e7, size=(40, 2))
    g = x[[0, 1, 2]]
    thetas = theta_matrix(x, g, DEFAULTS.gamma)
    solved = solve_all_z(thetas, DEFAULTS, min_distances(x, g))
    assert solved.resolution_limited_count > 0
    assert np.all(solved.residuals[~solved.resolution_limited] <= root_tolerance(0.01))
    scale = np.maximum(np.abs(solved.z), thetas.max(axis=1))
    limited = solved.resolution_limited
    assert np.all(solved.residuals[limited] <= 16.0 * np.finfo(float).eps * 3 * scale[limited])


def test_root_solve_stopped_short_still_raises(monkeypatch):
    monkeypatch.setattr(smoothing, "_STALL_ULPS", 0.5)
    x = np.array([[0.0, 0.0], [3.0, 4.0], [-2.0, 1.0]])
    g = np.array([[0.5, 0.5], [2.0, 3.0]])
    with pytest.raises(RootSolveError):
        solve_all_z(theta_matrix(x, g, DEFAULTS.gamma), DEFAULTS, min_distances(x, g))


def test_objective_of_points_on_their_centroid():
    X = DataMatrix(values=np.tile([[1.0, 2.0]], (4, 1)))
    prm = SmoothingParams(gamma=1e-6, tau=1e-6, epsilon=0.01)
    f, solved = smoothed_objective(CentroidMatrix(g=[[1.0, 2.0]]), X, prm)
    np.testing.assert_allclose(solved.z, 0.01, rtol=1e-3)
    assert f == pytest.approx(4 * 0.01**2, rel=1e-3)


def test_objective_tends_to_crisp_sum_of_squares():
    rng = np.random.default_rng(2)
    X = DataMatrix(values=rng.normal(size=(10, 2)) * 3.0)
    G = CentroidMatrix(g=[[-1.0, 0.0], [2.0, 1.0], [0.0, -3.0]])
    crisp_ss = float(np.sum(min_distances(X.values, G.g) ** 2))
    prm = DEFAULTS
    for _ in range(10):
        prm = prm.shrink(0.25, 0.25, 0.25)
    f, _ = smoothed_objective(G, X, prm)
    assert abs(f - crisp_ss) <= 1e-3


def test_objective_rejects_feature_mismatch():
    X = DataMatrix(values=np.zeros((3, 2)))
    with pytest.raises(DimensionMismatchError):
        smoothed_objective(CentroidMatrix(g=np.zeros((2, 3))), X, DEFAULTS)


def test_gradient_vanishes_by_symmetry():
    prm = SmoothingParams(gamma=1e-3, tau=1e-3, epsilon=0.01)
    single = DataMatrix(values=[[0.5, -0.5]])
    G = CentroidMatrix(g=[[0.5, -0.5]])
    _, solved = smoothed_objective(G, single, prm)
    np.testing.assert_allclose(smoothed_gradient(G, single, prm, solved), 0.0, atol=1e-14)

    pair = DataMatrix(values=[[-1.0], [1.0]])
    G = CentroidMatrix(g=[[0.0]])
    _, solved = smoothed_objective(G, pair, prm)
    np.testing.assert_allclose(smoothed_gradient(G, pair, prm, solved), 0.0, atol=1e-14)


def test_gradient_matches_central_differences(small_instance):
    X = small_instance
    prm = SmoothingParams(gamma=0.1, tau=0.1, epsilon=0.05)
    g0 = np.array([[-1.0, 0.5], [1.5, -0.5]])
    _, solved = smoothed_objective(CentroidMatrix(g=g0), X, prm)
    analytic = smoothed_gradient(CentroidMatrix(g=g0), X, prm, solved)

    step = 1e-6
    numeric = np.zeros_like(g0)
    for index in np.ndindex(*g0.shape):
        up = g0.copy()
        down = g0.copy()
        up[index] += step
        down[index] -= step
        f_up, _ = smoothed_objective(CentroidMatrix(g=up), X, prm)
        f_down, _ = smoothed_objective(CentroidMatrix(g=down), X, prm)
        numeric[index] = (f_up - f_down) / (2.0 * step)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6)


def test_minimize_keeps_an_optimal_start():
    X = DataMatrix(values=[[-1.0], [1.0]])
    prm = SmoothingParams(gamma=1e-4, tau=1e-4, epsilon=0.01)
    inner = minimize_smoothed(CentroidMatrix(g=[[0.0]]), X, prm)
    assert inner.iterations == 0
    assert inner.converged is True
    np.testing.assert_allclose(inner.centroids.g, [[0.0]], atol=1e-12)
    assert abs(inner.f - inner.f_initial) <= 1e-10


def test_minimize_moves_centroids_to_blob_means():
    X = DataMatrix(values=[[-1.0], [0.0], [1.0], [99.0], [100.0], [101.0]])
    G = CentroidMatrix(g=[[0.3], [99.6]])
    prm = DEFAULTS
    for _ in range(4):
        inner = minimize_smoothed(G, X, prm)
        assert all(b <= a for a, b in zip(inner.f_trace, inner.f_trace[1:]))
        G = inner.centroids
        prm = prm.shrink(0.25, 0.25)
    np.testing.assert_allclose(G.g[:, 0], [0.0, 100.0], atol=1e-3)


def test_params_validation_and_shrink():
    with pytest.raises(ValueError):
        SmoothingParams(gamma=0.0, tau=0.1, epsilon=0.1)
    with pytest.raises(ValueError):
        SmoothingParams(gamma=0.1, tau=float("nan"), epsilon=0.1)
    smaller = DEFAULTS.shrink(0.5, 0.25)
    assert (smaller.gamma, smaller.tau, smaller.epsilon) == (0.0005, 0.00025, 0.01)
    assert DEFAULTS.shrink(0.5, 0.5, 0.1).epsilon == pytest.approx(0.001)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_central_differences_on_random_instances(seed):
    rng = np.random.default_rng(100 + seed)
    n, p, K = int(rng.integers(2, 11)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
    X = DataMatrix(values=rng.normal(scale=2.0, size=(n, p)))
    g0 = rng.normal(scale=2.0, size=(K, p))
    prm = SmoothingParams(gamma=0.1, tau=0.1, epsilon=0.05)
    _, solved = smoothed_objective(CentroidMatrix(g=g0), X, prm)
    analytic = smoothed_gradient(CentroidMatrix(g=g0), X, prm, solved)

    step = 1e-5
    numeric = np.zeros_like(g0)
    for index in np.ndindex(*g0.shape):
        up = g0.copy()
        down = g0.copy()
        up[index] += step
        down[index] -= step
        numeric[index] = (
            smoothed_objective(CentroidMatrix(g=up), X, prm)[0]
            - smoothed_objective(CentroidMatrix(g=down), X, prm)[0]
        ) / (2.0 * step)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)


def test_tiny_parameters_give_the_minimum_distance():
    rng = np.random.default_rng(21)
    X = DataMatrix(values=rng.normal(scale=3.0, size=(15, 2)))
    G = CentroidMatrix(g=rng.normal(scale=3.0, size=(3, 2)))
    prm = SmoothingParams(gamma=1e-12, tau=1e-12, epsilon=1e-12)
    _, solved = smoothed_objective(G, X, prm)
    np.testing.assert_allclose(solved.z, min_distances(X.values, G.g), atol=1e-6, rtol=0.0)


def test_minimize_reports_the_requested_gradient_contract(two_blobs):
    X, _ = two_blobs
    G = CentroidMatrix(g=[[1.0], [48.0]])
    inner = minimize_smoothed(G, X, DEFAULTS)
    _, solved = smoothed_objective(inner.centroids, X, DEFAULTS)
    grad = smoothed_gradient(inner.centroids, X, DEFAULTS, solved)
    assert inner.converged is True
    assert inner.line_search_failed is False
    assert float(np.max(np.abs(grad))) <= smoothing.INNER_GTOL * max(1.0, inner.f)
