import io

import numpy as np
import pytest

from fblin.errors import DimensionError, NumericalError
from fblin.lm import LmResult, LmSettings, minimize


def linear_problem(rng, m=20, n=6):
    M = rng.standard_normal((m, n))
    p_true = rng.standard_normal(n)
    b = M @ p_true
    return M, p_true, b


def test_linear_least_squares_oracle(rng):
    M, p_true, b = linear_problem(rng)
    result = minimize(lambda p: M @ p - b, lambda p: M, np.zeros(6))
    # normal-equations oracle
    oracle = np.linalg.solve(M.T @ M, M.T @ b)
    assert np.max(np.abs(result.final_params - oracle)) <= 1e-10
    # three accepted steps reach loss <= 1e-20 (history[0] is the start)
    assert result.loss_history[3] <= 1e-20


def test_scalar_identity_residual():
    result = minimize(lambda p: p.copy(), lambda p: np.eye(1), np.array([5.0]))
    assert abs(result.final_params[0]) <= 1e-10
    assert result.final_loss <= 1e-20


def test_rosenbrock_convergence():
    def res(p):
        return np.array([1.0 - p[0], 10.0 * (p[1] - p[0] ** 2)])

    def jac(p):
        return np.array([[-1.0, 0.0], [-20.0 * p[0], 10.0]])

    result = minimize(res, jac, np.array([-1.2, 1.0]), LmSettings(step_tol=0.0))
    assert result.final_params == pytest.approx([1.0, 1.0], abs=1e-8)


def test_accepted_losses_never_increase(rng):
    M, _, b = linear_problem(rng, m=30, n=5)

    def res(p):
        return np.tanh(M @ p) - np.tanh(b)

    def jac(p):
        s = 1.0 - np.tanh(M @ p) ** 2
        return s[:, None] * M

    result = minimize(res, jac, rng.standard_normal(5))
    hist = np.array(result.loss_history)
    assert np.all(np.diff(hist) <= 0.0)


def test_small_damping_reproduces_gauss_newton(rng):
    M, _, b = linear_problem(rng)
    p0 = rng.standard_normal(6)
    settings = LmSettings(initial_damping=1e-15, max_iterations=1)
    result = minimize(lambda p: M @ p - b, lambda p: M, p0, settings)
    gn = p0 + np.linalg.solve(M.T @ M, M.T @ (b - M @ p0))
    assert result.final_params == pytest.approx(gn, abs=1e-8)


def test_deterministic(rng):
    M, _, b = linear_problem(rng)

    def res(p):
        return np.sin(M @ p) - b * 0.1

    def jac(p):
        return np.cos(M @ p)[:, None] * M

    r1 = minimize(res, jac, np.zeros(6))
    r2 = minimize(res, jac, np.zeros(6))
    assert np.array_equal(r1.final_params, r2.final_params)
    assert r1.loss_history == r2.loss_history


def test_non_finite_initial_residual_raises():
    with pytest.raises(NumericalError):
        minimize(lambda p: np.array([np.nan]), lambda p: np.eye(1), np.array([1.0]))


def test_non_finite_initial_params_raise():
    with pytest.raises(NumericalError):
        minimize(lambda p: p, lambda p: np.eye(1), np.array([np.inf]))


def test_max_evals_termination(rng):
    M, _, b = linear_problem(rng)
    settings = LmSettings(max_function_evals=2, func_tol=1e-300, step_tol=0.0)
    result = minimize(lambda p: M @ p - b, lambda p: M, np.zeros(6), settings)
    assert result.termination_reason == "max_evals"
    assert result.function_evals <= 2


def test_max_iter_termination(rng):
    M, _, b = linear_problem(rng)
    settings = LmSettings(max_iterations=1, func_tol=1e-300, step_tol=0.0)
    result = minimize(lambda p: M @ p - b, lambda p: M, np.zeros(6), settings)
    assert result.termination_reason == "max_iter"
    assert result.iterations_used == 1


def test_stalled_when_no_step_decreases():
    # a wrong-signed Jacobian makes every proposed step uphill, so damping
    # grows until it overflows
    result = minimize(lambda p: p.copy(), lambda p: -np.eye(1), np.array([1.0]),
                      LmSettings(step_tol=0.0))
    assert result.termination_reason == "stalled"
    assert result.final_loss == 1.0


def test_jacobian_shape_mismatch_raises(rng):
    M, _, b = linear_problem(rng)
    with pytest.raises(DimensionError):
        minimize(lambda p: M @ p - b, lambda p: M[:, :3], np.zeros(6))


def test_log_stream_format(rng):
    M, _, b = linear_problem(rng)
    stream = io.StringIO()
    minimize(lambda p: M @ p - b, lambda p: M, np.zeros(6), log_stream=stream)
    lines = stream.getvalue().strip().splitlines()
    assert lines
    fields = lines[0].split("\t")
    assert len(fields) == 4
    int(fields[0])
    float(fields[1])


def test_settings_validation():
    with pytest.raises(DimensionError):
        LmSettings(func_tol=0.0)
    with pytest.raises(DimensionError):
        LmSettings(damping_decrease=1.5)
    with pytest.raises(DimensionError):
        LmSettings(step_tol=-1.0)


def test_result_fields(rng):
    M, _, b = linear_problem(rng)
    result = minimize(lambda p: M @ p - b, lambda p: M, np.zeros(6))
    assert isinstance(result, LmResult)
    assert result.final_loss >= 0.0
    assert result.termination_reason in ("func_tol", "step_tol", "max_iter", "max_evals", "stalled")
