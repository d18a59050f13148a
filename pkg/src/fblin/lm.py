"""Full-batch Levenberg-Marquardt for small dense nonlinear least squares.

The damped normal equations (J'J + lambda diag(J'J)) step = -J'r are solved
by direct factorization; parameter counts here never exceed a few hundred.
Damping follows the classic multiplicative schedule: divide on an accepted
step, multiply on a rejection.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError

_DIAG_FLOOR = 1e-12   # keeps the damping matrix positive when a column of J is zero
_MAX_DAMPING = 1e14   # damping beyond this counts as a stall


@dataclass(frozen=True)
class LmSettings:
    func_tol: float = 1e-12
    max_iterations: int = 100_000
    max_function_evals: int = 12_000
    initial_damping: float = 1e-3
    damping_increase: float = 10.0
    damping_decrease: float = 0.1
    # relative step-size tolerance, the customary default of mature
    # least-squares libraries; 0 disables it
    step_tol: float = 1e-6

    def __post_init__(self):
        if self.func_tol <= 0:
            raise DimensionError("func_tol must be positive")
        if self.max_iterations < 1 or self.max_function_evals < 1:
            raise DimensionError("iteration and evaluation caps must be >= 1")
        if not (self.damping_increase > 1.0 and 0.0 < self.damping_decrease < 1.0):
            raise DimensionError("damping factors must satisfy up > 1 and 0 < down < 1")
        if self.step_tol < 0:
            raise DimensionError("step_tol must be non-negative")


@dataclass(frozen=True)
class LmResult:
    final_params: np.ndarray
    final_loss: float
    iterations_used: int
    termination_reason: str   # func_tol | step_tol | max_iter | max_evals | stalled
    function_evals: int = 0
    loss_history: tuple = field(default=())   # losses of accepted iterates, incl. start


def minimize(residual_fn, jacobian_fn, init, settings=LmSettings(), log_stream=None):
    """Minimize sum(residual_fn(p)**2) from ``init``.

    The accepted-step loss sequence is non-increasing.  Termination:
    ``func_tol`` when an accepted step decreases the loss by at most
    func_tol * max(1, loss), ``step_tol`` when an accepted step is small
    relative to the parameter norm, ``max_iter``/``max_evals`` on budget
    exhaustion, ``stalled`` on damping overflow.  Non-finite residuals at
    the start raise NumericalError; later ones reject the trial step.
    """
    p = np.asarray(init, dtype=float).copy()
    if not np.all(np.isfinite(p)):
        raise NumericalError("initial parameters are not finite")
    r = np.asarray(residual_fn(p), dtype=float)
    evals = 1
    if not np.all(np.isfinite(r)):
        raise NumericalError("residuals are not finite at the initial parameters")
    loss = float(r @ r)
    history = [loss]
    lam = settings.initial_damping
    iterations = 0
    reason = None

    def emit(step_norm):
        if log_stream is not None:
            log_stream.write(
                f"{iterations}\t{format(loss, '.17g')}\t{format(lam, '.6g')}"
                f"\t{format(step_norm, '.6g')}\n"
            )

    while reason is None:
        if iterations >= settings.max_iterations:
            reason = "max_iter"
            break
        J = np.asarray(jacobian_fn(p), dtype=float)
        if J.shape != (r.size, p.size):
            raise DimensionError(
                f"jacobian shape {J.shape} does not match residual {r.size} x params {p.size}"
            )
        JtJ = J.T @ J
        g = J.T @ r
        d = np.diag(JtJ).copy()
        d[d < _DIAG_FLOOR] = _DIAG_FLOOR

        while True:  # damping search for one accepted step
            if evals >= settings.max_function_evals:
                reason = "max_evals"
                break
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                trial = p + step
                r_trial = np.asarray(residual_fn(trial), dtype=float)
                evals += 1
                loss_trial = float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else np.inf
                if loss_trial <= loss:
                    decrease = loss - loss_trial
                    p, r, loss = trial, r_trial, loss_trial
                    history.append(loss)
                    iterations += 1
                    lam = max(lam * settings.damping_decrease, 1e-16)
                    step_norm = float(np.linalg.norm(step))
                    emit(step_norm)
                    if decrease <= settings.func_tol * max(1.0, history[-2]):
                        reason = "func_tol"
                    elif settings.step_tol and step_norm <= settings.step_tol * (
                        settings.step_tol + float(np.linalg.norm(p))
                    ):
                        reason = "step_tol"
                    break
            lam *= settings.damping_increase
            if lam > _MAX_DAMPING:
                reason = "stalled"
                break

    return LmResult(
        final_params=p,
        final_loss=loss,
        iterations_used=iterations,
        termination_reason=reason,
        function_evals=evals,
        loss_history=tuple(history),
    )
