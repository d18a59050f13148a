"""Accuracy assessment against the closed-form benchmark and closed-loop runs."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def analytic_solution(x):
    """Closed-form linearizing transformation of the benchmark plant.

    T1 = ln(1 + x1 + x2), T2 = x2; defined for x1 + x2 > -1.
    """
    x = np.asarray(x, dtype=float)
    s = 1.0 + x[0] + x[1]
    if s <= 0.0:
        raise DomainError(
            "analytic transformation is undefined on and below x1 + x2 = -1"
        )
    return np.array([np.log(s), x[1]])


@dataclass(frozen=True)
class EvaluationReport:
    """Per-component error fields and norms of a transformation on a grid.

    Norms are unnormalized vector norms of each component's error over the
    whole grid: l1 = sum |e|, l2 = sqrt(sum e^2), linf = max |e|.
    """

    grid_kind: str
    points: np.ndarray       # (M, n)
    errors: np.ndarray       # (M, n)
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray

    def norm_row(self, which):
        return {"l1": self.l1, "l2": self.l2, "linf": self.linf}[which]

    def save_error_csv(self, path):
        n = self.points.shape[1]
        header = [f"x{i + 1}" for i in range(n)] + [f"e{i + 1}" for i in range(n)]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for x, e in zip(self.points, self.errors):
                fh.write(",".join(format(v, ".17g") for v in (*x, *e)) + "\n")

    def save_norms_csv(self, path):
        n = self.points.shape[1]
        with open(path, "w") as fh:
            fh.write("norm," + ",".join(f"T{j + 1}" for j in range(n)) + "\n")
            for name in ("l1", "l2", "linf"):
                vals = self.norm_row(name)
                fh.write(name + "," + ",".join(format(v, ".17g") for v in vals) + "\n")

    def norm_table(self):
        """Scientific-notation table for eyeball comparison."""
        n = self.points.shape[1]
        lines = ["norm      " + "  ".join(f"T{j + 1}       " for j in range(n))]
        for label, vals in (("L1  ", self.l1), ("L2  ", self.l2), ("Linf", self.linf)):
            lines.append(label + "      " + "  ".join(f"{v:.2E}" for v in vals))
        return "\n".join(lines)


def evaluate(transform, grid, reference=analytic_solution, grid_kind="custom"):
    """Error report of ``transform`` against ``reference`` on a grid."""
    grid = np.asarray(grid, dtype=float)
    errors = np.array(
        [np.asarray(transform(x), dtype=float) - np.asarray(reference(x), dtype=float)
         for x in grid]
    )
    return EvaluationReport(
        grid_kind=grid_kind,
        points=grid,
        errors=errors,
        l1=np.sum(np.abs(errors), axis=0),
        l2=np.sqrt(np.sum(errors**2, axis=0)),
        linf=np.max(np.abs(errors), axis=0),
    )


@dataclass(frozen=True)
class ClosedLoopTrace:
    """States, inputs and transformed states along a controlled trajectory.

    ``states`` has one more row than steps taken when the run completes;
    ``exit_reason`` is set when the state left the valid domain early.
    """

    states: np.ndarray       # (K+1, n)
    inputs: np.ndarray       # (K+1,)
    transformed: np.ndarray  # (K+1, n)
    horizon: int
    exit_reason: str | None = None

    @property
    def completed(self):
        return self.exit_reason is None

    def linearity_residual(self, A):
        """max_t || z(t+1) - A z(t) ||_inf along the recorded trace."""
        z = self.transformed
        if z.shape[0] < 2:
            return 0.0
        defect = z[1:] - z[:-1] @ np.asarray(A, dtype=float).T
        return float(np.max(np.abs(defect)))

    def save_csv(self, path):
        n = self.states.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + ["u"] + [
            f"z{i + 1}" for i in range(n)
        ]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for t, (x, u, z) in enumerate(zip(self.states, self.inputs, self.transformed)):
                fh.write(
                    ",".join([str(t)] + [format(v, ".17g") for v in (*x, u, *z)]) + "\n"
                )


def simulate_closed_loop(sys, spec, transform, x0, horizon):
    """Iterate x(t+1) = f(x(t), -c . T(x(t))) for ``horizon`` steps.

    Leaving the valid domain truncates the trace and records the reason
    rather than raising; early controllers are allowed to escape.
    """
    x = np.asarray(x0, dtype=float)
    states, inputs, transformed = [], [], []
    exit_reason = None
    for _ in range(horizon + 1):
        try:
            z = np.asarray(transform(x), dtype=float)
        except DomainError as exc:
            exit_reason = f"transformation undefined: {exc}"
            break
        u = -float(spec.c @ z)
        states.append(x.copy())
        inputs.append(u)
        transformed.append(z)
        if len(states) == horizon + 1:
            break
        try:
            x = np.asarray(sys.step(x, u), dtype=float)
        except DomainError as exc:
            exit_reason = f"state left the valid domain: {exc}"
            break
    return ClosedLoopTrace(
        states=np.array(states),
        inputs=np.array(inputs),
        transformed=np.array(transformed),
        horizon=horizon,
        exit_reason=exit_reason,
    )
