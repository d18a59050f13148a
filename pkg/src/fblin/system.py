"""Discrete-time plant abstraction with analytic and black-box derivative modes.

A ``SystemModel`` wraps the one-step map f(x, u) with the origin as its
equilibrium: f(0, 0) = 0.  In ``analytic`` mode the model carries closed-form
equilibrium derivatives and an input-derivative function; in ``black_box``
mode every derivative is estimated by central finite differences with step
``fd_step``.
"""

import shlex
import subprocess
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, ProtocolError
from .linalg import DesignSpec

DEFAULT_FD_STEP = 1e-4


@dataclass(frozen=True)
class SystemModel:
    """One-step map x(t+1) = f(x(t), u(t)) with scalar input.

    ``step`` maps (state vector, input) to the next state.  ``step_batch``
    is an optional vectorized variant over (M, n) states and (M,) inputs.
    The closed-form fields are consulted only in analytic mode.
    """

    n: int
    step: callable
    mode: str = "analytic"
    fd_step: float = DEFAULT_FD_STEP
    step_batch: callable = None
    input_derivative: callable = None      # (x, u) -> df/du, length n
    equilibrium_jacobian: np.ndarray = None
    equilibrium_gain: np.ndarray = None
    name: str = "system"

    def __post_init__(self):
        if self.mode not in ("analytic", "black_box"):
            raise DimensionError(f"mode must be analytic or black_box, got {self.mode!r}")
        if self.fd_step <= 0:
            raise DimensionError("fd_step must be positive")
        origin = self.step(np.zeros(self.n), 0.0)
        if np.max(np.abs(np.asarray(origin, dtype=float))) > 1e-12:
            raise DimensionError(f"{self.name}: f(0, 0) is not the origin")

    def evaluate_batch(self, X, U):
        """Next states for (M, n) states and (M,) inputs."""
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        if self.step_batch is not None:
            return self.step_batch(X, U)
        return np.array([self.step(x, u) for x, u in zip(X, U)])


@dataclass(frozen=True)
class EquilibriumData:
    """Derivatives of f at the equilibrium: J = df/dx(0,0), G = df/du(0,0)."""

    J: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float).reshape(-1)
        if np.max(np.abs(G)) == 0.0:
            raise DimensionError("input gain G at the equilibrium must be non-zero")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "J", np.asarray(self.J, dtype=float))


def _bench_guard(s):
    if np.any(s <= 0.0):
        raise DomainError(
            "benchmark map is undefined on and below the manifold x1 + x2 = -1"
        )


def _bench_step(x, u):
    x1, x2 = float(x[0]), float(x[1])
    s = 1.0 + x1 + x2
    _bench_guard(np.asarray(s))
    return np.array(
        [
            np.exp(0.3 * x2) * np.sqrt(s) - 1.0 - 0.4 * x2 + 0.5 * float(u),
            0.5 * np.log(s) + 0.4 * x2,
        ]
    )


def _bench_step_batch(X, U):
    s = 1.0 + X[:, 0] + X[:, 1]
    _bench_guard(s)
    return np.column_stack(
        [
            np.exp(0.3 * X[:, 1]) * np.sqrt(s) - 1.0 - 0.4 * X[:, 1] + 0.5 * U,
            0.5 * np.log(s) + 0.4 * X[:, 1],
        ]
    )


def benchmark_system(mode="analytic", fd_step=DEFAULT_FD_STEP):
    """The two-state benchmark plant with a singular manifold at x1 + x2 = -1.

        x1+ = exp(0.3 x2) sqrt(1 + x1 + x2) - 1 - 0.4 x2 + 0.5 u
        x2+ = 0.5 ln(1 + x1 + x2) + 0.4 x2

    The map is affine in u with constant gain (0.5, 0).
    """
    return SystemModel(
        n=2,
        step=_bench_step,
        step_batch=_bench_step_batch,
        mode=mode,
        fd_step=fd_step,
        input_derivative=lambda x, u: np.array([0.5, 0.0]),
        equilibrium_jacobian=np.array([[0.5, 0.4], [0.5, 0.9]]),
        equilibrium_gain=np.array([0.5, 0.0]),
        name="benchmark",
    )


def benchmark_design():
    """The pole-placement design used with the benchmark plant."""
    return DesignSpec(A=np.array([[0.5, 0.3], [0.5, 0.4]]), c=np.array([1.0, 0.0]))


def equilibrium_data(sys):
    """J and G at the origin: closed-form in analytic mode, central FD otherwise."""
    if sys.mode == "analytic":
        if sys.equilibrium_jacobian is None or sys.equilibrium_gain is None:
            raise DimensionError(f"{sys.name}: analytic mode needs closed-form J and G")
        return EquilibriumData(J=sys.equilibrium_jacobian, G=sys.equilibrium_gain)
    eps = sys.fd_step
    n = sys.n
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        J[:, k] = (np.asarray(sys.step(e, 0.0)) - np.asarray(sys.step(-e, 0.0))) / (2 * eps)
    z = np.zeros(n)
    G = (np.asarray(sys.step(z, eps)) - np.asarray(sys.step(z, -eps))) / (2 * eps)
    return EquilibriumData(J=J, G=G)


def fd_input_derivative(sys, x, u):
    """Central finite-difference estimate of df/du at (x, u)."""
    eps = sys.fd_step
    hi = np.asarray(sys.step(x, u + eps), dtype=float)
    lo = np.asarray(sys.step(x, u - eps), dtype=float)
    return (hi - lo) / (2 * eps)


def input_derivative_batch(sys, X, U):
    """df/du at every (x_i, u_i): closed-form in analytic mode, FD otherwise."""
    if sys.mode == "analytic":
        if sys.input_derivative is None:
            raise DimensionError(f"{sys.name}: analytic mode needs a closed-form df/du")
        return np.array([sys.input_derivative(x, u) for x, u in zip(X, U)])
    eps = sys.fd_step
    U = np.asarray(U, dtype=float)
    return (sys.evaluate_batch(X, U + eps) - sys.evaluate_batch(X, U - eps)) / (2 * eps)


def shifted_system(sys, x_eq, u_eq, **overrides):
    """Adapter moving a non-origin equilibrium (x_eq, u_eq) to the origin.

    The wrapped map is f_hat(xh, uh) = f(xh + x_eq, uh + u_eq) - x_eq, so the
    wrapped system satisfies f_hat(0, 0) = 0 whenever f(x_eq, u_eq) = x_eq.
    Closed-form equilibrium data does not transfer automatically; pass
    replacements via keyword overrides or use black_box mode.
    """
    x_eq = np.asarray(x_eq, dtype=float)
    u_eq = float(u_eq)

    def step(x, u):
        return np.asarray(sys.step(np.asarray(x) + x_eq, u + u_eq), dtype=float) - x_eq

    fields = dict(
        n=sys.n,
        step=step,
        mode=overrides.pop("mode", "black_box"),
        fd_step=sys.fd_step,
        name=f"{sys.name}@shifted",
    )
    fields.update(overrides)
    return SystemModel(**fields)


class _ProcessAdapter:
    """Line protocol client: send "x1 ... xn u", read back "y1 ... yn"."""

    def __init__(self, argv, n):
        self.n = n
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def step(self, x, u):
        x = np.asarray(x, dtype=float).reshape(self.n)
        request = " ".join(format(v, ".17g") for v in [*x, float(u)])
        try:
            self.proc.stdin.write(request + "\n")
            self.proc.stdin.flush()
            reply = self.proc.stdout.readline()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"black-box process is gone: {exc}") from exc
        if not reply:
            raise ProtocolError("black-box process closed its output")
        parts = reply.split()
        if len(parts) != self.n:
            raise ProtocolError(f"expected {self.n} values, got {reply.strip()!r}")
        return np.array([float(p) for p in parts])

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=10)


@contextmanager
def open_process_system(command, n, fd_step=DEFAULT_FD_STEP):
    """Run an external simulator as a black-box SystemModel.

    ``command`` is a shell-style string or argv list.  The child must answer
    each request line "x1 ... xn u" with one reply line "y1 ... yn" in
    decimal text.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    adapter = _ProcessAdapter(argv, n)
    try:
        yield SystemModel(
            n=n,
            step=adapter.step,
            mode="black_box",
            fd_step=fd_step,
            name=f"process:{argv[0]}",
        )
    finally:
        adapter.close()
