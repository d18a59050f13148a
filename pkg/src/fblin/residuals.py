"""Residuals of the linearizing-transformation functional equation.

For a transformation T-hat with parameters p, a design (A, c), and a grid of
collocation points x_i, the residual vector stacks three blocks:

    r1[i, j] = T-hat_j(f(x_i, -c . T-hat(x_i))) - A[j, :] . T-hat(x_i)
    r2[j]    = T-hat_j(0)
    r3[j, k] = d T-hat_j / d x_k (0) - jac0[j, k]

where jac0 is the pinned equilibrium Jacobian obtained from the first-order
matching condition.  The residual Jacobian with respect to the network
parameters is assembled analytically; the only system derivative it needs is
df/du along the grid, which is closed-form in analytic mode and central-FD in
black-box mode.
"""

from dataclasses import dataclass

import numpy as np

from . import network
from .errors import DomainError, InvertibilityError, NumericalError
from .linalg import solve_sylvester
from .system import input_derivative_batch

PINNING_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class PinningTarget:
    """Required Jacobian of the transformation at the equilibrium."""

    jac0: np.ndarray


def pinning_identity_residual(jac0, eq, spec):
    """Max-abs defect of the first-order matching condition for jac0."""
    lhs = jac0 @ eq.J - spec.A @ jac0
    rhs = jac0 @ np.outer(eq.G, spec.c) @ jac0
    return float(np.max(np.abs(lhs - rhs)))


def solve_pinning(eq, spec):
    """Solve the first-order matching condition for the equilibrium Jacobian.

    Solves J W - W A = G c for W and returns jac0 = inv(W); the returned
    Jacobian is verified against the quadratic matching identity.
    """
    W = solve_sylvester(eq.J, spec.A, np.outer(eq.G, spec.c))
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] <= 1e-10 * max(s[0], 1.0):
        raise InvertibilityError(
            f"first-order solve produced a singular matrix (smallest sv {s[-1]:.3e})"
        )
    jac0 = np.linalg.inv(W)
    defect = pinning_identity_residual(jac0, eq, spec)
    if defect > PINNING_IDENTITY_TOL:
        raise NumericalError(
            f"pinning identity defect {defect:.3e} exceeds {PINNING_IDENTITY_TOL:.1e}"
        )
    return PinningTarget(jac0=jac0)


@dataclass(frozen=True)
class ResidualVector:
    """The three residual blocks plus their loss weights.

    ``flatten`` concatenates the blocks scaled by sqrt(weight), so the sum of
    squares of the flat vector equals the weighted loss.
    """

    r1: np.ndarray          # (M, n)
    r2: np.ndarray          # (n,)
    r3: np.ndarray          # (n, n)
    weights: tuple = (1.0, 1.0, 1.0)

    def flatten(self):
        w1, w2, w3 = (np.sqrt(w) for w in self.weights)
        return np.concatenate([w1 * self.r1.ravel(), w2 * self.r2, w3 * self.r3.ravel()])

    def loss(self):
        v = self.flatten()
        return float(v @ v)


def _closed_loop_points(sys, spec, params, grid):
    X = np.asarray(grid, dtype=float)
    TX = network.forward_batch(params, X)
    U = -(TX @ spec.c)
    try:
        Y = sys.evaluate_batch(X, U)
    except DomainError as exc:
        bad = _first_offending(sys, X, U)
        raise DomainError(
            f"closed-loop step at collocation point {bad[0]} ({bad[1]}) "
            f"left the valid domain: {exc}"
        ) from exc
    return X, TX, U, Y


def _first_offending(sys, X, U):
    for i, (x, u) in enumerate(zip(X, U)):
        try:
            sys.step(x, u)
        except DomainError:
            return i, np.array(x)
    return -1, None


def assemble_residuals(sys, spec, params, grid, target, weights=(1.0, 1.0, 1.0)):
    """Residual blocks for a parameter set on a collocation grid."""
    X = np.asarray(grid, dtype=float).reshape(-1, sys.n)
    if X.shape[0] > 0:
        X, TX, U, Y = _closed_loop_points(sys, spec, params, X)
        TY = network.forward_batch(params, Y)
        r1 = TY - TX @ spec.A.T
    else:
        r1 = np.zeros((0, sys.n))
    r2 = network.forward(params, np.zeros(sys.n))
    r3 = network.input_jacobian(params, np.zeros(sys.n)) - target.jac0
    return ResidualVector(r1=r1, r2=r2, r3=r3, weights=tuple(weights))


def residual_jacobian(sys, spec, params, grid, target, weights=(1.0, 1.0, 1.0)):
    """Derivative of the flattened residual vector w.r.t. the flat parameters.

    Row blocks follow ResidualVector.flatten: M*n rows for r1 (point-major),
    n rows for r2, n*n rows for r3.  The r1 rows combine the direct parameter
    dependence of the outer evaluation with the feedback path through
    u = -c . T-hat(x):

        d r1[i, j] / dp = Gp_j(y_i)
                        + (dT-hat_j/dy (y_i) . df/du (x_i, u_i)) * (-c . Gp(x_i))
                        - A[j, :] . Gp(x_i)

    with Gp the parameter Jacobian of the network and y_i the closed-loop
    image of x_i.
    """
    n = sys.n
    P = params.size
    X = np.asarray(grid, dtype=float).reshape(-1, n)
    M = X.shape[0]
    rows = []
    if M > 0:
        X, TX, U, Y = _closed_loop_points(sys, spec, params, X)
        GX = network.param_jacobian_batch(params, X)       # (M, n, P)
        GY = network.param_jacobian_batch(params, Y)       # (M, n, P)
        DY = network.input_jacobian_batch(params, Y)       # (M, n, n)
        dfdu = input_derivative_batch(sys, X, U)            # (M, n)
        dudp = -np.einsum("j,mjp->mp", spec.c, GX)          # (M, P)
        # scalar chain factor per (i, j): dT-hat_j/dy . df/du
        chain = np.einsum("mjk,mk->mj", DY, dfdu)           # (M, n)
        r1_rows = GY + chain[:, :, None] * dudp[:, None, :] - np.einsum(
            "jl,mlp->mjp", spec.A, GX
        )
        rows.append(r1_rows.reshape(M * n, P))
    else:
        rows.append(np.zeros((0, P)))
    zero = np.zeros(n)
    rows.append(network.param_jacobian(params, zero))                  # r2 rows
    rows.append(network.mixed_jacobian(params, zero).reshape(n * n, P))  # r3 rows
    w1, w2, w3 = (np.sqrt(w) for w in weights)
    return np.concatenate([w1 * rows[0], w2 * rows[1], w3 * rows[2]], axis=0)


def residual_functions(sys, spec, template, grid, target, weights=(1.0, 1.0, 1.0)):
    """Flat-vector residual and Jacobian closures for the optimizer."""
    grid = np.asarray(grid, dtype=float).reshape(-1, sys.n)

    def res_fn(p):
        params = template.with_flat(p)
        return assemble_residuals(sys, spec, params, grid, target, weights).flatten()

    def jac_fn(p):
        params = template.with_flat(p)
        return residual_jacobian(sys, spec, params, grid, target, weights)

    return res_fn, jac_fn


def nfe_residual(sys, spec, transform, x):
    """Functional-equation defect of an arbitrary transformation at one state.

    Computes T(f(x, -c . T(x))) - A . T(x); zero everywhere exactly when the
    transformation solves the matching problem.
    """
    x = np.asarray(x, dtype=float)
    tx = np.asarray(transform(x), dtype=float)
    y = sys.step(x, -float(spec.c @ tx))
    return np.asarray(transform(y), dtype=float) - spec.A @ tx


def write_matrix(path, mat):
    """Decimal-text export of a residual vector or Jacobian for debugging."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w") as fh:
        for row in mat:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
