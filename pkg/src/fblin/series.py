"""Multivariate power-series baseline for the linearizing transformation.

The series for each output l is

    T_l(x) = sum_e  coeff[l, e] * x^e / (e_1! ... e_n!)

over exponent tuples e with 1 <= |e| <= order, in graded-lexicographic
order.  The factorial convention makes the stored coefficients directly
comparable to Taylor derivatives at the origin, and the missing constant
term enforces T(0) = 0 structurally.  The linear block is pinned to the
first-order solve; higher orders are fitted by nonlinear least squares on
the same functional-equation residual the network training uses.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DimensionError
from .lm import LmSettings, minimize
from .residuals import solve_pinning
from .system import input_derivative_batch


def monomial_exponents(n, order):
    """Exponent tuples with total degree 1..order, graded-lex order."""
    if order < 1:
        raise DimensionError("series order must be >= 1")

    def rec(slots, total):
        if slots == 1:
            yield (total,)
            return
        for v in range(total, -1, -1):
            for rest in rec(slots - 1, total - v):
                yield (v,) + rest

    out = []
    for degree in range(1, order + 1):
        out.extend(rec(n, degree))
    return tuple(out)


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficient table (n_outputs, n_monomials) over a shared exponent basis."""

    n: int
    order: int
    exponents: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.n, len(self.exponents)):
            raise DimensionError(
                f"coefficients shape {coeffs.shape} does not match basis "
                f"({self.n}, {len(self.exponents)})"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, n, order):
        exps = monomial_exponents(n, order)
        return cls(n=n, order=order, exponents=exps, coeffs=np.zeros((n, len(exps))))

    def linear_block(self):
        """The (n, n) matrix of first-degree coefficients, i.e. dT/dx(0)."""
        block = np.zeros((self.n, self.n))
        for m, e in enumerate(self.exponents):
            if sum(e) == 1:
                block[:, e.index(1)] = self.coeffs[:, m]
        return block

    def as_transform(self):
        return lambda x: evaluate_series(self, x)

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("output,exponents,coefficient\n")
            for l in range(self.n):
                for e, v in zip(self.exponents, self.coeffs[l]):
                    fh.write(f"{l + 1},{' '.join(map(str, e))},{format(v, '.17g')}\n")


def _scales(exponents):
    return np.array([1.0 / np.prod([factorial(v) for v in e]) for e in exponents])


def _features(exponents, X):
    """Monomial features x^e / prod(e!), shape (M, n_monomials)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = [
        scale * np.prod([X[:, i] ** e[i] for i in range(X.shape[1])], axis=0)
        for e, scale in zip(exponents, _scales(exponents))
    ]
    return np.column_stack(cols)


def _feature_gradients(exponents, X):
    """d(features)/dx, shape (M, n_monomials, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    M, n = X.shape
    out = np.zeros((M, len(exponents), n))
    for m, (e, scale) in enumerate(zip(exponents, _scales(exponents))):
        for k in range(n):
            if e[k] == 0:
                continue
            term = np.full(M, float(e[k]) * scale)
            for i in range(n):
                power = e[i] - (1 if i == k else 0)
                if power:
                    term = term * X[:, i] ** power
            out[:, m, k] = term
    return out


def evaluate_series(series, x):
    """Series value at a single state (length-n vector)."""
    phi = _features(series.exponents, np.asarray(x, dtype=float).reshape(1, -1))
    return (phi @ series.coeffs.T)[0]


def evaluate_series_batch(series, X):
    return _features(series.exponents, X) @ series.coeffs.T


def first_order_block(eq, spec):
    """Jacobian of the transformation at the equilibrium (shared with pinning)."""
    return solve_pinning(eq, spec).jac0


def series_residual_functions(sys, spec, grid, target, order):
    """Flat-coefficient residual and Jacobian closures for the series fit.

    The residual stacks the functional-equation rows over the grid and the
    first-order pinning rows (flat layout: coefficients of output 1, then
    output 2, ...).  The Jacobian follows the same chain rule as the network
    residual: the feedback path enters through u = -c . T-hat(x).
    """
    n = sys.n
    X = np.asarray(grid, dtype=float).reshape(-1, n)
    exponents = monomial_exponents(n, order)
    m = len(exponents)
    A, c = spec.A, spec.c

    linear_idx = np.full((n,), -1, dtype=int)
    for i, e in enumerate(exponents):
        if sum(e) == 1:
            linear_idx[e.index(1)] = i

    def unpack(h):
        return h.reshape(n, m)

    def res_fn(h):
        C = unpack(h)
        TX = _features(exponents, X) @ C.T
        U = -(TX @ c)
        Y = sys.evaluate_batch(X, U)
        TY = _features(exponents, Y) @ C.T
        r1 = TY - TX @ A.T
        pin = C[:, linear_idx] - target.jac0
        return np.concatenate([r1.ravel(), pin.ravel()])

    def jac_fn(h):
        C = unpack(h)
        PhiX = _features(exponents, X)
        TX = PhiX @ C.T
        U = -(TX @ c)
        Y = sys.evaluate_batch(X, U)
        PhiY = _features(exponents, Y)
        dPhiY = _feature_gradients(exponents, Y)
        dfdu = input_derivative_batch(sys, X, U)
        M_ = X.shape[0]
        # dT_j/dy (y_i) . df/du (x_i): via the series gradient at y
        gradTY = np.einsum("jm,imk->ijk", C, dPhiY)
        chain = np.einsum("ijk,ik->ij", gradTY, dfdu)
        dudh = -np.einsum("l,im->ilm", c, PhiX).reshape(M_, n * m)
        rows = np.zeros((M_, n, n, m))
        idx = np.arange(n)
        rows[:, idx, idx, :] = PhiY[:, None, :]
        rows -= np.einsum("jl,im->ijlm", A, PhiX)
        rows = rows.reshape(M_, n, n * m)
        rows += chain[:, :, None] * dudh[:, None, :]
        pin_rows = np.zeros((n * n, n * m))
        for j in range(n):
            for k in range(n):
                pin_rows[j * n + k, j * m + linear_idx[k]] = 1.0
        return np.concatenate([rows.reshape(M_ * n, n * m), pin_rows], axis=0)

    return res_fn, jac_fn, linear_idx


def fit_series(sys, spec, grid, target, order=6, settings=LmSettings()):
    """Least-squares fit of the series coefficients on a collocation grid.

    Minimizes the functional-equation residual over the grid, with the
    first-order coefficients softly pinned to the equilibrium Jacobian
    (T(0) = 0 is structural).  Works in analytic and black-box system modes;
    the initial guess has the pinned linear block and zero higher orders.
    Returns the coefficients and the optimizer result.
    """
    n = sys.n
    exponents = monomial_exponents(n, order)
    res_fn, jac_fn, linear_idx = series_residual_functions(sys, spec, grid, target, order)
    init = np.zeros((n, len(exponents)))
    init[:, linear_idx] = target.jac0
    result = minimize(res_fn, jac_fn, init.ravel(), settings)
    return SeriesCoefficients(
        n=n, order=order, exponents=exponents,
        coeffs=result.final_params.reshape(n, len(exponents)),
    ), result
