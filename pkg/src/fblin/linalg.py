"""Small dense linear algebra: spectra, rank, Sylvester solve, design checks.

Everything here operates on n <= 8 matrices, so the Sylvester equation is
solved directly in Kronecker (vectorized) form and rank comes from a full
SVD with a relative singular-value threshold.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError, SingularityError

RANK_RTOL = 1e-8          # singular values below RANK_RTOL * s_max count as zero
SPECTRUM_TOL = 1e-8       # absolute tolerance for eigenvalue coincidence
SYLVESTER_RESIDUAL_TOL = 1e-10
MAX_DIM = 8


def _as_square(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise DimensionError(f"{name} larger than {MAX_DIM}x{MAX_DIM} is unsupported")
    return m


def eigenvalues(m):
    """All eigenvalues of a small square matrix, unordered."""
    m = _as_square(m)
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc


def matrix_rank(m):
    """Rank via singular values with threshold RANK_RTOL * s_max."""
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def solve_sylvester(J, A, Q):
    """Solve J W - W A = Q for W by Kronecker vectorization.

    Requires the spectra of J and A to be disjoint; the residual of the
    returned solution is checked against SYLVESTER_RESIDUAL_TOL.
    """
    J = _as_square(J, "J")
    A = _as_square(A, "A")
    Q = np.asarray(Q, dtype=float)
    n = J.shape[0]
    if A.shape[0] != n or Q.shape != (n, n):
        raise DimensionError("J, A, Q must share one square shape")

    lam_j = eigenvalues(J)
    lam_a = eigenvalues(A)
    for la in lam_a:
        gap = np.abs(lam_j - la)
        if np.min(gap) <= SPECTRUM_TOL:
            raise SingularityError(
                f"shared eigenvalue {la:.12g} makes the Sylvester equation singular"
            )

    # row-major vec: vec(J W) = (J (x) I) w, vec(W A) = (I (x) A.T) w
    eye = np.eye(n)
    K = np.kron(J, eye) - np.kron(eye, A.T)
    w = np.linalg.solve(K, Q.ravel())
    W = w.reshape(n, n)
    residual = np.max(np.abs(J @ W - W @ A - Q))
    if residual > SYLVESTER_RESIDUAL_TOL:
        raise NumericalError(
            f"Sylvester residual {residual:.3e} exceeds {SYLVESTER_RESIDUAL_TOL:.1e}"
        )
    return W


@dataclass(frozen=True)
class DesignSpec:
    """Target closed-loop matrix A and feedback row vector c."""

    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = _as_square(self.A, "A")
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if c.shape != (A.shape[0],):
            raise DimensionError(f"c must have length {A.shape[0]}, got {c.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class AssumptionFlag:
    ok: bool
    detail: str

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class SpectralReport:
    """Verdicts of the five feasibility checks for a (system, design) pair.

    flags[0] controllability rank, flags[1] target poles inside the unit
    disc, flags[2] disjoint spectra, flags[3] no eigenvalue resonance up to
    the checked order, flags[4] observability rank of (c, A).
    """

    eigenvalues_of_A: np.ndarray
    eigenvalues_of_J: np.ndarray
    flags: tuple = field(default=())
    resonance_order_checked: int = 0
    resonance_decay_order: int | None = None

    @property
    def all_ok(self):
        return all(f.ok for f in self.flags)

    def lines(self):
        names = (
            "controllability rank",
            "target poles in unit disc",
            "disjoint spectra",
            "no eigenvalue resonance",
            "observability rank",
        )
        out = []
        for i, (name, flag) in enumerate(zip(names, self.flags), start=1):
            status = "PASS" if flag.ok else "FAIL"
            out.append(f"assumption {i} ({name}): {status} - {flag.detail}")
        return out


def _resonance_multi_indices(n, bound):
    """Yield all non-negative integer vectors m with 1 <= sum(m) <= bound."""
    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for v in range(remaining + 1):
            yield from rec(prefix + (v,), remaining - v, slots - 1)

    for total in range(1, bound + 1):
        yield from rec((), total, n)


def check_assumptions(sys, spec, resonance_bound=10):
    """Run the five solvability checks for a system/design pair.

    Failures are reported as flags with diagnostics, never raised.  The
    resonance check is truncated at ``resonance_bound``; because the target
    poles lie inside the unit disc their products decay, and the report
    carries the order beyond which products provably stay below every
    system eigenvalue magnitude.
    """
    from .system import equilibrium_data  # deferred: system imports linalg types

    if resonance_bound < 1:
        raise DimensionError("resonance_bound must be >= 1")
    eq = equilibrium_data(sys)
    J, G = eq.J, eq.G
    A, c = spec.A, spec.c
    n = A.shape[0]
    k = eigenvalues(A)
    lam = eigenvalues(J)

    # 1: controllability rank of [G | JG | ... | J^(n-1) G]
    cols = [G]
    for _ in range(n - 1):
        cols.append(J @ cols[-1])
    ctrb = np.column_stack(cols)
    r = matrix_rank(ctrb)
    f1 = AssumptionFlag(r == n, f"rank {r} of {n} for [G | JG | ...]")

    # 2: all target poles strictly inside the unit disc
    mags = np.abs(k)
    bad = [f"{v:.6g}" for v in k[mags >= 1.0]]
    f2 = AssumptionFlag(
        not bad,
        "max |k| = %.6g" % mags.max() if not bad else "poles outside unit disc: " + ", ".join(bad),
    )

    # 3: spectra of A and J disjoint
    gaps = np.abs(k[:, None] - lam[None, :])
    min_gap = gaps.min()
    f3 = AssumptionFlag(
        min_gap > SPECTRUM_TOL,
        f"min |k_i - lambda_j| = {min_gap:.3e}"
        + ("" if min_gap > SPECTRUM_TOL else " (shared eigenvalue)"),
    )

    # 4: no product of target poles equals a system eigenvalue
    hits = []
    for m in _resonance_multi_indices(n, resonance_bound):
        prod = np.prod(k**np.array(m))
        close = np.abs(lam - prod)
        j = int(np.argmin(close))
        if close[j] <= SPECTRUM_TOL:
            hits.append(f"prod k^{m} = lambda_{j + 1} = {lam[j]:.6g}")
    decay_order = None
    kmax = mags.max()
    lam_min = np.abs(lam).min()
    if kmax < 1.0 and lam_min > SPECTRUM_TOL:
        # |prod k^m| <= kmax^sum(m) < lam_min once sum(m) > log(lam_min)/log(kmax)
        decay_order = int(np.floor(np.log(lam_min) / np.log(kmax))) + 1
    f4 = AssumptionFlag(
        not hits,
        f"no resonance up to order {resonance_bound}"
        + (f"; products cannot reach any |lambda| beyond order {decay_order}" if decay_order else "")
        if not hits
        else "; ".join(hits),
    )

    # 5: observability rank of [c; cA; ...; cA^(n-1)]
    rows = [c]
    for _ in range(n - 1):
        rows.append(rows[-1] @ A)
    obsv = np.vstack(rows)
    r = matrix_rank(obsv)
    f5 = AssumptionFlag(r == n, f"rank {r} of {n} for [c; cA; ...]")

    return SpectralReport(
        eigenvalues_of_A=k,
        eigenvalues_of_J=lam,
        flags=(f1, f2, f3, f4, f5),
        resonance_order_checked=resonance_bound,
        resonance_decay_order=decay_order,
    )
