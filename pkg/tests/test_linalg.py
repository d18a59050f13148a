import numpy as np
import pytest

from fblin.errors import DimensionError, SingularityError
from fblin.linalg import (
    DesignSpec,
    check_assumptions,
    eigenvalues,
    matrix_rank,
    solve_sylvester,
)
from fblin.system import benchmark_design, benchmark_system

J_BENCH = np.array([[0.5, 0.4], [0.5, 0.9]])
A_BENCH = np.array([[0.5, 0.3], [0.5, 0.4]])


def sorted_real(vals):
    return np.sort_complex(np.asarray(vals)).real


def test_eigenvalues_of_plant_jacobian_4dp():
    lam = sorted_real(eigenvalues(J_BENCH))
    assert lam == pytest.approx([0.2101, 1.1899], abs=5e-5)


def test_eigenvalues_of_target_matrix_4dp():
    k = sorted_real(eigenvalues(A_BENCH))
    assert k == pytest.approx([0.0595, 0.8405], abs=5e-5)


def test_eigenvalues_identity():
    assert sorted_real(eigenvalues(np.eye(2))) == pytest.approx([1.0, 1.0])


def test_eigenvalues_rejects_non_square():
    with pytest.raises(DimensionError):
        eigenvalues(np.zeros((2, 3)))


def test_transpose_has_same_spectrum(rng):
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        a = np.sort_complex(eigenvalues(m))
        b = np.sort_complex(eigenvalues(m.T))
        assert np.allclose(a, b, atol=1e-9)


def test_sylvester_benchmark_solution():
    Q = np.array([[0.5, 0.0], [0.0, 0.0]])   # G c for the benchmark design
    W = solve_sylvester(J_BENCH, A_BENCH, Q)
    # oracle: direct multiplication
    assert np.max(np.abs(J_BENCH @ W - W @ A_BENCH - Q)) <= 1e-10
    assert W == pytest.approx(np.array([[1.0, -1.0], [0.0, 1.0]]), abs=1e-9)


def test_sylvester_shared_spectrum_rejected():
    with pytest.raises(SingularityError):
        solve_sylvester(J_BENCH, J_BENCH, np.eye(2))


def test_sylvester_zero_rhs():
    W = solve_sylvester(J_BENCH, A_BENCH, np.zeros((2, 2)))
    assert np.max(np.abs(W)) <= 1e-12


def test_sylvester_residual_property(rng):
    for _ in range(20):
        J = rng.standard_normal((3, 3))
        A = rng.standard_normal((3, 3)) + 10.0 * np.eye(3)  # well-separated spectra
        Q = rng.standard_normal((3, 3))
        W = solve_sylvester(J, A, Q)
        assert np.max(np.abs(J @ W - W @ A - Q)) <= 1e-10


def test_matrix_rank_threshold():
    m = np.diag([1.0, 1e-4, 1e-12])
    assert matrix_rank(m) == 2


def test_assumptions_all_pass_on_benchmark():
    report = check_assumptions(benchmark_system(), benchmark_design(), resonance_bound=10)
    assert report.all_ok
    assert report.resonance_order_checked == 10
    assert len(report.flags) == 5
    assert len(report.lines()) == 5


def test_assumption2_fails_for_unstable_pole():
    spec = DesignSpec(A=np.array([[1.2, 0.0], [0.0, 0.5]]), c=np.array([1.0, 0.0]))
    report = check_assumptions(benchmark_system(), spec)
    assert not report.flags[1].ok
    assert "1.2" in report.flags[1].detail


def test_assumption3_fails_for_shared_spectrum():
    spec = DesignSpec(A=J_BENCH, c=np.array([1.0, 0.0]))
    report = check_assumptions(benchmark_system(), spec)
    assert not report.flags[2].ok


def test_assumption5_fails_for_zero_row():
    spec = DesignSpec(A=A_BENCH, c=np.array([0.0, 0.0]))
    report = check_assumptions(benchmark_system(), spec)
    assert not report.flags[4].ok


def test_resonance_bound_one_reduces_to_disjointness():
    # with sum(m) = 1 the products are exactly the k_i, so assumption 4
    # holds iff no k_i equals a lambda_j, which assumption 3 also checks
    sysm = benchmark_system()
    for A in (A_BENCH, J_BENCH, np.diag([0.2101, 0.3])):
        report = check_assumptions(sysm, DesignSpec(A=A, c=np.array([1.0, 0.0])),
                                   resonance_bound=1)
        assert report.flags[3].ok == report.flags[2].ok


def test_design_spec_validates_shapes():
    with pytest.raises(DimensionError):
        DesignSpec(A=A_BENCH, c=np.array([1.0, 0.0, 0.0]))
    with pytest.raises(DimensionError):
        DesignSpec(A=np.zeros((2, 3)), c=np.array([1.0, 0.0]))


def test_resonance_detects_direct_hit():
    sysm = benchmark_system()
    lam = np.sort_complex(eigenvalues(np.array([[0.5, 0.4], [0.5, 0.9]]))).real
    # diagonal A with k_1 exactly equal to the small plant eigenvalue
    spec = DesignSpec(A=np.diag([lam[0], 0.9]), c=np.array([1.0, 1.0]))
    report = check_assumptions(sysm, spec, resonance_bound=3)
    assert not report.flags[3].ok
