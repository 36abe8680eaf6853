import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from subdivforms import meshgen
from subdivforms.errors import IndefiniteMass, NotSpd
from subdivforms.fem import assemble_curlcurl, assemble_mass, eliminate_boundary
from subdivforms.solvers import (count_in_interval, inertia, solve_gevp, solve_gevp_dense,
                                 solve_spd)


def random_pair(n, rank, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((rank, n))
    C = B.T @ B
    Q = rng.standard_normal((n, n))
    M = Q @ Q.T / n + np.eye(n)
    return sparse.csr_matrix(C), sparse.csr_matrix(M)


def test_scalar():
    spec = solve_gevp(sparse.csr_matrix([[2.0]]), sparse.csr_matrix([[1.0]]), 1)
    assert spec.eigenvalues.tolist() == [2.0]
    assert spec.zero_count == 0


def test_dense_vs_iterative():
    C, M = random_pair(50, 30, 7)
    d = solve_gevp_dense(C, M, 8)
    s = solve_gevp(C, M, 8, sigma=1e-3, method="arpack")
    assert s.meta["method"] == "arpack-shift-invert"
    assert d.zero_count == s.zero_count == 20
    assert np.allclose(s.eigenvalues, d.eigenvalues, rtol=1e-9, atol=0)


def test_single_dof_maxwell():
    sq = meshgen.two_triangle_square()
    inner = ~sq.boundary_edges
    M = eliminate_boundary(assemble_mass(sq, 1), inner).matrix
    C = eliminate_boundary(assemble_curlcurl(sq), inner).matrix
    spec = solve_gevp(C, M, 1)
    assert np.isclose(spec.eigenvalues[0], C[0, 0] / M[0, 0], rtol=1e-14)


def test_two_shifts_agree():
    m = meshgen.structured_square(6, bounds=(0, 0, np.pi, np.pi))
    inner = ~m.boundary_edges
    M = eliminate_boundary(assemble_mass(m, 1), inner).matrix
    C = eliminate_boundary(assemble_curlcurl(m), inner).matrix
    a = solve_gevp(C, M, 10, sigma=0.5, method="arpack")
    b = solve_gevp(C, M, 10, sigma=0.25, method="arpack")
    assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-9, atol=0)
    assert a.zero_count == (~m.boundary_vertices).sum()


def test_shift_moves_below_eigenvalue():
    C, M = random_pair(60, 40, 3)
    d = solve_gevp_dense(C, M, 5)
    s = solve_gevp(C, M, 5, sigma=10 * d.eigenvalues[2], method="arpack")
    assert s.meta["n_below_shift"] > s.zero_count
    assert np.allclose(s.eigenvalues, d.eigenvalues, rtol=1e-9)


def test_indefinite_mass():
    C = sparse.identity(300, format="csr")
    M = sparse.diags(np.r_[np.ones(299), -1.0]).tocsr()
    with pytest.raises(IndefiniteMass):
        solve_gevp(C, M, 3)


def test_inertia():
    A = sparse.diags([-2.0, 0.0, 1.0, 3.0, 5.0]).tocsr()
    assert inertia(A) == (1, 1, 3)
    C, M = random_pair(40, 25, 1)
    w = np.sort(np.linalg.eigvals(np.linalg.solve(M.toarray(), C.toarray())).real)
    assert count_in_interval(C, M, 1e-8, w[20] + 1e-9) == (w[15:21] > 1e-8).sum()


def test_spd_identity():
    b = np.arange(5.0)
    assert np.array_equal(solve_spd(sparse.identity(5), b), b)


def test_spd_mass_consistency():
    M = assemble_mass(meshgen.single_triangle(), 0).matrix
    x = solve_spd(M, M @ np.ones(3))
    assert np.abs(x - 1).max() <= 1e-13


def test_spd_direct_vs_cg(rng):
    Q = rng.standard_normal((100, 100))
    A = sparse.csr_matrix(Q @ Q.T + 100 * np.eye(100))
    b = rng.standard_normal(100)
    x1 = solve_spd(A, b)
    x2 = solve_spd(A, b, method="cg")
    assert np.abs(x1 - x2).max() <= 1e-10 * np.abs(x1).max()


def test_spd_errors():
    with pytest.raises(NotSpd):
        solve_spd(sparse.csr_matrix([[1.0, 2.0], [0.0, 1.0]]), np.ones(2))
    with pytest.raises(NotSpd):
        solve_spd(sparse.csr_matrix([[-1.0, 0.0], [0.0, 1.0]]), np.ones(2))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_permutation_invariance(seed):
    C, M = random_pair(30, 18, seed % 1000)
    p = np.random.default_rng(seed).permutation(30)
    a = solve_gevp_dense(C, M, 6)
    b = solve_gevp_dense(C[p][:, p], M[p][:, p], 6)
    assert a.zero_count == b.zero_count
    assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-9)
