import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyops.errors import InputError, ResourceError, SingularityError
from polyops.numkernel import (MonicPoly, as_cmatrix, eigen_clusters, eigenvalues, jordan_block,
                               lu_solve, numerical_rank, op_norm, poly_eval, poly_roots,
                               polyval_matrix, singular_values)

from conftest import cgauss


def _sorted(z):
    z = np.asarray(z, complex)
    return z[np.lexsort((np.round(z.imag, 8), np.round(z.real, 8)))]


@pytest.mark.parametrize('A, expected', [
    (np.eye(5), 1.0),
    (np.diag([1.0, 2.0, 3.0]), 3.0),
    (jordan_block(0, 2), 1.0),
])
def test_op_norm(A, expected):
    assert op_norm(A) == pytest.approx(expected, abs=1e-14)


def test_eigenvalues_circulant_and_degenerate():
    C4 = np.roll(np.eye(4), 1, axis=0)
    lam = eigenvalues(C4).eigenvalues
    assert np.allclose(_sorted(lam), _sorted([1, 1j, -1, -1j]), atol=1e-12)
    assert np.allclose(eigenvalues(jordan_block(0, 3)).eigenvalues, 0, atol=1e-12)
    lam = np.sort(eigenvalues(np.diag([2.0, 2.0, 5.0])).eigenvalues.real)
    assert np.allclose(lam, [2, 2, 5])


def test_eigenvalue_cap():
    with pytest.raises(ResourceError):
        eigenvalues(np.eye(6), cap=5)


def test_lu_solve_examples():
    B = np.arange(6.0).reshape(3, 2)
    assert np.allclose(lu_solve(np.eye(3), B), B)
    assert np.allclose(lu_solve(np.diag([2.0, 4.0]), np.eye(2)), np.diag([0.5, 0.25]))
    x = lu_solve(jordan_block(1, 2), np.array([[1.0], [0.0]]))
    assert np.allclose(x.ravel(), [1, 0])


def test_lu_solve_rejects_singular():
    with pytest.raises(SingularityError):
        lu_solve(np.diag([1.0, 0.0]), np.eye(2))


@pytest.mark.parametrize('coeffs, A', [
    ([1, -1], np.eye(3)),
    ([1, 0, 0], jordan_block(0, 2)),
    ([1, 0, -1], np.diag([1.0, -1.0])),
])
def test_poly_eval_annihilates(coeffs, A):
    assert np.abs(poly_eval(MonicPoly.from_coeffs(coeffs), A)).max() < 1e-14


def test_singular_values():
    assert np.allclose(singular_values(np.diag([3.0, 1.0, 2.0])), [3, 2, 1])
    u = np.array([0.6, 0.8, 0.0])
    v = np.array([0.0, 1.0, 0.0])
    assert np.allclose(singular_values(np.outer(u, v)), [1, 0, 0], atol=1e-15)
    assert np.allclose(singular_values(jordan_block(0, 2)), [1, 0])


@pytest.mark.parametrize('coeffs, roots', [
    ([1, 0, -1], [-1, 1]),
    ([1, 0, 0, 0], [0, 0, 0]),
    ([1, -2, 2], [1 - 1j, 1 + 1j]),
])
def test_poly_roots(coeffs, roots):
    got = poly_roots(MonicPoly.from_coeffs(coeffs))
    assert np.allclose(_sorted(got), _sorted(roots), atol=1e-7)


def test_monic_construction():
    with pytest.raises(InputError):
        MonicPoly.from_coeffs([2, 1])
    with pytest.raises(InputError):
        MonicPoly(())
    p = MonicPoly.from_roots([1, 2])
    assert np.allclose(p.coeffs, [1, -3, 2])
    assert (p * MonicPoly((0,))).degree == 3


def test_as_cmatrix_rejects_bad_input():
    with pytest.raises(InputError):
        as_cmatrix([[1, np.nan]])
    with pytest.raises(InputError):
        as_cmatrix(np.ones((2, 3)), square=True)


def test_numerical_rank():
    assert numerical_rank(np.outer([1, 2, 3], [1, 0, 1])) == 1


def test_eigen_clusters_jordan_index():
    A = np.zeros((5, 5), complex)
    A[:3, :3] = jordan_block(1, 3)
    A[3:, 3:] = np.diag([2.0, 2.0])
    cl = sorted(eigen_clusters(A), key=lambda c: c.center.real)
    assert [(c.size, c.index) for c in cl] == [(3, 3), (2, 1)]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_polyval_matches_repeated_products(d, seed):
    g = np.random.default_rng(seed)
    A = cgauss(g, 5, 5)
    c = cgauss(g, d + 1)
    ref = np.zeros((5, 5), complex)
    for k, ck in enumerate(c[::-1]):
        ref += ck * np.linalg.matrix_power(A, k)
    assert np.allclose(polyval_matrix(c, A), ref, atol=1e-10 * max(1, np.abs(ref).max()))
