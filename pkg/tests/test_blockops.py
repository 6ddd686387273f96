import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from polyops.blockops import (BlockTriple, assemble, block_diagonalize, degree_bound_check,
                              growth_subadditivity, normality_obstruction, resolvent_block_check,
                              spectrum_check, sylvester_solve)
from polyops.errors import DomainError, InputError, SingularityError
from polyops.meromorphic import growth_at
from polyops.numkernel import jordan_block
from polyops.zoo import example44_triple

from conftest import cgauss


def _separated(g, n, m):
    return cgauss(g, n, n) / np.sqrt(n) + 3, cgauss(g, m, m) / np.sqrt(m) - 3, cgauss(g, n, m)


def test_assemble_examples():
    M = assemble(BlockTriple([[2.0]], [[3.0]], [[1.0]]))
    assert np.array_equal(M, [[2, 1], [0, 3]])
    M0 = assemble(BlockTriple(np.eye(2), 2 * np.eye(3), np.zeros((2, 3))))
    assert np.array_equal(M0, np.diag([1, 1, 2, 2, 2]))
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(assemble(BlockTriple(np.zeros((0, 0)), B, np.zeros((0, 2)))), B)


def test_triple_validation():
    with pytest.raises(InputError):
        BlockTriple(np.eye(2), np.eye(3), np.ones((3, 2)))


def test_spectrum_union(g):
    assert spectrum_check(BlockTriple(*_separated(g, 8, 8))).equal
    rep = spectrum_check(BlockTriple(cgauss(g, 5, 5), cgauss(g, 4, 4), cgauss(g, 5, 4)))
    assert rep.matching_distance < 1e-7


def test_sylvester_examples():
    C = cgauss(np.random.default_rng(1), 3, 2)
    assert np.allclose(sylvester_solve(2 * np.eye(3), np.eye(2), C), C)
    X = sylvester_solve(np.diag([1.0, 2.0]), np.diag([3.0]), np.ones((2, 1)))
    assert np.allclose(X.ravel(), [-0.5, -1.0])
    assert np.array_equal(sylvester_solve(np.eye(2), 3 * np.eye(2), np.zeros((2, 2))), np.zeros((2, 2)))


def test_sylvester_against_scipy(g):
    A, B, C = _separated(g, 6, 5)
    X = sylvester_solve(A, B, C)
    # scipy solves A X + X B' = C
    assert np.allclose(X, sla.solve_sylvester(A, -B, C), atol=1e-12)


def test_sylvester_shared_eigenvalue():
    with pytest.raises(SingularityError):
        sylvester_solve(np.diag([1.0, 2.0]), np.diag([2.0]), np.ones((2, 1)))


def test_block_diagonalize_examples(g):
    d = block_diagonalize(BlockTriple(np.eye(2), 3 * np.eye(2), np.zeros((2, 2))))
    assert np.array_equal(d.X, np.zeros((2, 2))) and d.residual == 0
    d = block_diagonalize(BlockTriple([[2.0]], [[1.0]], [[5.0]]))
    assert np.allclose(d.X, [[5.0]]) and d.residual == 0
    assert np.allclose(d.conjugated, np.diag([2, 1]))
    d = block_diagonalize(BlockTriple(*_separated(g, 6, 10)))
    assert d.residual <= 1e-8


def test_resolvent_corner_examples(g):
    r = resolvent_block_check(BlockTriple(np.eye(2), 2 * np.eye(2), np.zeros((2, 2))), 5.0)
    assert np.abs(r.corner).max() == 0
    r = resolvent_block_check(BlockTriple([[2.0]], [[1.0]], [[5.0]]), 0.0)
    assert r.corner[0, 0] == pytest.approx(2.5)
    t = BlockTriple(*_separated(g, 4, 3))
    lam = 2 * np.linalg.norm(assemble(t), 2) * np.exp(0.7j)
    assert resolvent_block_check(t, lam).rel_error < 1e-10
    with pytest.raises(DomainError):
        resolvent_block_check(BlockTriple([[2.0]], [[1.0]], [[5.0]]), 2.0)


def test_degree_examples(g):
    d = degree_bound_check(BlockTriple(np.diag([1.0, 2.0]), np.diag([2.0, 3.0]), np.zeros((2, 2))))
    assert d.deg_M == 3 <= d.deg_A + d.deg_B
    J = jordan_block(0, 2)
    d = degree_bound_check(BlockTriple(J, J, np.eye(2)))
    assert d.bound_ok and d.diag_residual == 0 and d.square_residual == 0
    # direct oracle: (m_A m_B)(M) = M^4 here, whose square is M^8 = 0
    M = assemble(BlockTriple(J, J, np.eye(2)))
    assert np.abs(np.linalg.matrix_power(M, 4)).max() == 0


def test_normality_examples(g):
    Q = np.linalg.qr(cgauss(g, 3, 3))[0]
    t = BlockTriple(np.diag(cgauss(g, 2)), (Q * cgauss(g, 3)) @ Q.conj().T, np.zeros((2, 3)))
    r = normality_obstruction(t)
    assert r.M0_normal and r.normal and r.identity_residual < 1e-12
    r = normality_obstruction(BlockTriple([[0.0]], [[0.0]], [[1.0]]))
    assert not r.normal and r.identity_residual == 1.0 and r.consistent


def test_example44_window_identity():
    A, B, C = example44_triple(32)
    r = normality_obstruction(BlockTriple(A, B, C))
    # C*C + B*B - BB* vanishes up to the two boundary columns
    Bh = B.conj().T
    R = C.conj().T @ C + Bh @ B - B @ Bh
    bad = np.nonzero(np.abs(R).sum(axis=0) > 1e-12)[0]
    assert bad.size <= 2
    assert r.identity_residual <= 1.0 + 1e-12


def test_growth_budget_examples(g):
    A, B = np.diag(cgauss(g, 3)), np.diag(cgauss(g, 3))
    t0 = BlockTriple(A, B, np.zeros((3, 3)))
    for r in (1.0, 4.0, 16.0):
        TM = growth_at(assemble(t0), r)
        assert TM <= growth_at(A, r) + growth_at(B, r) + math.log(2) + 1e-9
    rep = growth_subadditivity(BlockTriple(A, B, np.eye(3)), [1.0, 4.0, 16.0])
    assert rep.holds
    J = jordan_block(0, 3)
    rep = growth_subadditivity(BlockTriple(J, J, np.eye(3)), [2.0, 8.0, 32.0])
    assert rep.holds and np.all(rep.T_M <= 8 * np.log(32) + 10)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2 ** 31))
def test_block_diagonalization_property(n, m, seed):
    g = np.random.default_rng(seed)
    t = BlockTriple(*_separated(g, n, m))
    d = block_diagonalize(t)
    assert d.sylvester_residual <= 1e-9 * max(1.0, np.linalg.norm(t.C, 2))
    S = np.block([[np.eye(n), d.X], [np.zeros((m, n)), np.eye(m)]])
    M0 = sla.block_diag(t.A, t.B)
    assert np.allclose(S @ assemble(t), M0 @ S, atol=1e-8)
