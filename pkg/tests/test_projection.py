import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from polyops.errors import ContourError, DomainError, LemniscateError
from polyops.numkernel import MonicPoly, jordan_block
from polyops.projection import (Circle, Lemniscate, c_theta, choose_rho, lemniscate_projections,
                                riesz_projection, split_algebraic, structure_decompose,
                                west_split)

from conftest import cgauss, similar


def eig_projection(A, inside):
    """Oracle: spectral projection from a full eigendecomposition."""
    w, V = np.linalg.eig(A)
    Vi = np.linalg.inv(V)
    keep = inside(w)
    return V[:, keep] @ Vi[keep, :]


def test_c_theta_values():
    assert 7.17 < c_theta(4) < 7.2
    assert c_theta(1.0001) > 100
    assert c_theta(9) == pytest.approx(2 + math.log(24 * math.e), abs=1e-12)
    with pytest.raises(DomainError):
        c_theta(1.0)


def test_circle_examples():
    rep = riesz_projection(np.diag([0.1, 5.0]), 1.0)
    assert np.allclose(rep.P, np.diag([1, 0]), atol=1e-12)
    assert rep.rank == 1 and rep.converged and rep.pole_count == 1
    rep = riesz_projection(jordan_block(0, 2), Circle(0.5))
    assert np.allclose(rep.P, np.eye(2), atol=1e-12)


def test_circle_against_eigenvector_oracle(g):
    A = similar(g, np.diag(np.r_[0.1 * cgauss(g, 3), 2 + cgauss(g, 3)]), cond=30)
    rep = riesz_projection(A, Circle(0.8))
    P = eig_projection(A, lambda w: np.abs(w) < 0.8)
    assert np.linalg.norm(rep.P - P, 2) < 1e-8 * np.linalg.norm(P, 2)
    inside = int(np.sum(np.abs(np.linalg.eigvals(A)) < 0.8))
    assert rep.rank == inside == rep.enclosed


def test_contour_through_eigenvalue():
    with pytest.raises(ContourError):
        riesz_projection(np.diag([1.0, 3.0]), 1.0)


def test_lemniscate_two_loops():
    rep = riesz_projection(np.diag([1.0, -1.0]), Lemniscate(MonicPoly.from_coeffs([1, 0, -1]), 0.3))
    parts = rep.extra['components']
    by_root = {round(c.extra['root'].real): c for c in parts}
    assert np.allclose(by_root[1].P, np.diag([1, 0]), atol=1e-12)
    assert np.allclose(by_root[-1].P, np.diag([0, 1]), atol=1e-12)
    assert all(c.rank == 1 for c in parts)


def test_lemniscate_past_critical_value():
    with pytest.raises(LemniscateError):
        riesz_projection(np.diag([1.0, -1.0]), Lemniscate(MonicPoly.from_coeffs([1, 0, -1]), 1.5))


def test_choose_rho_normal(g):
    Q = np.linalg.qr(cgauss(g, 8, 8))[0]
    A = (Q * np.r_[0.01 * cgauss(g, 3), 1 + cgauss(g, 5)]) @ Q.conj().T
    rho, rep = choose_rho(A, 0.1)
    assert rep.rank >= 1
    assert rep.norm == pytest.approx(1, abs=1e-8)
    assert rep.extra['norm_bound_ok'] and rep.extra['count_bound_ok']


def test_choose_rho_harmonic_diagonal():
    lam = 1 / np.arange(1.0, 33.0)
    rho, rep = choose_rho(np.diag(lam), 0.1, 4)
    assert 0.1 <= rho <= 0.2
    assert rep.pole_count == int(np.sum(lam > rho))
    assert rep.extra['log_norm'] <= rep.bound_rhs
    assert rep.pole_count < rep.extra['T'] / math.log(4)


def test_choose_rho_ill_conditioned(g):
    D = np.diag(np.r_[0.05 * np.exp(2j * np.pi * np.arange(4) / 4), 1 + 0.5 * cgauss(g, 4)])
    D[0, 4] = 1.0
    A = similar(g, D, cond=1e3)
    rho, rep = choose_rho(A, 0.1 * np.linalg.norm(A, 2))
    assert rep.extra['log_norm'] > 0
    assert rep.extra['log_norm'] <= rep.bound_rhs


def test_split_examples(g):
    A = similar(g, np.diag([2.0, 0.01]), cond=5)
    s = split_algebraic(A, 0.1)
    assert s.deg_B == 1 and s.e_radius <= 0.01 + 1e-8
    assert np.array_equal(s.B + s.E, A) or np.abs(s.B + s.E - A).max() < 1e-15

    lam = 1 / np.arange(1.0, 33.0)
    s = split_algebraic(np.diag(lam), 0.1)
    assert s.deg_B == int(np.sum(lam > s.P.rho))

    A = similar(g, np.diag([3.0, 3.0, -2.0, 2j]), cond=10)
    s = split_algebraic(A, 0.1, 4)
    assert np.abs(s.E).max() < 1e-10 and np.allclose(s.B, A, atol=1e-10)


def test_lemniscate_degree_one_is_circle(g):
    A = similar(g, np.diag(np.r_[0.05 * cgauss(g, 2), 1 + cgauss(g, 2)]), cond=10)
    L = lemniscate_projections(A, MonicPoly((0j,)), 0.3)
    C = riesz_projection(A, Circle(0.3))
    assert np.allclose(L.components[0].P, C.P, atol=1e-10)


def test_lemniscate_near_pm_one_closed_form_constants():
    A = np.diag([1.0, -1.0, 0.99, -1.01])
    L = lemniscate_projections(A, MonicPoly.from_coeffs([1, 0, -1]), 0.1)
    assert [c.rank for c in L] == [2, 2]
    # C_j = ||q(lambda_j, A)|| / (rho |p'(lambda_j)|) with q(z, A) = z + A
    for root, Cj in zip(L.roots, L.C):
        want = np.max(np.abs(root + np.diag(A))) / (0.1 * abs(2 * root))
        assert Cj == pytest.approx(want, rel=1e-8)
    assert sorted(np.round(L.C, 10)) == [10.0, 10.05]
    assert L.additivity < 1e-10 and L.bounds_ok


def test_lemniscate_additivity_random(g):
    D = np.diag(np.r_[1 + 0.05 * cgauss(g, 3), -1 + 0.05 * cgauss(g, 3), 3 + cgauss(g, 2)])
    A = similar(g, D, cond=20)
    L = lemniscate_projections(A, MonicPoly.from_coeffs([1, 0, -1]), 0.4)
    assert L.additivity < 1e-6
    P = eig_projection(A, lambda w: np.abs(w ** 2 - 1) < 0.4)
    assert np.linalg.norm(L.total.P - P, 2) < 1e-8 * np.linalg.norm(P, 2)


def test_structure_block_diagonal_input():
    A = sla.block_diag(jordan_block(1, 2), jordan_block(-1, 2))
    rep = structure_decompose(A, MonicPoly.from_coeffs([1, 0, -1]), 0.2)
    assert rep.sizes == (0, 2, 2)
    assert rep.residual < 1e-12 and rep.radius_ok


def test_structure_collects_far_eigenvalues(g):
    D = np.diag(np.r_[1 + 0.02 * cgauss(g, 2), -1 + 0.02 * cgauss(g, 2), 3.0, 4.0, 2j])
    A = similar(g, D, cond=50)
    rep = structure_decompose(A, MonicPoly.from_coeffs([1, 0, -1]), 0.3)
    assert rep.sizes[0] == 3 and sum(rep.sizes) == 7
    assert rep.residual < 1e-6 and rep.a0_residual < 1e-8


def test_west_split_examples(g):
    Q = np.linalg.qr(cgauss(g, 5, 5))[0]
    A = (Q * cgauss(g, 5)) @ Q.conj().T
    assert np.abs(west_split(A).Q).max() < 1e-12
    N, Qn, _ = west_split(jordan_block(2.0, 3))
    assert np.allclose(N, 2 * np.eye(3)) and np.allclose(Qn, jordan_block(0, 3))
    A = cgauss(g, 8, 8)
    N, Qn, _ = west_split(A)
    assert np.linalg.norm(N + Qn - A, 2) < 1e-12 * 8 * np.linalg.norm(A, 2)
    assert np.abs(np.linalg.matrix_power(Qn, 8)).max() < 1e-8
    assert np.linalg.norm(N @ N.conj().T - N.conj().T @ N) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2 ** 31))
def test_projection_is_idempotent_and_commutes(k, m, seed):
    g = np.random.default_rng(seed)
    D = np.diag(np.r_[0.3 * cgauss(g, k) / 3, 2 * np.exp(2j * np.pi * g.random(m))])
    A = similar(g, D, cond=10)
    rep = riesz_projection(A, 1.0)
    P = rep.P
    scale = max(1.0, np.linalg.norm(P, 2)) * np.linalg.norm(A, 2)
    assert rep.idem_residual < 1e-6 and rep.rank == k
    assert np.linalg.norm(A @ P - P @ A, 2) < 1e-8 * scale
