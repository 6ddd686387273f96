import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyops.errors import InputError
from polyops.meromorphic import (FiniteRankG, T_one, growth_at, log_plus, loglog_slope,
                                 poles_of_resolvent, resolvent_growth, schatten_growth_bound,
                                 total_log_size, verify_finite_rank_bound, verify_inversion,
                                 verify_rank1_bound)
from polyops.numkernel import jordan_block

from conftest import cgauss


def test_zero_matrix_has_no_growth():
    g = resolvent_growth(np.zeros((3, 3)), [0.5, 2, 50], 256)
    assert np.all(g.m_inf == 0) and np.all(g.N_inf == 0) and np.all(g.T_inf == 0)


def test_scalar_one():
    radii = [0.5, 3.0, 30.0, 300.0]
    g = resolvent_growth(np.eye(1), radii, 1024)
    assert np.allclose(g.N_inf, log_plus(g.radii))
    # m is the mean of log+ 1/|1 - z|; it decays like 1/r
    assert np.all(np.abs(g.T_inf - log_plus(g.radii)) < 1.0)


def test_identity_minus_diagonal():
    alphas = np.array([0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.5, 2.5])
    A = np.eye(8) - np.diag(alphas)
    for r in (2.0, 10.0, 100.0):
        want = float(np.sum(log_plus(np.abs(1 - alphas) * r)))
        assert abs(growth_at(A, r, 1024) - want) < 2.0


def test_curve_invariants(g):
    A = cgauss(g, 7, 7)
    c = resolvent_growth(A, np.geomspace(0.3, 40, 9), 512)
    assert np.allclose(c.T_inf, c.m_inf + c.N_inf)
    assert np.all(c.m_inf >= 0) and np.all(np.diff(c.N_inf) >= 0)
    assert len(c.rows()) == 9


def test_pole_orders_of_jordan_block():
    P = poles_of_resolvent(jordan_block(2.0, 3))
    assert np.allclose(P.poles, [0.5]) and list(P.orders) == [3]
    assert len(poles_of_resolvent(jordan_block(0, 3))) == 0


def test_radius_validation():
    with pytest.raises(InputError):
        resolvent_growth(np.eye(2), [-1.0])


@pytest.mark.parametrize('A, want', [
    (np.diag([0.9, 0.5]), 0.0),
    (np.diag([math.e ** 2, math.e, 0.5]), 3.0),
    (math.e ** 3 * np.outer([1, 0, 0], [0, 1, 0]), 3.0),
])
def test_total_log_size(A, want):
    assert total_log_size(A) == pytest.approx(want)


def test_T_one_trivial_and_rank_one():
    assert T_one(lambda z: np.eye(3), 5.0, 64) == 0.0
    u = np.array([1.0, 0, 0])
    v = np.array([0, 1.0, 0])
    for r in (0.5, 4.0, 40.0):
        got = T_one(lambda z: np.eye(3) + z * np.outer(u, v), r, 256)
        assert got == pytest.approx(math.asinh(r / 2), abs=1e-10)


def test_inversion_zero_and_scalar():
    G0 = FiniteRankG(np.zeros((3, 1)), np.zeros((3, 1)), np.zeros((2, 1, 1)))
    rep = verify_inversion(G0, 2.0, 256)
    assert rep['lhs'] == 0 and rep['rhs'] == 0
    e1 = np.eye(3)[:, :1]
    G = FiniteRankG(e1, e1, np.array([0.0, 3.0]))
    rep = verify_inversion(G, 2.0, 2048)
    # Jensen: mean log|1 + 3z| = log 6 on r = 2, with the zero at -1/3 inside
    assert rep['lhs'] == pytest.approx(math.log(6), abs=1e-12)
    assert abs(rep['gap']) < 0.05


def test_inversion_random_rank_two(g):
    C = np.zeros((3, 2, 2), complex)
    C[1:] = cgauss(g, 2, 2, 2)
    G = FiniteRankG(cgauss(g, 6, 2) / 2, cgauss(g, 6, 2) / 2, C)
    assert abs(verify_inversion(G, 2.0)['gap']) < 0.1


def test_finite_rank_g_validation():
    with pytest.raises(InputError):
        FiniteRankG(np.ones((3, 1)), np.ones((3, 1)), np.array([1.0, 1.0]))


def test_rank_one_examples(g):
    A = np.diag(1 / np.arange(1.0, 9.0))
    assert verify_rank1_bound(A, np.zeros(8), np.zeros(8), 10.0).passed
    e1 = np.eye(8)[0]
    assert verify_rank1_bound(A, e1, e1, 10.0).passed
    assert verify_rank1_bound(jordan_block(0, 8), cgauss(g, 8), cgauss(g, 8), 4.0).passed


def test_finite_rank_examples(g):
    A = np.diag(1 / np.arange(1.0, 17.0))
    assert verify_finite_rank_bound(A, np.zeros((16, 16)), 8.0).passed
    B = cgauss(g, 16, 2) @ cgauss(g, 2, 16)
    B /= np.linalg.norm(B, 2)
    assert verify_finite_rank_bound(A, B, 8.0).passed
    B3 = cgauss(g, 16, 3) @ cgauss(g, 3, 16)
    rep = verify_finite_rank_bound(jordan_block(0, 16), B3, 4.0)
    assert rep.passed and rep.detail['rank'] == 3


def test_schatten_examples(g):
    rep = schatten_growth_bound(np.zeros((4, 4)), 1.0, 4.0)
    assert rep.lhs == 0 and rep.rhs == 0
    assert schatten_growth_bound(np.diag([0.5, 0.25]), 1.0, 4.0).passed
    B = cgauss(g, 16, 16)
    B /= np.linalg.norm(np.linalg.svd(B, compute_uv=False), 2)
    assert schatten_growth_bound(B, 2.0, 6.0).passed
    with pytest.raises(InputError):
        schatten_growth_bound(B, 0.0, 1.0)


def test_loglog_slope():
    r = np.geomspace(1, 100, 5)
    assert loglog_slope(r, 3 * r ** 0.5) == pytest.approx(0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.floats(0.5, 16.0), st.integers(0, 2 ** 31))
def test_growth_of_similar_matrices_agree_up_to_condition(n, r, seed):
    # T changes by at most log cond(V) under similarity
    g = np.random.default_rng(seed)
    A = cgauss(g, n, n)
    V = np.eye(n) + 0.2 * cgauss(g, n, n)
    cond = np.linalg.cond(V)
    B = V @ A @ np.linalg.inv(V)
    assert abs(growth_at(A, r, 256) - growth_at(B, r, 256)) <= math.log(cond) + 1e-6
