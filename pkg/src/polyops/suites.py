"""
Randomised verification suites shared by ``polyops verify`` and the tests.

Each suite returns a list of assertion records
``{name, anchor, lhs, rhs, pass}`` where ``pass`` means ``lhs <= rhs``
(after the stated tolerance has been folded into ``rhs``).  Instances are
drawn from a generator seeded once per suite, so a suite is reproducible
from its seed alone.
"""

import math

import numpy as np
import scipy.linalg as sla

from .blockops import (BlockTriple, block_diagonalize, degree_bound_check, spectrum_check,
                       sylvester_solve)
from .meromorphic import (FiniteRankG, schatten_growth_bound, verify_finite_rank_bound,
                          verify_inversion, verify_rank1_bound)
from .numkernel import jordan_block, op_norm, rng
from .projection import choose_rho

__all__ = ['growth_suite', 'projection_suite', 'block_suite', 'SUITES', 'assertion']


def assertion(name, anchor, lhs, rhs, ok=None):
    lhs, rhs = float(lhs), float(rhs)
    return {'name': name, 'anchor': anchor, 'lhs': lhs, 'rhs': rhs,
            'pass': bool(lhs <= rhs) if ok is None else bool(ok)}


def _cgauss(g, *shape):
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / math.sqrt(2)


def _random_matrix(g, n):
    return _cgauss(g, n, n) * g.uniform(0.2, 2.0) / math.sqrt(n)


def growth_suite(count=100, seed=None, M=1024, tol=0.1, tol_scale=1.0):
    """Rank-one, finite-rank, Schatten and inversion checks on random data."""
    g = rng(seed)
    tol = tol * tol_scale
    out = []
    for i in range(count):
        n = int(g.integers(4, 33))
        r = float(np.exp(g.uniform(math.log(0.5), math.log(16.0))))
        A = _random_matrix(g, n)

        a, b = _cgauss(g, n), _cgauss(g, n) * g.uniform(0.1, 2.0)
        rep = verify_rank1_bound(A, a, b, r, M, tol)
        out.append(assertion(f'rank1[{i}]', 'rank-one perturbation growth bound',
                             rep.lhs, rep.rhs + tol))

        q = int(g.integers(1, 4))
        Bf = _cgauss(g, n, q) @ _cgauss(g, q, n) * g.uniform(0.05, 1.0) / n
        rep = verify_finite_rank_bound(A, Bf, r, M, tol)
        out.append(assertion(f'finite_rank[{i}]', 'finite-rank perturbation growth bound',
                             rep.lhs, rep.rhs + tol))

        p = float(g.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
        Bs = _random_matrix(g, n)
        rep = schatten_growth_bound(Bs, p, r, M, tol)
        out.append(assertion(f'schatten[{i}]', 'Schatten class growth bound',
                             rep.lhs, rep.rhs + tol))

        D = int(g.integers(1, 3))
        coeffs = np.zeros((D + 1, q, q), complex)
        coeffs[1:] = _cgauss(g, D, q, q) * 0.5
        G = FiniteRankG(_cgauss(g, n, q) / math.sqrt(n), _cgauss(g, n, q) / math.sqrt(n), coeffs)
        rep = verify_inversion(G, r, M)
        out.append(assertion(f'inversion[{i}]', 'T1 inversion identity',
                             abs(rep['gap']), rep['tol'] * tol_scale))
    return out


def _projection_matrix(g, i):
    n = int(g.integers(4, 33))
    kind = i % 3
    if kind == 0:
        # normal: unitary conjugate of a diagonal
        lam = _cgauss(g, n) * g.uniform(0.3, 2.0)
        Q, _ = np.linalg.qr(_cgauss(g, n, n))
        return (Q * lam) @ Q.conj().T
    if kind == 1:
        return _random_matrix(g, n)
    # similarity of a diagonal with condition about 1e3
    lam = _cgauss(g, n)
    U, _ = np.linalg.qr(_cgauss(g, n, n))
    W, _ = np.linalg.qr(_cgauss(g, n, n))
    s = np.geomspace(1.0, 1e-3, n)
    V = (U * s) @ W
    return V @ np.diag(lam) @ np.linalg.inv(V)


def projection_suite(count=100, seed=None, theta=4.0, tol=0.1, tol_scale=1.0):
    """Projection-norm and eigenvalue-count bounds at the selected radius."""
    g = rng(seed)
    tol = tol * tol_scale
    out = []
    for i in range(count):
        A = _projection_matrix(g, i)
        eps = 0.1 * op_norm(A) * g.uniform(0.5, 3.0)
        rho, rep = choose_rho(A, eps, theta)
        ex = rep.extra
        out.append(assertion(f'norm[{i}]', 'projection norm bound log||P|| <= C(theta) T',
                             ex['log_norm'], rep.bound_rhs + tol))
        out.append(assertion(f'count[{i}]', 'eigenvalue count bound n < T / log theta',
                             rep.pole_count, ex['T'] / math.log(theta) + tol))
        if rep.converged:
            out.append(assertion(f'idempotent[{i}]', 'Riesz projection P^2 = P',
                                 rep.idem_residual, 1e-6 * tol_scale))
    return out


def _algebraic_block(g, n):
    """Similarity of a Jordan matrix with few distinct eigenvalues."""
    k = int(g.integers(1, 4))
    centers = _cgauss(g, k) * 2
    sizes = []
    left = n
    while left > 0:
        s = int(g.integers(1, min(3, left) + 1))
        sizes.append(s)
        left -= s
    J = sla.block_diag(*[jordan_block(centers[j % k], s) for j, s in enumerate(sizes)])
    U, _ = np.linalg.qr(_cgauss(g, n, n))
    W, _ = np.linalg.qr(_cgauss(g, n, n))
    V = (U * np.geomspace(1.0, 0.1, n)) @ W
    return V @ J @ np.linalg.inv(V)


def block_suite(count=100, seed=None, tol_scale=1.0):
    """Sylvester, block diagonalisation, spectrum and degree checks."""
    g = rng(seed)
    out = []
    for i in range(count):
        n, m = int(g.integers(2, 17)), int(g.integers(2, 17))
        A = _random_matrix(g, n) + 3.0
        B = _random_matrix(g, m) - 3.0
        C = _cgauss(g, n, m)
        X = sylvester_solve(A, B, C)
        res = op_norm(A @ X - X @ B - C)
        out.append(assertion(f'sylvester[{i}]', 'Sylvester equation AX - XB = C',
                             res, 1e-9 * op_norm(C) * tol_scale))
        t = BlockTriple(A, B, C)
        d = block_diagonalize(t)
        out.append(assertion(f'block_diag[{i}]', 'block diagonalisation by the Sylvester solution',
                             d.residual, 1e-8 * tol_scale))
        sp = spectrum_check(t)
        out.append(assertion(f'spectrum[{i}]', 'spectrum of M_C is the union of the diagonal spectra',
                             sp.matching_distance, sp.tol * tol_scale))
        na, nb = int(g.integers(2, 7)), int(g.integers(2, 7))
        ta = BlockTriple(_algebraic_block(g, na), _algebraic_block(g, nb), _cgauss(g, na, nb))
        dg = degree_bound_check(ta)
        out.append(assertion(f'degree[{i}]', 'deg M_C <= 2 (deg A + deg B)',
                             dg.deg_M, 2 * (dg.deg_A + dg.deg_B)))
        out.append(assertion(f'corner_only[{i}]', '(m_A m_B)(M_C) has zero diagonal blocks',
                             dg.diag_residual, 1e-8 * tol_scale))
        out.append(assertion(f'square_zero[{i}]', '((m_A m_B)(M_C))^2 = 0',
                             dg.square_residual, 1e-8 * tol_scale))
    return out


SUITES = {'growth': growth_suite, 'projection': projection_suite, 'block': block_suite}
