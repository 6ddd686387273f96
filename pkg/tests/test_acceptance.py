"""
Acceptance suite: one test, and one printed pass/fail line, per criterion.

Tolerances are fixed here and are never adjusted to make a result pass.
"""

import numpy as np
import scipy.linalg as sla

from polyops.capacity import cheb_min
from polyops.classify import (circle_flat_check, identity_defect_search, poly_unitary_search,
                              simplifying_polynomial)
from polyops.multicentric import decompose, eval_phi
from polyops.numkernel import jordan_block, polyval_matrix
from polyops.projection import c_theta
from polyops.suites import block_suite, growth_suite, projection_suite
from polyops.zoo import OperatorSpec, make, verify_example

from conftest import cgauss, lp_minimax, record, similar

SEED = 0


def _checks_pass(rep):
    return all(c.passed for c in rep.checks)


def _summary(assertions):
    fails = [a['name'] for a in assertions if not a['pass']]
    slack = min(a['rhs'] - a['lhs'] for a in assertions)
    return fails, f'{len(assertions)} assertions, {len(fails)} failures, min slack {slack:.3g}'


def test_criterion_01_c_theta():
    c = c_theta(4)
    ok = 7.17 < c < 7.20
    assert record(1, 'C(4) < 7.2', ok, f'C(4) = {c:.6f}, window (7.17, 7.20)')


def test_criterion_02_circulant_norms():
    rep = verify_example(OperatorSpec('circulant-sum', {'blocks': (2, 12)}))
    dev, per = rep.checks[0].value, rep.checks[1].value
    ok = dev < 1e-9 and per < 1e-12
    assert record(2, 'circulant norms', ok,
                  f'max_k | ||A^k|| - 2 | = {dev:.2e} (< 1e-9), max ||A_n^n - I|| = {per:.2e} (< 1e-12)')


def test_criterion_03_alternating_identity():
    errs = []
    for rho in (1.0, 0.5):
        rep = verify_example(OperatorSpec('alternating', {'lambda1': 1, 'lambda2': -1, 'rho': rho}, 64))
        errs.append(rep.checks[0].value)
    ok = max(errs) < 1e-12
    assert record(3, 'p(T) = (rho S)^2', ok,
                  f'interior column errors {errs[0]:.2e} (rho=1), {errs[1]:.2e} (rho=0.5), tol 1e-12')


def test_criterion_04_shift_rank1_spectra():
    parts, ok = [], True
    for alpha, k in ((2.0, 0), (8.0, 2), (0.5, 0)):
        rep = verify_example(OperatorSpec('shift-rank1', {'alpha': alpha, 'k': k}, 128))
        miss, extra = rep.checks[0].value, rep.checks[1].value
        ok &= miss <= 1e-6 and extra == 0
        parts.append(f'(a={alpha:g},k={k}) miss {miss:.1e} extra {int(extra)}')
    assert record(4, 'shift + rank-1 spectra', ok, '; '.join(parts))


def test_criterion_05_growth_suite():
    res = growth_suite(100, seed=SEED, M=1024, tol=0.1)
    fails, text = _summary(res)
    assert record(5, 'growth-bound suite', not fails, text + (f'; failed {fails[:5]}' if fails else ''))


def test_criterion_06_projection_suite():
    res = projection_suite(100, seed=SEED, theta=4.0, tol=0.1)
    fails, text = _summary(res)
    assert record(6, 'projection bounds', not fails, text + (f'; failed {fails[:5]}' if fails else ''))


def _separated_centers(g, d):
    while True:
        lam = 1.5 * cgauss(g, d)
        if d == 1 or min(abs(a - b) for i, a in enumerate(lam) for b in lam[i + 1:]) > 0.7:
            return lam


def test_criterion_07_multicentric_roundtrip():
    g = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        d = int(g.integers(1, 4))
        n = int(g.integers(2, 13))
        lam = _separated_centers(g, d)
        c = cgauss(g, int(g.integers(1, 9)) + 1)
        f = decompose(lambda z: np.polyval(c, z), lam)
        # eigenvalues are preimages of points w in half the series disc
        w = 0.5 * f.radius * np.sqrt(g.random(n)) * np.exp(2j * np.pi * g.random(n))
        pc = f.poly.coeffs
        mu = np.array([np.roots(pc - np.r_[np.zeros(d), wi])[g.integers(0, d)] for wi in w])
        A = similar(g, np.diag(mu), cond=10)
        direct = polyval_matrix(c, A)
        err = np.linalg.norm(eval_phi(A, f) - direct, 2) / np.linalg.norm(direct, 2)
        worst = max(worst, err)
    ok = worst < 1e-8
    assert record(7, 'multicentric round-trip', ok, f'worst relative error {worst:.2e} over 50 triples, tol 1e-8')


def test_criterion_08_chebyshev_oracles():
    nil = cheb_min(jordan_block(0, 5), 5).value
    roots = cheb_min(np.diag(np.exp(2j * np.pi * np.arange(6) / 6)), 6).value
    x = np.linspace(-2, 2, 128)
    interval = [abs(cheb_min(np.diag(x).astype(complex), n).value - 2.0) / 2.0 for n in range(1, 7)]
    g = np.random.default_rng(SEED)
    lam = cgauss(g, 10)
    Q = np.linalg.qr(cgauss(g, 10, 10))[0]
    A = (Q * lam) @ Q.conj().T
    normal = []
    for n in range(1, 5):
        _, ub = lp_minimax(lam, n, directions=2048)
        normal.append(abs(cheb_min(A, n).value - ub) / ub)
    ok_a = nil < 1e-10 and roots < 1e-10
    ok_b = max(interval) <= 1e-3
    ok_c = max(normal) <= 1e-4
    worst_n = int(np.argmax(interval)) + 1
    detail = (f'annihilating values {nil:.1e}, {roots:.1e} (< 1e-10); interval worst relative gap '
              f'{max(interval):.2e} at n={worst_n} (tol 1e-3); normal vs LP oracle {max(normal):.1e} (tol 1e-4)')
    assert record(8, 'Chebyshev/capacity oracles', ok_a and ok_b and ok_c, detail)


def test_criterion_09_block_suite():
    res = block_suite(100, seed=SEED)
    fails, text = _summary(res)
    assert record(9, 'Sylvester/block suite', not fails, text + (f'; failed {fails[:5]}' if fails else ''))


def test_criterion_10_volterra():
    slopes = {}
    for alpha in (0.0, 0.5, 1.0):
        rep = verify_example(OperatorSpec('homotopy', {'alpha': alpha}, 400))
        slopes[alpha] = rep.data['slope']
    bnd = verify_example(OperatorSpec('volterra-boundary', window=400))
    rel = bnd.checks[0].value
    ok = all(0.4 <= s <= 0.6 for s in slopes.values()) and rel <= 0.01
    detail = ', '.join(f'alpha={a:g}: slope {s:.3f}' for a, s in slopes.items())
    assert record(10, 'Volterra homotopy', ok,
                  f'{detail} (window [0.4, 0.6]); boundary eigenvalues relative error {rel:.1e} (tol 1%)')


def test_criterion_11_unitary_lower_bound():
    g = np.random.default_rng(SEED)
    worst_gap, worst_defect, runs = -np.inf, 0.0, 0
    for i in range(8):
        k = int(g.integers(1, 4))
        lam = np.exp(g.uniform(-1, 1, k)) * np.exp(2j * np.pi * g.random(k))
        blocks = [jordan_block(l, int(g.integers(1, 3))) for l in lam]
        A = similar(g, sla.block_diag(*blocks), cond=10)
        rep = poly_unitary_search(A, A.shape[0])
        worst_defect = max(worst_defect, rep.defect)
        for run in rep.extra['runs']:
            worst_gap = max(worst_gap, run['lower_bound'] - run['defect'])
            runs += 1
    # the 64-point compression of the unitary bilateral shift is the nilpotent shift
    S = make(OperatorSpec('forward-shift', window=64))
    control = float(np.min(identity_defect_search(S, 6)))
    ok = worst_gap <= 1e-9 and worst_defect <= 1e-8 and control > 0.95
    assert record(11, 'polynomially unitary lower bound', ok,
                  f'max(lower bound - defect) {worst_gap:.1e} over {runs} runs (<= 1e-9); '
                  f'algebraic defect {worst_defect:.1e} (<= 1e-8); shift control min {control:.4f} (> 0.95)')


def test_criterion_12_circle_flat():
    g = np.random.default_rng(SEED)
    worst, smallest_max, ok = 0.0, np.inf, True
    for _ in range(200):
        d = int(g.integers(1, 10))
        q = np.concatenate([[1.0], cgauss(g, d) * 10.0 ** g.uniform(-3, 0.5)])
        rep = circle_flat_check(q)
        ident = abs(rep.mean_square_quad - (1 + np.sum(np.abs(q[1:]) ** 2)))
        worst = max(worst, ident)
        smallest_max = min(smallest_max, rep.max_abs)
        ok &= ident <= 1e-12 * max(1.0, rep.mean_square) and rep.max_abs > 1
    assert record(12, 'circle-flat lemmas', ok,
                  f'mean-square identity error {worst:.1e} (1e-12); min max|q| {smallest_max:.6f} (> 1)')


def test_criterion_13_simplifying():
    g = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        k = int(g.integers(1, 4))
        lam = 2 * cgauss(g, k)
        J = sla.block_diag(*[jordan_block(l, int(g.integers(1, 4))) for l in lam
                             for _ in range(int(g.integers(1, 3)))])
        A = similar(g, J, cond=float(g.uniform(1, 100)))
        worst = max(worst, simplifying_polynomial(A, full_output=True).residual)
    ok = worst <= 1e-6
    assert record(13, 'simplifying polynomial', ok, f'worst diagonalisability residual {worst:.1e} (<= 1e-6)')
