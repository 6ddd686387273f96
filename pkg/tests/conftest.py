import numpy as np
import pytest


def cgauss(g, *shape):
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2)


def similar(g, D, cond=100.0):
    """``V D V^-1`` with ``cond(V)`` equal to *cond*."""
    n = D.shape[0]
    U, _ = np.linalg.qr(cgauss(g, n, n))
    W, _ = np.linalg.qr(cgauss(g, n, n))
    V = (U * np.geomspace(1.0, 1.0 / cond, n)) @ W
    return V @ D @ np.linalg.inv(V)


@pytest.fixture
def g():
    return np.random.default_rng(20240917)


def lp_minimax(points, n, directions=1024, real=False):
    """
    Independent oracle for ``min over monic p of degree n of max |p(points)|``.

    ``|w|`` is replaced by the polygonal gauge ``max_k Re(e^{-i phi_k} w)``
    and the problem solved as a linear program.  With ``real=True`` the
    points and coefficients are real and the gauge is exact.  Returns the lower bound
    from the LP and the true maximum attained by the LP polynomial.
    """
    from scipy.optimize import linprog

    if real:
        x = np.asarray(points, float).ravel()
        V = x[:, None] ** np.arange(n)[None, :]
        one = np.ones((x.size, 1))
        A_ub = np.vstack([np.hstack([V, -one]), np.hstack([-V, -one])])
        b_ub = np.concatenate([-x ** n, x ** n])
        cost = np.zeros(n + 1)
        cost[-1] = 1
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (n + 1), method='highs')
        return float(res.x[-1]), float(np.max(np.abs(x ** n + V @ res.x[:n])))
    z = np.asarray(points, complex).ravel()
    phis = np.exp(-2j * np.pi * np.arange(directions) / directions)
    V = z[:, None] ** np.arange(n)[None, :]                   # lower powers
    rows, rhs = [], []
    for e in phis:
        W = e * V                                              # Re(e c^T v) in terms of Re c, Im c
        rows.append(np.hstack([W.real, -W.imag, -np.ones((z.size, 1))]))
        rhs.append(-(e * z ** n).real)
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)
    cost = np.zeros(2 * n + 1)
    cost[-1] = 1
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (2 * n + 1),
                  method='highs')
    c = res.x[:n] + 1j * res.x[n:2 * n]
    attained = float(np.max(np.abs(z ** n + V @ c)))
    return float(res.x[-1]), attained


ACCEPTANCE = []


def record(number, title, ok, detail):
    """Register one acceptance line; printed immediately and again in the summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section('acceptance criteria')
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split('criterion')[1].split(':')[0])):
            terminalreporter.write_line(line)
