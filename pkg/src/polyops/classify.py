"""
Polynomial classification of matrices.

Minimal and simplifying polynomials, searches for polynomials ``p`` with
``p(0) = 0`` that make ``p(A)`` normal or unitary, and the related
diagnostics: the inverse formula ``A^-1 = q(A) q(A)^* A^*``, mean-square
identities on the unit circle, resolvent growth constants and power
bounds.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from ._minnorm import min_norm_affine
from .errors import ClassError, ContractError, InputError
from .numkernel import (MonicPoly, as_cmatrix, eigen_clusters, op_norm,
                        polyval_matrix, rng, singular_values)

__all__ = [
    'ClassReport', 'minimal_polynomial', 'simplifying_polynomial',
    'SimplifyingReport', 'poly_normal_search', 'poly_unitary_search',
    'inverse_q', 'identity_defect_search', 'unitary_inverse',
    'circle_flat_check', 'lrg_constant', 'power_bounded_scan',
]

NORMAL_TOL = 1e-8
UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class ClassReport:
    """
    Outcome of a polynomial class search.

    ``coeffs`` holds the full coefficients of the witness ``p`` (highest
    power first).  For the normal class ``p`` is monic; for the unitary
    class ``p(z) = z q(z)`` and the leading coefficient is free.
    """

    class_name: str
    degree: int
    coeffs: np.ndarray
    defect: float
    certified: bool
    history: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def poly(self):
        c = np.asarray(self.coeffs)
        if c.size and abs(c[0] - 1) < 1e-14:
            return MonicPoly.from_coeffs(c)
        return None


# ===================
# Minimal polynomial
# ===================

def minimal_polynomial(A, tol=1e-10):
    """
    Smallest-degree monic ``p`` with ``p(A) = 0`` at relative tolerance *tol*.

    The vectorised powers ``I, A, A^2, ...`` are tested for linear
    dependence one at a time with a QR least-squares fit; the first power
    that is reproduced by its predecessors to within
    ``tol * max_k ||A^k||`` gives the polynomial.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    if n == 0:
        raise InputError('empty matrix has no minimal polynomial')
    s = op_norm(A)
    if s == 0.0:
        return MonicPoly((0j,))
    As = A / s
    cols = [np.eye(n, dtype=complex).ravel()]
    Pk = np.eye(n, dtype=complex)
    pnorm = [1.0]
    for d in range(1, n + 1):
        Pk = Pk @ As
        pnorm.append(op_norm(Pk) * s ** d)
        V = np.column_stack(cols)
        Q, R = sla.qr(V, mode='economic')
        y = Pk.ravel()
        c = sla.solve_triangular(R, Q.conj().T @ y)
        resid = np.linalg.norm(y - V @ c) * s ** d
        if resid <= tol * max(pnorm) or d == n:
            # p_s(z) = z^d - sum c_k z^k for A/s; undo the scaling
            low = -c[::-1]
            return MonicPoly(tuple(low)).scaled(s)
        cols.append(y)
    raise AssertionError('unreachable')


@dataclass(frozen=True)
class SimplifyingReport:
    poly: MonicPoly
    matrix: np.ndarray
    residual: float
    cond_V: float
    diagonalizable: bool


def simplifying_polynomial(A, tol=1e-6, full_output=False):
    """
    The polynomial ``s_A`` with ``s_A' = prod (z - l_j)^(n_j - 1)``, ``s_A(0) = 0``.

    ``n_j`` is the index of ``l_j`` (its multiplicity in the minimal
    polynomial).  The antiderivative is integrated coefficient-wise and
    divided by its leading coefficient so that ``s_A`` is monic; the
    normalisation does not affect diagonalisability of ``s_A(A)``.  When
    every eigenvalue is semisimple ``s_A = z``.
    """
    A = as_cmatrix(A, square=True)
    clusters = eigen_clusters(A)
    deriv = np.array([1.0 + 0j])
    for c in clusters:
        for _ in range(c.index - 1):
            deriv = np.polymul(deriv, [1.0, -c.center])
    if deriv.size == 1:
        p = MonicPoly((0j,))
    else:
        integ = np.polyint(deriv)  # constant of integration 0
        p = MonicPoly.from_coeffs(integ / integ[0])
    if not full_output:
        return p
    S = polyval_matrix(p.coeffs, A)
    w, V = np.linalg.eig(S)
    nrm = max(op_norm(S), 1e-300)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < 1e15:
        resid = op_norm(S - V @ np.diag(w) @ np.linalg.inv(V)) / nrm
    else:
        resid = np.inf
    ok = resid <= tol
    return SimplifyingReport(p, S, float(resid), float(cond), bool(ok))


# ==========================
# Polynomially normal search
# ==========================

def _pow_stack(A, d):
    out = [np.eye(A.shape[0], dtype=complex)]
    for _ in range(d):
        out.append(out[-1] @ A)
    return np.array(out)


def _normal_objective(x, Pw, d):
    # p(z) = z^d + sum_{k=1}^{d-1} c_k z^k, Pw[k] = A^k
    m = d - 1
    c = x[:m] + 1j * x[m:]
    P = Pw[d] + np.tensordot(c, Pw[1:d], axes=1)
    Ph = P.conj().T
    C = P @ Ph - Ph @ P
    N = np.vdot(C, C).real
    F = np.vdot(P, P).real
    if F == 0.0:
        return 1.0, np.zeros_like(x)
    K = Ph @ C - C @ Ph
    # complex gradients with df = Re(g . dc); tr(X A^k) = sum(X.T * A^k)
    gN = 4 * np.einsum('ij,kji->k', K, Pw[1:d])
    gF = 2 * np.einsum('ij,kji->k', Ph, Pw[1:d])
    f = N / F ** 2
    g = gN / F ** 2 - 2 * N * gF / F ** 3
    return f, np.concatenate([g.real, -g.imag])


def _normal_defect(P):
    nrm = op_norm(P)
    if nrm == 0.0:
        return np.inf
    Ph = P.conj().T
    return float(np.linalg.norm(P @ Ph - Ph @ P) / nrm ** 2)


def poly_normal_search(A, d_max, restarts=5, seed=None, tol=NORMAL_TOL):
    """
    Search for a monic ``p`` with ``p(0) = 0`` making ``p(A)`` normal.

    For each degree the scale-free defect ``||[P, P^*]||_F / ||P||_F^2``
    with ``P = p(A)`` is minimised from *restarts* deterministic starts.
    Certification uses ``||[P, P^*]||_F < tol ||P||_2^2``.  Polynomials
    that annihilate ``A`` give ``P = 0`` and are not accepted as
    witnesses.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    if int(d_max) != d_max or not 1 <= d_max <= n:
        raise InputError(f'd_max must lie in 1..{n}')
    d_max = int(d_max)
    s = op_norm(A)
    if s == 0.0:
        return ClassReport('normal', 1, np.array([1.0, 0.0], complex), 0.0, True)
    As = A / s
    Pw = _pow_stack(As, d_max)
    g = rng(seed)
    history = []
    best = None
    for d in range(1, d_max + 1):
        m = d - 1
        cands = []
        starts = [np.zeros(2 * m)] + [g.standard_normal(2 * m) for _ in range(restarts - 1)]
        for x0 in starts if m else starts[:1]:
            if m:
                res = minimize(_normal_objective, x0, args=(Pw, d), jac=True,
                               method='L-BFGS-B',
                               options={'maxiter': 2000, 'gtol': 1e-15, 'ftol': 1e-30})
                x = res.x
            else:
                x = x0
            c = x[:m] + 1j * x[m:]
            P = Pw[d] + (np.tensordot(c, Pw[1:d], axes=1) if m else 0)
            if op_norm(P) <= 1e-12:
                defect = np.inf  # annihilator, not a witness
            else:
                defect = _normal_defect(P)
            cands.append((defect, len(cands), c))
        defect, _, c = min(cands, key=lambda t: (t[0], t[1]))
        coeffs = np.concatenate([[1.0], c[::-1], [0.0]]).astype(complex)
        # undo the scaling: p(z) = s^d p_s(z / s)
        coeffs = coeffs * s ** np.arange(d + 1)
        history.append((d, defect))
        rep = ClassReport('normal', d, coeffs, defect, defect < tol, tuple(history))
        if best is None or defect < best.defect:
            best = rep
        if rep.certified:
            return rep
    return ClassReport('normal', best.degree, best.coeffs, best.defect, False,
                       tuple(history))


# ===========================
# Polynomially unitary search
# ===========================

def _unitary_defect(W):
    s = singular_values(W)
    return float(np.max(np.abs(s - 1.0)))


def _eig_lower_bound(A, qc):
    lam = sla.eigvals(A)
    return float(np.max(np.abs(np.abs(lam * np.polyval(qc, lam)) - 1.0)))


def _frob_stage(x, Pw, m):
    # W = sum_k c_k A^{k+1}; f = ||W^* W - I||_F^2
    c = x[:m] + 1j * x[m:]
    W = np.tensordot(c, Pw[1:m + 1], axes=1)
    Wh = W.conj().T
    E = Wh @ W - np.eye(W.shape[0])
    f = np.vdot(E, E).real
    g = 4 * np.einsum('ij,kji->k', E @ Wh, Pw[1:m + 1])
    return f, np.concatenate([g.real, -g.imag])


def _smooth_stage(x, Pw, m, mu):
    c = x[:m] + 1j * x[m:]
    W = np.tensordot(c, Pw[1:m + 1], axes=1)
    U, s, Vh = np.linalg.svd(W)
    t = np.concatenate([s - 1.0, 1.0 - s])
    tmax = t.max()
    w = np.exp((t - tmax) / mu)
    Z = w.sum()
    f = tmax + mu * np.log(Z)
    w /= Z
    n = s.size
    coef = w[:n] - w[n:]  # d f / d sigma_i
    # d sigma_i = Re(u_i^H dW v_i)
    g = np.einsum('ai,kab,bi,i->k', U.conj(), Pw[1:m + 1], Vh.conj().T, coef)
    return f, np.concatenate([g.real, -g.imag])


def inverse_q(A, mpoly=None):
    """
    Coefficients of ``q`` with ``q(A) = A^-1`` from the minimal polynomial.

    ``q(z) = (1 - m(z)/m(0)) / z``, so ``A q(A) = I - m(A)/m(0) = I``.
    """
    A = as_cmatrix(A, square=True)
    if mpoly is None:
        mpoly = minimal_polynomial(A)
    m = mpoly.coeffs
    m0 = m[-1]
    if abs(m0) <= 1e-14 * max(1.0, np.max(np.abs(m))):
        raise ClassError('minimal polynomial vanishes at 0: A is singular')
    num = -m / m0
    num[-1] += 1.0  # 1 - m(z)/m(0), constant term now 0
    return num[:-1]


def poly_unitary_search(A, d_max, seeds=7, seed=None, tol=UNITARY_TOL):
    """
    Search for ``q`` with ``deg q < d_max`` making ``A q(A)`` unitary.

    The defect is ``max_i |sigma_i(A q(A)) - 1|``, the distance from
    ``A q(A)`` to the unitary group.  It is not convex in ``q`` so each
    degree is attacked from several deterministic starts: a Frobenius
    stage on ``||W^* W - I||_F`` followed by a smoothed max stage.  When
    ``A`` is algebraic of low enough degree the exact inverse polynomial
    is tried too.  Every run also records the eigenvalue lower bound
    ``max |  |l q(l)| - 1 |`` and checks it against the achieved defect.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    if int(d_max) != d_max or not 1 <= d_max <= n:
        raise InputError(f'd_max must lie in 1..{n}')
    d_max = int(d_max)
    sv = singular_values(A)
    if sv[-1] <= 1e-12 * sv[0] or sv[0] == 0.0:
        raise ClassError('A is not invertible, so A q(A) cannot be unitary')
    s = sv[0]
    As = A / s
    Pw = _pow_stack(As, d_max)
    g = rng(seed)

    exact = None
    mpoly = minimal_polynomial(A)
    if mpoly.degree <= d_max:
        try:
            exact = inverse_q(A, mpoly)
        except ClassError:
            exact = None

    history = []
    runs = []
    best = None
    for d in range(1, d_max + 1):
        m = d  # q has degree d - 1, hence d coefficients (lowest first here)
        cands = []
        if exact is not None and exact.size == d:
            # scale q(z) -> s q(s z) for A / s; lowest power first
            cs = exact[::-1] * s ** np.arange(1, d + 1)
            cands.append(cs)
        # Frobenius fit of W ~ I as the first start
        G = Pw[1:m + 1].reshape(m, -1).T
        c_ls = np.linalg.lstsq(G, np.eye(n).ravel(), rcond=None)[0]
        starts = [c_ls] + [c_ls + 0.5 * (g.standard_normal(m) + 1j * g.standard_normal(m))
                           for _ in range(seeds - 1)]
        for c0 in starts:
            x = np.concatenate([c0.real, c0.imag])
            r = minimize(_frob_stage, x, args=(Pw, m), jac=True, method='L-BFGS-B',
                         options={'maxiter': 500})
            x = r.x
            for mu in (1e-2, 1e-3, 1e-4, 1e-6):
                r = minimize(_smooth_stage, x, args=(Pw, m, mu), jac=True,
                             method='L-BFGS-B', options={'maxiter': 300})
                x = r.x
            cands.append(x[:m] + 1j * x[m:])
        scored = []
        for i, cs in enumerate(cands):
            W = np.tensordot(cs, Pw[1:m + 1], axes=1)
            scored.append((_unitary_defect(W), i, cs))
        defect, _, cs = min(scored, key=lambda t: (t[0], t[1]))
        # back to the unscaled variable, highest power first
        qc = (cs / s ** np.arange(1, d + 1))[::-1]
        lower = _eig_lower_bound(A, qc)
        runs.append({'degree': d, 'defect': defect, 'lower_bound': lower,
                     'bound_ok': lower <= defect + 1e-9})
        history.append((d, defect))
        coeffs = np.concatenate([qc, [0.0]])
        rep = ClassReport('unitary', d, coeffs, defect, defect < tol, tuple(history),
                          {'q': qc, 'lower_bound': lower, 'runs': tuple(runs)})
        if best is None or defect < best.defect:
            best = rep
        if rep.certified:
            return rep
    return ClassReport('unitary', best.degree, best.coeffs, best.defect, False,
                       tuple(history), dict(best.extra, runs=tuple(runs)))


def identity_defect_search(A, d_max):
    """
    ``min_q ||A q(A) - I||`` for ``deg q < d``, ``d = 1..d_max``.

    Convex in ``q``; used for windows of non-invertible truncations where
    the unitary search does not apply.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    Pw = _pow_stack(A, d_max)
    out = []
    for d in range(1, d_max + 1):
        res = min_norm_affine(-np.eye(n), Pw[1:d + 1])
        out.append(res.value)
    return np.array(out)


@dataclass(frozen=True)
class InverseReport:
    inverse: np.ndarray
    defect: float
    residual: float
    bound: float
    ok: bool


def unitary_inverse(A, q, max_defect=1e-6, full_output=False):
    """
    ``A^-1 = q(A) q(A)^* A^*`` for a polynomial *q* making ``A q(A)`` unitary.

    Parameters
    ----------
    q : array_like
        Coefficients of ``q``, highest power first.
    """
    A = as_cmatrix(A, square=True)
    qc = np.atleast_1d(np.asarray(q, dtype=complex))
    Q = polyval_matrix(qc, A)
    W = A @ Q
    defect = _unitary_defect(W)
    if defect > max_defect:
        raise ContractError(f'A q(A) is {defect:.3g} away from unitary '
                            f'(allowed {max_defect:.3g})')
    inv = Q @ Q.conj().T @ A.conj().T
    resid = op_norm(A @ inv - np.eye(A.shape[0]))
    # ||W W^* - I|| <= defect (2 + defect); add rounding in forming W W^*
    scale = max(1.0, op_norm(Q) ** 2 * op_norm(A) ** 2)
    bound = 10 * defect + 1e3 * np.finfo(float).eps * scale * A.shape[0]
    rep = InverseReport(inv, defect, float(resid), float(bound), bool(resid <= bound))
    return rep if full_output else inv


# ======================
# Circle flat polynomials
# ======================

@dataclass(frozen=True)
class CircleFlatReport:
    mean_square: float
    mean_square_quad: float
    max_abs: float
    monic: bool
    flat: bool
    lemma_ok: bool


def circle_flat_check(q, M=4096):
    """
    Mean square and maximum of ``|q|`` on the unit circle.

    The mean square is ``sum |a_j|^2`` by orthogonality of ``e^{ij theta}``
    and is compared with trapezoidal quadrature (exact for ``M > deg q``).
    A monic ``q`` with a nonzero lower coefficient must have mean square
    ``1 + sum |a_j|^2 > 1`` and hence ``max |q| > 1``.
    """
    qc = np.trim_zeros(np.atleast_1d(np.asarray(q, dtype=complex)), 'f')
    if qc.size == 0:
        raise InputError('q must be nonzero')
    if M <= qc.size:
        raise InputError('need more nodes than coefficients')
    ms = float(np.sum(np.abs(qc) ** 2))
    z = np.exp(2j * np.pi * np.arange(M) / M)
    vals = np.abs(np.polyval(qc, z))
    ms_q = float(np.mean(vals ** 2))
    mx = float(vals.max())
    monic = abs(qc[0] - 1.0) == 0.0
    lower_nz = bool(np.any(qc[1:] != 0))
    flat = not lower_nz and abs(abs(qc[0]) - 1.0) < 1e-14
    ok = abs(ms - ms_q) <= 1e-12 * max(1.0, ms)
    if monic and lower_nz:
        ok = ok and mx > 1.0 and ms > 1.0
    return CircleFlatReport(ms, ms_q, mx, monic, flat, bool(ok))


# ======================
# Resolvent and power growth
# ======================

@dataclass(frozen=True)
class LRGReport:
    constant: float
    ring_max: np.ndarray
    radii: np.ndarray
    unbounded: bool
    skipped: int


def lrg_constant(A, grid=None, rings=8, per_ring=16, full_output=False):
    """
    Estimate the best ``C`` in ``||(l - A)^-1|| <= C / dist(l, sigma(A))``.

    The default grid places *rings* circles around every eigenvalue cluster
    at radii ``2^-k`` times a local scale (half the distance to the nearest
    other cluster, or ``||A||``).  A ring maximum that keeps doubling as
    the rings shrink is flagged as unbounded growth.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    lam = sla.eigvals(A)
    eye = np.eye(n)
    skipped = 0
    if grid is None:
        centers = np.array([c.center for c in eigen_clusters(A)])
        base = max(op_norm(A), 1e-12)
        pts, ring_id = [], []
        ang = 2 * np.pi * (np.arange(per_ring) + 0.5) / per_ring
        for c in centers:
            others = np.abs(centers - c)
            others = others[others > 0]
            loc = 0.5 * others.min() if others.size else base
            for k in range(rings):
                pts.append(c + loc * 2.0 ** -k * np.exp(1j * ang))
                ring_id.append(np.full(per_ring, k))
        pts = np.concatenate(pts)
        ring_id = np.concatenate(ring_id)
    else:
        pts = np.asarray(grid, dtype=complex).ravel()
        ring_id = np.zeros(pts.size, dtype=int)
    vals = np.full(pts.size, np.nan)
    for i, z in enumerate(pts):
        dist = np.min(np.abs(z - lam))
        if dist < 1e-8:
            skipped += 1
            continue
        smin = sla.svdvals(z * eye - A)[-1]
        vals[i] = dist / smin if smin > 0 else np.inf
    if skipped:
        warnings.warn(f'{skipped} grid points inside the spectrum tolerance skipped')
    nr = int(ring_id.max()) + 1
    ring_max = np.array([np.nanmax(vals[ring_id == k]) if np.any(np.isfinite(vals[ring_id == k]))
                         else np.nan for k in range(nr)])
    const = float(np.nanmax(vals))
    unbounded = False
    if nr >= 3:
        tail = ring_max[-3:]
        unbounded = bool(np.all(tail[1:] > 1.5 * tail[:-1]))
    radii = 2.0 ** -np.arange(nr)
    rep = LRGReport(const, ring_max, radii, unbounded, skipped)
    return rep if full_output else const


@dataclass(frozen=True)
class PowerScan:
    sup_norm_pos: float
    sup_norm_neg: float
    norms_pos: np.ndarray
    norms_neg: np.ndarray
    unbounded: bool


def power_bounded_scan(A, N):
    """
    ``max ||A^k||`` over ``k = 1..N`` and, for invertible ``A``, ``k = -1..-N``.

    A scan whose last norm exceeds 1.5 times the maximum over the first
    half is flagged as growing.
    """
    A = as_cmatrix(A, square=True)
    N = int(N)
    if N < 1:
        raise InputError('N must be positive')
    pos = []
    P = np.eye(A.shape[0], dtype=complex)
    for _ in range(N):
        P = P @ A
        pos.append(op_norm(P))
    pos = np.array(pos)
    sv = singular_values(A)
    neg = np.zeros(0)
    if sv.size and sv[-1] > 1e-12 * sv[0]:
        Ai = np.linalg.inv(A)
        P = np.eye(A.shape[0], dtype=complex)
        neg = []
        for _ in range(N):
            P = P @ Ai
            neg.append(op_norm(P))
        neg = np.array(neg)

    def grows(v):
        h = max(1, v.size // 2)
        return v.size >= 4 and v[-1] > 1.5 * v[:h].max()

    unb = grows(pos) or (neg.size > 0 and grows(neg))
    return PowerScan(float(pos.max()), float(neg.max()) if neg.size else float('nan'),
                     pos, neg, bool(unb))
