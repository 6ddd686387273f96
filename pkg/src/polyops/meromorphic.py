"""
Growth functions of matrix-valued meromorphic functions.

For ``F(z) = (I - zA)^-1`` the proximity term ``m(r) = mean log+ ||F||``
over ``|z| = r`` is computed by the trapezoidal rule and the counting term
``N(r) = sum log+ (r / |b_j|)`` exactly from the eigenvalues ``1 / b_j``.
A pole is counted with its order, which for the resolvent is the index of
the eigenvalue (size of its largest Jordan block).  ``T = m + N``.

``T1`` replaces ``log+ ||F||`` by the total logarithmic size
``s(F) = sum_j log+ sigma_j(F)`` and counts poles of ``det F``.  With that
convention Jensen's formula gives ``T1(r, F) = T1(r, F^-1)`` exactly for
``F = I + G`` with ``G`` of finite rank and ``G(0) = 0``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InputError, VerificationError
from .numkernel import (as_cmatrix, eigen_clusters, op_norm,
                        singular_values)

__all__ = [
    'GrowthCurve', 'PoleSet', 'poles_of_resolvent', 'resolvent_growth',
    'growth_at', 'total_log_size', 'T_one', 'FiniteRankG', 'verify_inversion',
    'verify_rank1_bound', 'verify_finite_rank_bound', 'schatten_growth_bound',
    'BoundReport', 'loglog_slope',
]

DEFAULT_NODES = 1024
NUDGE = 1e-6
# beyond this size the resolvent norm is found by inverse iteration
DENSE_LIMIT = 96


def log_plus(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore'):
        return np.where(x > 1.0, np.log(np.maximum(x, 1.0)), 0.0)


@dataclass(frozen=True)
class PoleSet:
    """Poles ``b_j = 1 / lambda_j`` of ``(I - zA)^-1`` with their orders."""

    poles: np.ndarray
    orders: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.poles) == 0):
            raise InputError('a resolvent normalised by F(0) = I has no pole at 0')

    def counting(self, r):
        """``N(r) = sum_j order_j log+ (r / |b_j|)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if len(self.poles) == 0:
            return np.zeros_like(r)
        mod = np.abs(self.poles)
        return np.sum(self.orders[None, :] * log_plus(r[:, None] / mod[None, :]), axis=1)

    def __len__(self):
        return len(self.poles)


def poles_of_resolvent(A, zero_tol=None):
    """
    Poles of ``(I - zA)^-1``: reciprocals of the nonzero eigenvalue clusters.

    Eigenvalues below *zero_tol* (default ``1e-12 (1 + ||A||)``) count as 0.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    if n == 0:
        return PoleSet(np.zeros(0, complex), np.zeros(0, int))
    scale = 1.0 + op_norm(A)
    if zero_tol is None:
        zero_tol = 1e-12 * scale
    merge = 1e-2 if n <= 64 else 0.0
    cl = eigen_clusters(A, merge_tol=merge)
    keep = [c for c in cl if abs(c.center) > zero_tol]
    b = np.array([1.0 / c.center for c in keep], dtype=complex)
    k = np.array([c.index for c in keep], dtype=int)
    return PoleSet(b, k)


# ======================
# Resolvent norm sampling
# ======================

def _nudge(r, mods):
    r = float(r)
    for _ in range(50):
        if mods.size and np.any(np.abs(r - mods) <= NUDGE * r):
            r *= 1 + NUDGE
        else:
            break
    return r


def _nodes(M, real):
    theta = 2 * np.pi * np.arange(M) / M
    if not real:
        return theta, np.full(M, 1.0 / M)
    # F(conj z) = conj F(z) for real A: fold onto the closed upper half
    half = M // 2
    idx = np.arange(half + 1)
    w = np.full(idx.size, 2.0 / M)
    w[0] = 1.0 / M
    if M % 2 == 0:
        w[-1] = 1.0 / M
    return theta[idx], w


def _dense_inv_norms(A, zs, chunk_bytes=64 << 20):
    n = A.shape[0]
    out = np.empty(zs.size)
    step = max(1, int(chunk_bytes // (16 * n * n)))
    eye = np.eye(n)
    for i in range(0, zs.size, step):
        z = zs[i:i + step]
        stack = eye[None] - z[:, None, None] * A[None]
        s = np.linalg.svd(stack, compute_uv=False)
        smin = s[:, -1]
        with np.errstate(divide='ignore'):
            out[i:i + step] = np.where(smin > 0, 1.0 / smin, np.inf)
    return out


def _schur_inv_norms(A, zs, rtol=1e-10, maxiter=40):
    """
    ``||(I - zA)^-1||`` by inverse iteration on the Schur factor.

    Nodes where the iteration stalls (clustered singular values, typical
    of nearly normal matrices) fall back to a dense SVD of the triangular
    factor; the larger of the two lower estimates is kept.
    """
    T, _ = sla.schur(A, output='complex')
    n = T.shape[0]
    eye = np.eye(n)
    out = np.empty(zs.size)
    x = np.ones(n, complex) / math.sqrt(n)
    for i, z in enumerate(zs):
        R = eye - z * T
        est = 0.0
        done = False
        for _ in range(maxiter):
            y = sla.solve_triangular(R, x, trans='C', check_finite=False)
            y = sla.solve_triangular(R, y, check_finite=False)
            ny = np.linalg.norm(y)
            if not np.isfinite(ny) or ny == 0.0:
                est, done = np.inf, True
                break
            new = math.sqrt(ny)
            x = y / ny
            if abs(new - est) <= rtol * new:
                est, done = new, True
                break
            est = new
        if not done:
            smin = sla.svdvals(R, check_finite=False)[-1]
            if smin > 0:
                est = max(est, 1.0 / smin)
        out[i] = est
    return out


def resolvent_inv_norms(A, zs):
    """``||(I - zA)^-1||`` at each point of *zs* (``inf`` where singular)."""
    A = as_cmatrix(A, square=True)
    zs = np.asarray(zs, dtype=complex).ravel()
    if A.shape[0] <= DENSE_LIMIT:
        return _dense_inv_norms(A, zs)
    return _schur_inv_norms(A, zs)


def _mean_log(values_fn, r, M, poles, real, skip_tol=1e-9):
    theta, w = _nodes(M, real)
    zs = r * np.exp(1j * theta)
    keep = np.ones(zs.size, dtype=bool)
    if poles is not None and len(poles):
        d = np.min(np.abs(zs[:, None] - poles[None, :]), axis=1)
        keep = d > skip_tol * max(r, 1.0)
    skipped = int(np.sum(~keep))
    vals = np.zeros(zs.size)
    if keep.any():
        vals[keep] = values_fn(zs[keep])
    bad = ~np.isfinite(vals)
    if bad.any():
        skipped += int(bad.sum())
        keep &= ~bad
    if skipped:
        warnings.warn(f'{skipped} quadrature node(s) at r={r:g} skipped near poles')
    if not keep.any():
        raise VerificationError(f'every quadrature node at r={r:g} is singular')
    return float(np.sum(w[keep] * vals[keep]) / np.sum(w[keep])), skipped


@dataclass(frozen=True)
class GrowthCurve:
    radii: np.ndarray
    m_inf: np.ndarray
    N_inf: np.ndarray
    T_inf: np.ndarray
    quadrature_nodes: int
    T_one: np.ndarray = None
    skipped: int = 0

    def rows(self):
        """``(r, m, N, T)`` tuples for CSV output."""
        return [(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(self.radii, self.m_inf, self.N_inf, self.T_inf)]


def resolvent_growth(A, radii, M=DEFAULT_NODES, poles=None):
    """
    ``m, N, T`` of ``(I - zA)^-1`` at each radius.

    Radii within ``1e-6`` (relative) of a pole modulus are nudged outward
    by that amount.  Quadrature nodes within ``1e-9`` of a pole are dropped
    with a warning.

    Parameters
    ----------
    A : array_like
        Square matrix.
    radii : sequence of float
        Positive radii.
    M : int
        Number of trapezoidal nodes on each circle.
    poles : PoleSet, optional
        Precomputed pole data for ``A``.
    """
    A = as_cmatrix(A, square=True)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise InputError('radii must be positive and finite')
    if int(M) < 4:
        raise InputError('need at least 4 quadrature nodes')
    M = int(M)
    if poles is None:
        poles = poles_of_resolvent(A)
    mods = np.abs(poles.poles)
    real = bool(np.all(A.imag == 0))
    rr, mm, skipped = [], [], 0
    for r in radii:
        r = _nudge(r, mods)
        fn = lambda z: log_plus(resolvent_inv_norms(A, z))
        m, sk = _mean_log(fn, r, M, poles.poles, real)
        rr.append(r)
        mm.append(max(m, 0.0))
        skipped += sk
    rr = np.array(rr)
    mm = np.array(mm)
    N = poles.counting(rr)
    return GrowthCurve(rr, mm, N, mm + N, M, None, skipped)


def growth_at(A, r, M=DEFAULT_NODES):
    """``T(r, (I - zA)^-1)`` at a single radius."""
    return float(resolvent_growth(A, [r], M).T_inf[0])


def loglog_slope(radii, values):
    """Least-squares slope of ``log values`` against ``log radii``."""
    x = np.log(np.asarray(radii, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ==========================
# Total logarithmic size, T1
# ==========================

def total_log_size(A):
    """``s(A) = sum_j log+ sigma_j(A)``."""
    return float(np.sum(log_plus(singular_values(A))))


def _batched_svals(F, zs):
    mats = np.array([F(z) for z in zs])
    return np.linalg.svd(mats, compute_uv=False)


def T_one(F, r, M=DEFAULT_NODES, poles=()):
    """
    ``T1(r, F) = mean s(F(r e^{it})) + sum log+ (r / |b_j|)``.

    Parameters
    ----------
    F : callable
        ``z -> ndarray``, a matrix-valued function with ``F(0) = I``.
    poles : sequence of complex
        Poles of ``det F`` repeated by multiplicity.
    """
    poles = np.asarray(poles, dtype=complex).ravel()
    fn = lambda z: np.sum(log_plus(_batched_svals(F, z)), axis=1)
    m, _ = _mean_log(fn, float(r), int(M), poles, False)
    N = float(np.sum(log_plus(r / np.abs(poles)))) if poles.size else 0.0
    return m + N


@dataclass(frozen=True)
class FiniteRankG:
    """
    ``G(z) = U C(z) V^H`` with ``C(z) = sum_k z^k C_k`` and ``C_0 = 0``.

    Parameters
    ----------
    U, V : ndarray
        ``n x q`` factors.
    coeffs : ndarray
        ``(D + 1, q, q)`` coefficients, lowest power first.
    """

    U: np.ndarray
    V: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=complex))
        V = np.atleast_2d(np.asarray(self.V, dtype=complex))
        C = np.asarray(self.coeffs, dtype=complex)
        if C.ndim == 1:
            C = C[:, None, None]
        if U.shape != V.shape or C.shape[1:] != (U.shape[1], U.shape[1]):
            raise InputError('incompatible finite-rank factors')
        if np.any(C[0] != 0):
            raise InputError('G(0) must vanish: C_0 must be zero')
        object.__setattr__(self, 'U', U)
        object.__setattr__(self, 'V', V)
        object.__setattr__(self, 'coeffs', C)

    def C(self, z):
        out = np.zeros(self.coeffs.shape[1:], complex)
        for Ck in self.coeffs[::-1]:
            out = out * z + Ck
        return out

    def __call__(self, z):
        return self.U @ self.C(z) @ self.V.conj().T

    def F(self, z):
        return np.eye(self.U.shape[0]) + self(z)

    def det_F(self, z):
        q = self.U.shape[1]
        W = self.V.conj().T @ self.U
        return np.linalg.det(np.eye(q) + self.C(z) @ W)

    def det_zeros(self):
        """Zeros of the polynomial ``det F`` (degree at most ``q D``)."""
        q = self.U.shape[1]
        D = self.coeffs.shape[0] - 1
        L = q * D + 1
        if D == 0:
            return np.zeros(0, complex)
        K = 2 * L
        z = np.exp(2j * np.pi * np.arange(K) / K)
        vals = np.array([self.det_F(zz) for zz in z])
        c = np.fft.fft(vals) / K  # c[k] is the coefficient of z^k
        c = c[:L]
        c[np.abs(c) < 1e-13 * np.max(np.abs(c))] = 0.0
        poly = np.trim_zeros(c[::-1], 'f')
        if poly.size <= 1:
            return np.zeros(0, complex)
        return np.roots(poly)


@dataclass(frozen=True)
class BoundReport:
    name: str
    lhs: float
    rhs: float
    tol: float
    detail: dict

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return bool(self.lhs <= self.rhs + self.tol)


def verify_inversion(G, r, M=DEFAULT_NODES):
    """
    Compare ``T1(r, F)`` with ``T1(r, F^-1)`` for ``F = I + G``.

    ``F`` is entire so ``T1(r, F)`` has no counting term; the poles of
    ``F^-1`` are the zeros of ``det F``.  ``s(F^-1) = sum log+ (1/sigma_j(F))``
    is read off the singular values of ``F`` itself.
    """
    if not isinstance(G, FiniteRankG):
        raise InputError('G must be a FiniteRankG')
    r = float(r)
    M = int(M)
    zeros = G.det_zeros()
    theta = 2 * np.pi * np.arange(M) / M
    zs = r * np.exp(1j * theta)
    svals = _batched_svals(G.F, zs)
    smin = svals[:, -1]
    bad = smin <= 1e-12 * np.maximum(svals[:, 0], 1.0)
    if bad.mean() > 0.1:
        raise VerificationError('F is singular on a dense part of the circle')
    if bad.any():
        warnings.warn(f'{int(bad.sum())} singular quadrature node(s) skipped')
    sv = svals[~bad]
    m_F = float(np.mean(np.sum(log_plus(sv), axis=1)))
    with np.errstate(divide='ignore'):
        m_Finv = float(np.mean(np.sum(log_plus(1.0 / sv), axis=1)))
    N_Finv = float(np.sum(log_plus(r / np.abs(zeros)))) if zeros.size else 0.0
    lhs = m_F
    rhs = m_Finv + N_Finv
    gap = lhs - rhs
    tol = 0.1 + 10.0 / M
    return {'lhs': lhs, 'rhs': rhs, 'gap': gap, 'tol': tol,
            'pass': bool(abs(gap) <= tol), 'zeros': zeros, 'nodes': M}


def verify_rank1_bound(A, a, b, r, M=DEFAULT_NODES, tol=0.1):
    """
    ``T(r, (1 - z(A + a b^*))^-1) <= 2 (T(r, (1 - zA)^-1) + log+ r
    + log+ (|a| |b|) + log 2)``.
    """
    A = as_cmatrix(A, square=True)
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != A.shape[0] or b.size != A.shape[0]:
        raise InputError('vector sizes must match A')
    TA = growth_at(A, r, M)
    TP = growth_at(A + np.outer(a, b.conj()), r, M)
    ab = np.linalg.norm(a) * np.linalg.norm(b)
    rhs = 2 * (TA + float(log_plus(r)) + float(log_plus(ab)) + math.log(2))
    return BoundReport('rank-one perturbation growth bound', TP, rhs, tol,
                       {'T_A': TA, 'r': r, 'ab': ab, 'nodes': M})


def verify_finite_rank_bound(A, B, r, M=DEFAULT_NODES, tol=0.1):
    """
    Growth of ``(1 - z(A + B))^-1`` against the finite-rank estimate.

    Submultiplicativity with the factorisation
    ``1 - z(A+B) = (1 - zA)(1 - (1 - zA)^-1 zB)`` and the bound
    ``(q + 1) T_A + q (log+ (r ||B||) + log 2)`` on the second factor
    (``q = rank B``) give ``T_{A+B} <= (q + 2) T_A + q (log+ (r||B||) + log 2)``.
    """
    A = as_cmatrix(A, square=True)
    B = as_cmatrix(B, square=True)
    if A.shape != B.shape:
        raise InputError('A and B must have the same shape')
    s = singular_values(B)
    q = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    TA = growth_at(A, r, M)
    TP = growth_at(A + B, r, M)
    nB = float(s[0]) if s.size else 0.0
    factor_bound = (q + 1) * TA + q * (float(log_plus(r * nB)) + math.log(2))
    rhs = TA + factor_bound
    return BoundReport('finite-rank perturbation growth bound', TP, rhs, tol,
                       {'T_A': TA, 'rank': q, 'factor_bound': factor_bound,
                        'r': r, 'nodes': M})


def schatten_growth_bound(B, p, r, M=DEFAULT_NODES, tol=0.1):
    """
    ``T(r, (1 - zB)^-1) <= ((k+1)/p) ||B||_p^p r^p + k log(1 + r ||B||)``
    with ``k`` the integer such that ``k < p <= k + 1``.
    """
    B = as_cmatrix(B, square=True)
    p = float(p)
    if p <= 0:
        raise InputError('Schatten exponent must be positive')
    k = math.ceil(p) - 1
    s = singular_values(B)
    sp = float(np.sum(s ** p))
    nB = float(s[0]) if s.size else 0.0
    lhs = growth_at(B, r, M) if nB > 0 else 0.0
    rhs = (k + 1) / p * sp * r ** p + k * math.log1p(r * nB)
    return BoundReport('Schatten class growth bound', lhs, rhs, tol,
                       {'p': p, 'k': k, 'schatten_p_power': sp, 'r': r, 'nodes': M})
