"""
Monic minimisation of ``||p(A)||`` and capacity diagnostics.

For a fixed degree ``n`` the map ``c -> ||A^n + sum_j c_j A^j||`` is convex,
so every local minimum is global.  ``cheb_min`` hands this problem to the
affine min-norm engine after rescaling ``A`` to unit norm; normal matrices
are reduced to a minimax problem on the eigenvalues.  The values
``min ||p(A)||^(1/n)`` decrease towards the logarithmic capacity of the
spectrum, which vanishes for every finite matrix once ``n`` reaches the
degree of the minimal polynomial.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._minnorm import min_norm_affine
from .errors import InputError
from .numkernel import (MonicPoly, as_cmatrix, is_normal, op_norm, poly_eval,
                        rng)

__all__ = ['ChebResult', 'CapacityProfile', 'cheb_min', 'capacity_profile',
           'almost_algebraic_profile', 'alg_distance_upper', 'AlgDistanceBound']

# values below this multiple of ||A||^n are rounding noise
ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class ChebResult:
    degree: int
    poly: MonicPoly
    value: float
    cap_n: float
    iterations: int
    stationarity_residual: float
    converged: bool


def _check_degree(A, n, name='n'):
    if int(n) != n or n < 1:
        raise InputError(f'{name} must be a positive integer, got {n!r}')
    if n > A.shape[0]:
        raise InputError(f'{name}={n} exceeds the dimension {A.shape[0]}')
    return int(n)


def _powers(A, n):
    out = [np.eye(A.shape[0], dtype=complex)]
    for _ in range(n):
        out.append(out[-1] @ A)
    return out


def cheb_min(A, n, start=None, seed=None):
    """
    Minimise ``||p(A)||`` over monic polynomials of degree *n*.

    Parameters
    ----------
    A : array_like
        Square matrix.
    n : int
        Degree, ``1 <= n <= dim A``.
    start : MonicPoly, optional
        Warm start.  The result is never worse than this polynomial.
    seed : int, optional
        When given, the start is perturbed randomly; used to check that
        restarts land on the same (global) minimum.

    Returns
    -------
    ChebResult
    """
    A = as_cmatrix(A, square=True)
    n = _check_degree(A, n)
    s = op_norm(A)
    if s == 0.0:
        return ChebResult(n, MonicPoly((0j,) * n), 0.0, 0.0, 0, 0.0, True)
    As = A / s

    if is_normal(A):
        lam = np.unique(np.round(sla.eigvals(As), 14))
        B0 = lam ** n
        Bs = np.array([lam ** j for j in range(n)])
    else:
        P = _powers(As, n)
        B0 = P[n]
        Bs = np.array(P[:n])

    c0 = None
    if start is not None:
        if start.degree != n:
            raise InputError('warm start has the wrong degree')
        c0 = np.asarray(start.scaled(1.0 / s).lower, dtype=complex)[::-1]
    if seed is not None:
        g = rng(seed)
        if c0 is None:
            G = Bs.reshape(n, -1).T
            c0 = np.linalg.lstsq(G, -B0.ravel(), rcond=None)[0]
        c0 = c0 + 0.5 * (g.standard_normal(n) + 1j * g.standard_normal(n))

    res = min_norm_affine(B0, Bs, c0=c0)
    coeffs = res.coeffs
    value = res.value
    # the trivial monic z^n is always available
    trivial = np.max(np.abs(B0)) if B0.ndim == 1 else np.linalg.norm(B0, 2)
    if trivial <= value:
        coeffs, value = np.zeros(n, complex), float(trivial)
    poly = MonicPoly(tuple(coeffs[::-1])).scaled(s)
    if value <= ZERO_RTOL:
        value = 0.0
    value = value * s ** n
    cap = value ** (1.0 / n) if value > 0 else 0.0
    converged = res.converged or value == 0.0
    return ChebResult(n, poly, float(value), float(cap), res.iterations,
                      float(res.stationarity), bool(converged))


@dataclass(frozen=True)
class CapacityProfile:
    """``cap_n`` for ``n = 1..n_max`` with its running-minimum envelope."""

    results: tuple
    cap: np.ndarray
    envelope: np.ndarray

    def __len__(self):
        return len(self.results)

    def __iter__(self):
        return iter(self.results)

    def __getitem__(self, i):
        return self.results[i]


def capacity_profile(A, n_max):
    """
    Run ``cheb_min`` for every degree up to *n_max*.

    Degree ``n + 1`` is warm started from ``(z - mu) p_n`` with
    ``mu = tr(A)/dim``, so the values can only improve on that product.
    """
    A = as_cmatrix(A, square=True)
    n_max = _check_degree(A, n_max, 'n_max')
    mu = np.trace(A) / A.shape[0]
    out = []
    prev = None
    for n in range(1, n_max + 1):
        start = None
        if prev is not None:
            start = prev.poly * MonicPoly((-mu,))
        r = cheb_min(A, n, start=start)
        out.append(r)
        prev = r
    cap = np.array([r.cap_n for r in out])
    return CapacityProfile(tuple(out), cap, np.minimum.accumulate(cap))


def almost_algebraic_profile(A, j_max):
    """``||p_j(A)||^(1/j)`` for the minimising monic ``p_j``, ``j = 1..j_max``."""
    prof = capacity_profile(A, j_max)
    vals = []
    for r in prof:
        v = op_norm(poly_eval(r.poly, A)) if r.value > 0 else 0.0
        # re-evaluation can only add rounding; keep the certified minimum
        v = min(v, r.value) if r.value > 0 else 0.0
        vals.append(v ** (1.0 / r.degree) if v > 0 else 0.0)
    return np.array(vals)


# =====================================
# Distance to algebraic operators of degree j
# =====================================

@dataclass(frozen=True)
class AlgDistanceBound:
    value: float
    centers: np.ndarray
    labels: np.ndarray
    heuristic: bool = True

    def __float__(self):
        return self.value


def _kmeans(z, j, iters=100):
    """Deterministic Lloyd iteration on complex points, angular-sort start."""
    order = np.lexsort((np.abs(z), np.angle(z)))
    chunks = np.array_split(order, j)
    centers = np.array([z[c].mean() for c in chunks])
    labels = None
    for _ in range(iters):
        new = np.argmin(np.abs(z[:, None] - centers[None, :]), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(j):
            if np.any(labels == k):
                centers[k] = z[labels == k].mean()
    return centers, labels


def _reorder_schur(T, Z, labels, j):
    """Group the Schur diagonal so that each cluster is one contiguous block."""
    trsen = sla.get_lapack_funcs('trsen', (T,))
    lab = labels.copy()
    pos = 0
    bounds = []
    for k in range(j):
        sel = np.zeros(T.shape[0], dtype=np.int32)
        sel[:pos] = 1
        sel[pos:] = lab[pos:] == k
        cnt = int(sel.sum()) - pos
        if cnt:
            T, Z, w, *_, info = trsen(sel, T, Z, job='N')
            if info != 0:
                raise np.linalg.LinAlgError('Schur reordering failed')
            moved = np.concatenate([lab[:pos], np.full(cnt, k),
                                    lab[pos:][lab[pos:] != k]])
            lab = moved
        bounds.append((pos, pos + cnt))
        pos += cnt
    return T, Z, bounds


def alg_distance_upper(A, j, full_output=False):
    """
    Upper bound on the distance from *A* to algebraic matrices of degree <= j.

    The eigenvalues are split into ``j`` groups by k-means.  In a Schur form
    reordered so each group is a contiguous diagonal block, every diagonal
    block is replaced by ``c_k I`` with ``c_k`` the group centroid while
    the coupling blocks are kept.  The result is annihilated by
    ``prod (z - c_k)``, so its distance to *A* bounds the true infimum from
    above.  This is a heuristic bound; nothing is claimed about optimality.
    """
    from .classify import minimal_polynomial

    A = as_cmatrix(A, square=True)
    if int(j) != j or j < 1:
        raise InputError(f'j must be a positive integer, got {j!r}')
    j = int(j)
    n = A.shape[0]
    T, Z = sla.schur(A, output='complex')
    lam = np.diag(T).copy()
    if n == 0 or minimal_polynomial(A).degree <= j:
        out = AlgDistanceBound(0.0, lam, np.arange(n))
        return out if full_output else 0.0
    centers, labels = _kmeans(lam, j)
    T, Z, bounds = _reorder_schur(T, Z, labels, j)
    D = np.zeros_like(T)
    for k, (a, b) in enumerate(bounds):
        blk = T[a:b, a:b]
        D[a:b, a:b] = blk - centers[k] * np.eye(b - a)
    value = op_norm(D)
    out = AlgDistanceBound(float(value), centers, labels)
    return out if full_output else out.value
