"""
Multicentric representation of scalar functions.

With centers ``lambda_1..lambda_d`` and ``p(z) = prod(z - lambda_i)`` a
function is written as ``phi(z) = sum_j delta_j(z) f_j(p(z))`` where the
``delta_j`` are the Lagrange basis polynomials of the centers.  The
``f_j`` are power series in ``w = p(z)`` which makes ``phi(A)`` computable
from ``p(A)`` alone.

The coefficients of ``f_j`` are recovered from function values only:
sample ``w`` on a circle, take the ``d`` preimages ``z_i(w)``, solve the
``d x d`` interpolation system and invert the samples with an FFT.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConditioningError, DecompositionError, DomainError, InputError
from .numkernel import (MonicPoly, as_cmatrix, eigenvalues, op_norm, poly_eval,
                        poly_roots, polyval_matrix)

__all__ = ['CenterSet', 'MulticentricFn', 'PrecisionWarning', 'basis_poly',
           'dist_to_centers', 'lagrange', 'critical_values', 'preimage_paths',
           'decompose', 'decompose_table', 'eval_phi', 'builtin_phi']

CENTER_TOL = 1e-12


class PrecisionWarning(UserWarning):
    """The truncated series tail is above the requested tolerance."""


@dataclass(frozen=True)
class CenterSet:
    centers: tuple

    def __post_init__(self):
        c = tuple(complex(x) for x in np.ravel(np.asarray(self.centers, dtype=complex)))
        if len(c) < 1:
            raise InputError('need at least one center')
        if not all(np.isfinite(x) for x in c):
            raise InputError('centers must be finite')
        arr = np.array(c)
        if len(c) > 1:
            gaps = np.abs(arr[:, None] - arr[None, :])[np.triu_indices(len(c), 1)]
            if gaps.min() <= CENTER_TOL:
                raise InputError('centers must be pairwise distinct')
        object.__setattr__(self, 'centers', c)

    def __len__(self):
        return len(self.centers)

    @property
    def array(self):
        return np.array(self.centers)


def _centerset(Lam):
    return Lam if isinstance(Lam, CenterSet) else CenterSet(Lam)


def basis_poly(Lam):
    """``p(z) = prod (z - lambda_i)``."""
    return MonicPoly.from_roots(_centerset(Lam).array)


def dist_to_centers(z, Lam):
    """Geometric mean distance ``prod |z - lambda_i|^(1/d)``."""
    lam = _centerset(Lam).array
    z = np.asarray(z, dtype=complex)
    return np.prod(np.abs(z[..., None] - lam), axis=-1) ** (1.0 / lam.size)


def lagrange(Lam, j):
    """
    Coefficients (highest first) of the Lagrange polynomial ``delta_j``.

    *j* is a 0-based index into the centers.
    """
    lam = _centerset(Lam).array
    d = lam.size
    if not 0 <= j < d:
        raise InputError(f'index {j} out of range for {d} centers')
    others = np.delete(lam, j)
    if d == 1:
        return np.array([1.0 + 0j])
    return np.poly(others) / np.prod(lam[j] - others)


def _lagrange_matrix(lam):
    return np.array([lagrange(lam, j) for j in range(lam.size)])


def critical_values(Lam):
    """Moduli ``|p(c)|`` over the critical points ``p'(c) = 0``."""
    p = basis_poly(Lam)
    if p.degree == 1:
        return np.zeros(0)
    crit = np.roots(p.derivative())
    return np.abs(p(crit))


def _match(prev, cur):
    cost = np.abs(prev[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(cur)
    out[rows] = cur[cols]
    return out


def preimage_paths(p, ws, check=True):
    """
    Roots of ``p(z) = w`` along a closed sequence of ``w`` values.

    Row ``m`` holds the ``d`` preimages of ``ws[m]`` with labels carried by
    nearest-neighbour continuation from row ``m - 1``.

    Raises
    ------
    DecompositionError
        If a step moves a root by more than half the current minimal root
        gap, or the paths do not close up.
    """
    if not isinstance(p, MonicPoly):
        p = MonicPoly.from_coeffs(p)
    d = p.degree
    M = len(ws)
    Z = np.empty((M, d), dtype=complex)
    base = p.coeffs.copy()
    for m, w in enumerate(ws):
        c = base.copy()
        c[-1] -= w
        r = poly_roots(MonicPoly.from_coeffs(c))
        if m == 0:
            Z[0] = r[np.lexsort((r.imag, r.real))]
        else:
            Z[m] = _match(Z[m - 1], r)
    if check and d > 1:
        for m in range(M):
            nxt = Z[(m + 1) % M]
            row = Z[m]
            gap = np.min(np.abs(row[:, None] - row[None, :])[np.triu_indices(d, 1)])
            jump = np.max(np.abs(nxt - row)) if m + 1 < M else np.max(np.abs(_match(row, nxt) - row))
            if jump > 0.5 * gap:
                raise DecompositionError(
                    f'root continuation jump {jump:.3g} exceeds half the root gap {gap:.3g}')
        closing = _match(Z[-1], Z[0])
        if not np.allclose(closing, Z[0]) or np.any(np.argmin(
                np.abs(Z[-1][:, None] - Z[0][None, :]), axis=1) != np.arange(d)):
            raise DecompositionError('root paths do not close up (branch swap)')
    return Z


@dataclass(frozen=True)
class MulticentricFn:
    """
    Truncated multicentric representation.

    Attributes
    ----------
    centers : CenterSet
    series : ndarray, shape (d, K)
        ``series[j, k]`` is the coefficient of ``w**k`` in ``f_j``.
    radius : float
        Radius in ``w`` on which the series was sampled.
    """

    centers: CenterSet
    series: np.ndarray
    radius: float

    def __post_init__(self):
        s = np.asarray(self.series, dtype=complex)
        if s.ndim != 2 or s.shape[0] != len(self.centers):
            raise InputError('series must have one row per center')
        if not self.radius > 0:
            raise InputError('radius must be positive')
        object.__setattr__(self, 'series', s)

    @property
    def degree(self):
        return len(self.centers)

    @property
    def truncation(self):
        return self.series.shape[1]

    @property
    def poly(self):
        return basis_poly(self.centers)

    def f(self, w):
        """Evaluate all ``f_j`` at scalar or array ``w``; shape ``(d,) + w.shape``."""
        w = np.asarray(w, dtype=complex)
        return np.stack([np.polyval(row[::-1], w) for row in self.series])

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        lam = self.centers.array
        D = np.stack([np.polyval(lagrange(lam, j), z) for j in range(lam.size)])
        return np.sum(D * self.f(self.poly(z)), axis=0)


def decompose(phi, Lam, w_radius=None, K=64, M=None):
    """
    Build the multicentric representation of *phi* around the centers.

    Parameters
    ----------
    phi : callable
        Vectorised scalar function of a complex array.
    Lam : CenterSet or sequence
    w_radius : float, optional
        Sampling radius in ``w``; defaults to 0.8 times the smallest
        critical value of ``p`` (1.0 for a single center).
    K : int
        Number of series coefficients kept per ``f_j``.
    M : int, optional
        Number of samples on ``|w| = w_radius``; at least ``4 K``.
    """
    Lam = _centerset(Lam)
    lam = Lam.array
    d = lam.size
    p = basis_poly(Lam)
    crit = critical_values(Lam)
    cmin = float(crit.min()) if crit.size else np.inf
    if w_radius is None:
        w_radius = 0.8 * cmin if np.isfinite(cmin) else 1.0
    w_radius = float(w_radius)
    if not w_radius > 0:
        raise InputError('w_radius must be positive')
    if w_radius >= cmin * (1 - 1e-9):
        raise ConditioningError(
            f'w_radius {w_radius:.6g} reaches the critical value {cmin:.6g} of p')
    M = max(int(M or 0), 4 * K)
    ws = w_radius * np.exp(2j * np.pi * np.arange(M) / M)
    Z = preimage_paths(p, ws)

    L = _lagrange_matrix(lam)                      # (d, d) coefficients
    V = np.stack([np.polyval(L[j], Z) for j in range(d)], axis=-1)  # (M, d_i, d_j)
    vals = np.asarray(phi(Z), dtype=complex)
    if vals.shape != Z.shape:
        vals = np.broadcast_to(vals, Z.shape).astype(complex)
    F = np.linalg.solve(V, vals[..., None])[..., 0]  # (M, d)
    coef = np.fft.fft(F, axis=0) / M                 # (M, d)
    scale = w_radius ** np.arange(K)
    series = (coef[:K] / scale[:, None]).T
    return MulticentricFn(Lam, series, w_radius)


def decompose_table(z, values, Lam, K=16, w_radius=None):
    """
    Fit the ``f_j`` by least squares from tabulated values ``phi(z)``.

    Used when the function is only known on a point set.
    """
    Lam = _centerset(Lam)
    lam = Lam.array
    z = np.asarray(z, dtype=complex).ravel()
    values = np.asarray(values, dtype=complex).ravel()
    if z.size != values.size:
        raise InputError('z and values must have equal length')
    p = basis_poly(Lam)
    w = p(z)
    if w_radius is None:
        w_radius = max(float(np.max(np.abs(w))), 1e-12)
    cols = []
    for j in range(lam.size):
        dj = np.polyval(lagrange(lam, j), z)
        for k in range(K):
            cols.append(dj * (w / w_radius) ** k)
    G = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(G, values, rcond=None)
    series = sol.reshape(lam.size, K) / (w_radius ** np.arange(K))
    return MulticentricFn(Lam, series, w_radius)


def eval_phi(A, f, tol=1e-8, full_output=False):
    """
    ``phi(A) = sum_j delta_j(A) f_j(p(A))``.

    Raises
    ------
    DomainError
        If the spectral radius of ``p(A)`` is not below ``f.radius``.
    """
    A = as_cmatrix(A, square=True)
    lam = f.centers.array
    P = poly_eval(f.poly, A)
    rho = eigenvalues(P).radius
    if rho >= f.radius:
        raise DomainError(
            f'spectral radius of p(A) is {rho:.6g}, not below series radius {f.radius:.6g}')
    n = A.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for j in range(lam.size):
        Fj = polyval_matrix(f.series[j, ::-1], P)
        out += polyval_matrix(lagrange(lam, j), A) @ Fj
    K = f.truncation
    r = op_norm(P)
    tail_k = np.arange(max(K - 8, 0), K)
    # coefficients below the sampling roundoff carry no information
    sampled = np.abs(f.series) * f.radius ** np.arange(K)
    coef = np.where(sampled > 1e-14 * sampled.max(initial=0.0), np.abs(f.series), 0.0)
    Pk = np.linalg.matrix_power(P, int(tail_k[0]))
    pk_norms = []
    for _ in tail_k:
        pk_norms.append(op_norm(Pk))
        Pk = Pk @ P
    tail = float(np.max(np.sum(coef[:, tail_k] * np.array(pk_norms), axis=1)))
    rel_tail = tail / max(op_norm(out), 1e-300)
    if rel_tail > tol:
        warnings.warn(f'multicentric series tail estimate {rel_tail:.3g} exceeds {tol:g}',
                      PrecisionWarning, stacklevel=2)
    if full_output:
        return out, {'p_spectral_radius': rho, 'p_norm': r, 'tail_estimate': tail,
                     'relative_tail': rel_tail}
    return out


def builtin_phi(spec):
    """
    Parse a named scalar function.

    ``exp``, ``log`` (principal branch), ``power:a`` (principal ``z**a``),
    ``poly:c0,c1,...`` (highest power first) and
    ``rational:n0,n1,..;d0,d1,..``.
    """
    spec = spec.strip()
    name, _, arg = spec.partition(':')
    name = name.lower()
    if name == 'exp':
        return np.exp
    if name == 'log':
        return np.log
    if name == 'power':
        a = complex(arg)
        return lambda z: np.power(np.asarray(z, dtype=complex), a)
    if name == 'poly':
        c = np.array([complex(t) for t in arg.split(',')])
        return lambda z: np.polyval(c, z)
    if name == 'rational':
        num, _, den = arg.partition(';')
        cn = np.array([complex(t) for t in num.split(',')])
        cd = np.array([complex(t) for t in den.split(',')])
        return lambda z: np.polyval(cn, z) / np.polyval(cd, z)
    raise InputError(f'unknown builtin function {spec!r}')
