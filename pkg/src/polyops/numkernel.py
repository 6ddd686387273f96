"""
Dense complex linear algebra kernel.

Every matrix in polyops is a two dimensional ``numpy.complex128`` array
("CMatrix").  The routines here wrap LAPACK through scipy and add the
validation, tolerances and multiplicity bookkeeping the rest of the
package relies on.
"""

from dataclasses import dataclass, field

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (InputError, NumericalError, ResourceError,
                     SingularityError)

__all__ = [
    'DEFAULT_SEED', 'EIG_CAP', 'rng', 'as_cmatrix', 'MonicPoly', 'Spectrum',
    'Cluster', 'op_norm', 'singular_values', 'eigenvalues', 'lu_solve',
    'poly_eval', 'polyval_matrix', 'poly_roots', 'eigen_clusters',
    'jordan_block', 'is_normal', 'numerical_rank', 'spectral_radius',
]

DEFAULT_SEED = 0x9E3779B9
EIG_CAP = 512
COND_BOUND = 1e14
CLUSTER_TOL = 1e-6


def rng(seed=None):
    """Deterministic generator; ``None`` means the package default stream."""
    if seed is None:
        seed = DEFAULT_SEED
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def as_cmatrix(A, name='A', square=False):
    """Validate and convert *A* to a complex128 2-D array."""
    try:
        M = np.array(A, dtype=np.complex128, copy=True)
    except (TypeError, ValueError) as exc:
        raise InputError(f'{name}: cannot convert to a complex matrix') from exc
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise InputError(f'{name}: expected a 2-D matrix, got ndim={M.ndim}')
    if not np.all(np.isfinite(M)):
        raise InputError(f'{name}: non-finite entries')
    if square and M.shape[0] != M.shape[1]:
        raise InputError(f'{name}: expected a square matrix, got {M.shape}')
    return M


# ===========
# Polynomials
# ===========

@dataclass(frozen=True)
class MonicPoly:
    """
    Monic polynomial ``z^d + a_1 z^{d-1} + ... + a_d``.

    Parameters
    ----------
    lower : sequence of complex
        The coefficients ``a_1 .. a_d`` below the implicit leading one,
        highest power first.
    """

    lower: tuple = field()

    def __post_init__(self):
        lower = tuple(complex(c) for c in np.ravel(np.asarray(self.lower,
                                                              dtype=complex)))
        if len(lower) < 1:
            raise InputError('MonicPoly needs degree >= 1')
        if not all(np.isfinite(c) for c in lower):
            raise InputError('MonicPoly coefficients must be finite')
        object.__setattr__(self, 'lower', lower)

    @classmethod
    def from_coeffs(cls, coeffs, rtol=0.0):
        """Build from full coefficients (highest first); leading must be 1."""
        c = np.asarray(coeffs, dtype=complex).ravel()
        if c.size < 2:
            raise InputError('monic polynomial needs degree >= 1')
        if abs(c[0] - 1.0) > rtol:
            raise InputError(f'leading coefficient is {c[0]}, not 1')
        return cls(tuple(c[1:]))

    @classmethod
    def from_roots(cls, roots):
        roots = np.asarray(roots, dtype=complex).ravel()
        if roots.size < 1:
            raise InputError('need at least one root')
        return cls(tuple(np.poly(roots)[1:]))

    @property
    def degree(self):
        return len(self.lower)

    @property
    def coeffs(self):
        """Full coefficient array, highest power first, leading entry 1."""
        return np.concatenate(([1.0 + 0j], np.asarray(self.lower)))

    def __call__(self, z):
        return np.polyval(self.coeffs, np.asarray(z, dtype=complex))

    def __mul__(self, other):
        if not isinstance(other, MonicPoly):
            return NotImplemented
        return MonicPoly.from_coeffs(np.polymul(self.coeffs, other.coeffs))

    def derivative(self):
        """Derivative coefficients (not monic), highest first."""
        return np.polyder(self.coeffs)

    def roots(self):
        return poly_roots(self)

    def scaled(self, c):
        """The monic polynomial ``c^d p(z / c)``, whose roots are ``c`` times ours."""
        c = complex(c)
        return MonicPoly(tuple(a * c ** (k + 1) for k, a in enumerate(self.lower)))

    def __repr__(self):
        return f'MonicPoly(degree={self.degree}, lower={list(self.lower)})'


def polyval_matrix(coeffs, A):
    """Horner evaluation of a general polynomial (highest first) at a matrix."""
    A = np.asarray(A, dtype=complex)
    c = np.asarray(coeffs, dtype=complex).ravel()
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    if c.size == 0:
        return np.zeros_like(A)
    P = c[0] * eye
    for a in c[1:]:
        P = P @ A
        P[np.diag_indices(n)] += a
    return P


def poly_eval(p, A):
    """Evaluate a monic polynomial at a square matrix by Horner's rule."""
    A = as_cmatrix(A, square=True)
    if not isinstance(p, MonicPoly):
        p = MonicPoly.from_coeffs(p)
    n = A.shape[0]
    P = A.copy()
    P[np.diag_indices(n)] += p.lower[0]
    for a in p.lower[1:]:
        P = P @ A
        P[np.diag_indices(n)] += a
    return P


def poly_roots(p):
    """Roots of a monic polynomial from the eigenvalues of its companion matrix."""
    if not isinstance(p, MonicPoly):
        p = MonicPoly.from_coeffs(p)
    if p.degree > 64:
        raise ResourceError(f'degree {p.degree} exceeds the root-finder cap 64')
    if p.degree == 1:
        return np.array([-p.lower[0]])
    comp = sla.companion(p.coeffs)
    return sla.eigvals(comp)


# ====================
# Norms and spectra
# ====================

def singular_values(A):
    """All singular values, nonincreasing."""
    A = as_cmatrix(A)
    if A.size == 0:
        return np.zeros(0)
    return sla.svdvals(A)


def op_norm(A):
    """Spectral norm (largest singular value)."""
    s = singular_values(A)
    return float(s[0]) if s.size else 0.0


def numerical_rank(A, rtol=1e-10):
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def is_normal(A, rtol=1e-10):
    A = as_cmatrix(A, square=True)
    scale = max(op_norm(A), 1e-300)
    comm = A @ A.conj().T - A.conj().T @ A
    return op_norm(comm) <= rtol * scale ** 2


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (with algebraic multiplicity) and the Schur backward error."""

    eigenvalues: np.ndarray
    residual: float

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def radius(self):
        return float(np.max(np.abs(self.eigenvalues))) if len(self) else 0.0


def eigenvalues(A, cap=EIG_CAP):
    """
    Eigenvalues by Hessenberg reduction and shifted QR (LAPACK ``zgees``).

    Raises
    ------
    ResourceError
        When the dimension exceeds *cap*.
    NumericalError
        When the QR iteration does not converge.
    """
    A = as_cmatrix(A, square=True)
    n = A.shape[0]
    if n > cap:
        raise ResourceError(f'dimension {n} exceeds eigensolver cap {cap}')
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0.0)
    try:
        T, Z = sla.schur(A, output='complex')
    except (np.linalg.LinAlgError, ValueError) as exc:
        partial = None
        try:
            partial = Spectrum(sla.eigvals(A), np.inf)
        except Exception:
            pass
        raise NumericalError('Schur iteration did not converge',
                             partial=partial) from exc
    res = sla.norm(A @ Z - Z @ T, 2)
    return Spectrum(np.diag(T).copy(), float(res))


def spectral_radius(A):
    return eigenvalues(A).radius


def lu_solve(A, B, cond_bound=COND_BOUND):
    """
    Solve ``A X = B`` by LU with partial pivoting.

    Raises
    ------
    SingularityError
        If the 1-norm condition estimate exceeds *cond_bound*.
    """
    A = as_cmatrix(A, square=True)
    B = np.asarray(B, dtype=complex)
    vec = B.ndim == 1
    B = as_cmatrix(B.reshape(-1, 1) if vec else B, name='B')
    if B.shape[0] != A.shape[0]:
        raise InputError(f'shape mismatch {A.shape} vs {B.shape}')
    with warnings.catch_warnings():
        # singularity is reported below with a condition estimate
        warnings.simplefilter('ignore', sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.max(np.sum(np.abs(A), axis=0)) if A.size else 0.0
    gecon = sla.get_lapack_funcs('gecon', (lu,))
    rcond, info = gecon(lu, anorm, norm='1')
    if anorm == 0.0 or rcond == 0.0 or 1.0 / rcond > cond_bound:
        cond = np.inf if rcond == 0.0 else 1.0 / rcond
        raise SingularityError(f'matrix is numerically singular (cond ~ {cond:.3g})',
                               condition=cond)
    X = sla.lu_solve((lu, piv), B, check_finite=False)
    return X.ravel() if vec else X


def jordan_block(lam, k):
    """The ``k x k`` Jordan block with eigenvalue *lam*."""
    J = np.diag(np.full(k, lam, dtype=complex))
    if k > 1:
        J += np.diag(np.ones(k - 1, dtype=complex), 1)
    return J


# ==========================
# Multiplicities and indices
# ==========================

@dataclass(frozen=True)
class Cluster:
    """
    A group of computed eigenvalues treated as one eigenvalue.

    ``size`` is the algebraic multiplicity; ``index`` the size of the largest
    Jordan block, i.e. the multiplicity of the eigenvalue in the minimal
    polynomial and the order of the corresponding resolvent pole.
    """

    center: complex
    size: int
    index: int
    members: tuple


def _nullity(M, tol):
    s = sla.svdvals(M)
    return int(np.sum(s <= tol))


def _power_nullity(A, mu, k, rtol):
    n = A.shape[0]
    S = A - mu * np.eye(n)
    scale = max(1.0, op_norm(S))
    P = np.linalg.matrix_power(S, k)
    return _nullity(P, rtol * scale ** k)


def _single_linkage(values, tol):
    n = len(values)
    labels = list(range(n))

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                labels[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def eigen_clusters(A, tol=CLUSTER_TOL, merge_tol=1e-2, rank_rtol=1e-9, spectrum=None):
    """
    Group eigenvalues into multiplicity clusters and find each index.

    Eigenvalues within ``tol * (1 + ||A||)`` merge directly.  Groups within
    ``merge_tol * (1 + ||A||)`` of each other merge only when the rank test
    ``nullity((A - mu)^m) >= m`` confirms a genuine multiple eigenvalue,
    which catches the ``eps^(1/k)`` scatter of defective eigenvalues.
    """
    A = as_cmatrix(A, square=True)
    if spectrum is None:
        spectrum = eigenvalues(A)
    lam = np.asarray(spectrum.eigenvalues)
    if lam.size == 0:
        return []
    scale = 1.0 + op_norm(A)
    groups = _single_linkage(lam, tol * scale)

    merged = True
    while merged and len(groups) > 1:
        merged = False
        centers = [np.mean(lam[g]) for g in groups]
        candidates = []
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                d = abs(centers[i] - centers[j])
                if d <= merge_tol * scale:
                    candidates.append((d, i, j))
        for d, i, j in sorted(candidates):
            g = groups[i] + groups[j]
            mu = np.mean(lam[g])
            if _power_nullity(A, mu, len(g), rank_rtol) >= len(g):
                groups = [h for k, h in enumerate(groups) if k not in (i, j)] + [g]
                merged = True
                break

    clusters = []
    for g in groups:
        m = len(g)
        mu = complex(np.mean(lam[g]))
        index = m
        for k in range(1, m):
            if _power_nullity(A, mu, k, rank_rtol) >= m:
                index = k
                break
        clusters.append(Cluster(mu, m, index, tuple(sorted(int(i) for i in g))))
    clusters.sort(key=lambda c: (-abs(c.center), np.angle(c.center)))
    return clusters
