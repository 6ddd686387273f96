"""
Block upper-triangular matrices ``M_C = [[A, C], [0, B]]``.

In finite dimensions the spectrum of ``M_C`` is the union of ``sigma(A)``
and ``sigma(B)`` with multiplicities.  When the two spectra are disjoint
the Sylvester equation ``AX - XB = C`` has a unique solution and
``[[I, X], [0, I]]`` conjugates ``M_C`` to the block diagonal ``M_0``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, InputError, ResourceError, SingularityError
from .meromorphic import log_plus, resolvent_growth
from .numkernel import as_cmatrix, eigenvalues, lu_solve, op_norm, poly_eval

__all__ = ['BlockTriple', 'assemble', 'spectrum_check', 'sylvester_solve',
           'block_diagonalize', 'resolvent_block_check', 'degree_bound_check',
           'normality_obstruction', 'growth_subadditivity']

KRON_LIMIT = 4096


@dataclass(frozen=True)
class BlockTriple:
    """Diagonal blocks ``A`` (n x n), ``B`` (m x m) and corner ``C`` (n x m)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _block(self.A, 'A')
        B = _block(self.B, 'B')
        C = np.asarray(self.C, dtype=complex)
        if C.size == 0:
            C = np.zeros((A.shape[0], B.shape[0]), dtype=complex)
        C = np.atleast_2d(C)
        if C.shape != (A.shape[0], B.shape[0]):
            raise InputError(f'C has shape {C.shape}, expected {(A.shape[0], B.shape[0])}')
        if not np.all(np.isfinite(C)):
            raise InputError('C has non-finite entries')
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B', B)
        object.__setattr__(self, 'C', C)

    @property
    def shape(self):
        return self.A.shape[0], self.B.shape[0]


def _block(X, name):
    X = np.asarray(X, dtype=complex)
    if X.size == 0:
        return np.zeros((0, 0), dtype=complex)
    return as_cmatrix(np.atleast_2d(X), name, square=True)


def _triple(t):
    if isinstance(t, BlockTriple):
        return t
    return BlockTriple(*t)


def assemble(t):
    """The ``(n + m) x (n + m)`` matrix ``[[A, C], [0, B]]``."""
    t = _triple(t)
    n, m = t.shape
    M = np.zeros((n + m, n + m), dtype=complex)
    M[:n, :n] = t.A
    M[:n, n:] = t.C
    M[n:, n:] = t.B
    return M


def _multiset_distance(a, b):
    """Largest gap under the best one-to-one matching of two point sets."""
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def _hausdorff(a, b):
    if a.size == 0 or b.size == 0:
        return 0.0 if a.size == b.size else math.inf
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


@dataclass(frozen=True)
class SpectrumReport:
    sigma_M: np.ndarray
    sigma_AB: np.ndarray
    matching_distance: float
    hausdorff: float
    tol: float

    @property
    def equal(self):
        return self.matching_distance <= self.tol


def spectrum_check(t, tol=1e-7):
    """Compare ``sigma(M_C)`` with ``sigma(A)`` joined to ``sigma(B)``."""
    t = _triple(t)
    sM = eigenvalues(assemble(t)).eigenvalues
    sAB = np.concatenate([eigenvalues(t.A).eigenvalues if t.A.size else np.zeros(0, complex),
                          eigenvalues(t.B).eigenvalues if t.B.size else np.zeros(0, complex)])
    scale = max(1.0, op_norm(assemble(t)))
    return SpectrumReport(sM, sAB, _multiset_distance(sM, sAB), _hausdorff(sM, sAB),
                          tol * scale)


def sylvester_solve(A, B, C, gap_rtol=1e-6):
    """
    Solve ``AX - XB = C`` through ``(I kron A - B^T kron I) vec X = vec C``.

    Raises
    ------
    SingularityError
        If ``sigma(A)`` and ``sigma(B)`` come closer than
        ``gap_rtol (||A|| + ||B||)``.
    ResourceError
        If ``nm`` exceeds 4096.
    """
    A = _block(A, 'A')
    B = _block(B, 'B')
    n, m = A.shape[0], B.shape[0]
    C = np.asarray(C, dtype=complex).reshape(n, m)
    if n * m == 0:
        return np.zeros((n, m), dtype=complex)
    if n * m > KRON_LIMIT:
        raise ResourceError(f'Kronecker system of size {n * m} exceeds {KRON_LIMIT}')
    la = eigenvalues(A).eigenvalues
    lb = eigenvalues(B).eigenvalues
    D = np.abs(la[:, None] - lb[None, :])
    i, j = np.unravel_index(np.argmin(D), D.shape)
    scale = op_norm(A) + op_norm(B)
    if D[i, j] < gap_rtol * max(scale, 1e-300):
        raise SingularityError(
            f'spectra overlap: eigenvalue {la[i]:.6g} of A and {lb[j]:.6g} of B '
            f'are {D[i, j]:.3g} apart', condition=math.inf)
    K = np.kron(np.eye(m), A) - np.kron(B.T, np.eye(n))
    # vec stacks columns
    x = lu_solve(K, C.reshape(-1, order='F'))
    return x.reshape((n, m), order='F')


@dataclass(frozen=True)
class BlockDiagonalization:
    X: np.ndarray
    conjugated: np.ndarray
    residual: float
    sylvester_residual: float
    charpoly_error: float


def block_diagonalize(t):
    """
    Conjugate ``M_C`` by ``[[I, X], [0, I]]`` with ``AX - XB = C``.

    ``[[I, X], [0, I]] M_C [[I, -X], [0, I]] = [[A, C - (AX - XB)], [0, B]]``,
    computed as a full matrix product.  ``residual`` is the norm of the
    remaining corner relative to ``||M_C||``; ``charpoly_error`` compares
    characteristic polynomial coefficients before and after.
    """
    t = _triple(t)
    n, m = t.shape
    X = sylvester_solve(t.A, t.B, t.C)
    M = assemble(t)
    S = np.eye(n + m, dtype=complex)
    S[:n, n:] = X
    Si = np.eye(n + m, dtype=complex)
    Si[:n, n:] = -X
    W = S @ M @ Si
    nm = max(op_norm(M), 1e-300)
    resid = float(op_norm(W[:n, n:]) / nm)
    syl = float(op_norm(t.A @ X - X @ t.B - t.C) / max(op_norm(t.C), 1e-300))
    c0 = np.poly(eigenvalues(M).eigenvalues)
    c1 = np.poly(eigenvalues(W).eigenvalues)
    cerr = float(np.max(np.abs(c0 - c1)) / max(1.0, np.max(np.abs(c0))))
    return BlockDiagonalization(X, W, resid, syl, cerr)


@dataclass(frozen=True)
class ResolventBlockReport:
    direct: np.ndarray
    formula: np.ndarray
    corner: np.ndarray
    rel_error: float


def resolvent_block_check(t, lam):
    """
    ``(lam - M_C)^-1`` by LU against the block formula with corner
    ``(lam - A)^-1 C (lam - B)^-1``.

    Raises
    ------
    DomainError
        If ``lam`` is (numerically) an eigenvalue of ``A`` or ``B``.
    """
    t = _triple(t)
    n, m = t.shape
    lam = complex(lam)
    M = assemble(t)
    ev = eigenvalues(M).eigenvalues
    if ev.size and np.min(np.abs(ev - lam)) <= 1e-12 * max(1.0, op_norm(M)):
        raise DomainError(f'lambda = {lam} is in the spectrum')
    try:
        direct = lu_solve(lam * np.eye(n + m) - M, np.eye(n + m, dtype=complex))
        Ra = lu_solve(lam * np.eye(n) - t.A, np.eye(n, dtype=complex)) if n else np.zeros((0, 0))
        Rb = lu_solve(lam * np.eye(m) - t.B, np.eye(m, dtype=complex)) if m else np.zeros((0, 0))
    except SingularityError as exc:
        raise DomainError(f'lambda = {lam} is too close to the spectrum') from exc
    corner = Ra @ t.C @ Rb
    F = np.zeros_like(direct)
    F[:n, :n] = Ra
    F[:n, n:] = corner
    F[n:, n:] = Rb
    err = float(op_norm(direct - F) / max(op_norm(direct), 1e-300))
    return ResolventBlockReport(direct, F, corner, err)


@dataclass(frozen=True)
class DegreeReport:
    deg_A: int
    deg_B: int
    deg_M: int
    bound_ok: bool
    diag_residual: float
    square_residual: float


def _poly_scale(coeffs, s):
    return float(np.polyval(np.abs(coeffs), s))


def degree_bound_check(t, tol=1e-10):
    """
    Minimal-polynomial degrees of ``A``, ``B`` and ``M_C``.

    With ``p = m_A`` and ``q = m_B`` the matrix ``(pq)(M_C)`` has zero
    diagonal blocks and squares to zero, so ``deg M_C <= 2 (deg A + deg B)``.
    The residuals are relative to ``sum |c_k| ||M_C||^k`` for the
    coefficients of ``pq``.
    """
    from .classify import minimal_polynomial

    t = _triple(t)
    n, m = t.shape
    if n == 0 or m == 0:
        raise InputError('both diagonal blocks must be non-empty')
    pA = minimal_polynomial(t.A, tol)
    pB = minimal_polynomial(t.B, tol)
    M = assemble(t)
    pM = minimal_polynomial(M, tol)
    pq = pA * pB
    R = poly_eval(pq, M)
    scale = max(_poly_scale(pq.coeffs, op_norm(M)), 1e-300)
    diag = max(op_norm(R[:n, :n]), op_norm(R[n:, n:])) / scale
    sq = op_norm(R @ R) / scale ** 2
    return DegreeReport(pA.degree, pB.degree, pM.degree,
                        pM.degree <= 2 * (pA.degree + pB.degree),
                        float(diag), float(sq))


@dataclass(frozen=True)
class NormalityReport:
    commutator: float
    normal: bool
    identity_residual: float
    M0_normal: bool
    corner_norm: float

    @property
    def consistent(self):
        """The identity holds when ``M_C`` is normal, and ``M_C`` is not
        normal when ``M_0`` is normal but ``C`` is not zero."""
        ok = True
        if self.normal:
            ok &= self.identity_residual <= 1e-6
        if self.M0_normal and self.corner_norm > 1e-8:
            ok &= not self.normal
        return bool(ok)


def _commutator(M):
    return op_norm(M @ M.conj().T - M.conj().T @ M)


def normality_obstruction(t, tol=1e-8):
    """
    Normality of ``M_C`` versus the corner identity ``C*C + B*B = BB*``.

    ``identity_residual`` is ``||C*C + B*B - BB*||``; it vanishes whenever
    ``M_C`` is normal.
    """
    t = _triple(t)
    M = assemble(t)
    s = max(1.0, op_norm(M)) ** 2
    comm = _commutator(M) / s
    Bh = t.B.conj().T
    ident = op_norm(t.C.conj().T @ t.C + Bh @ t.B - t.B @ Bh) if t.B.size else 0.0
    M0 = assemble(BlockTriple(t.A, t.B, np.zeros_like(t.C)))
    return NormalityReport(float(comm), comm <= tol, float(ident),
                           _commutator(M0) / s <= tol, op_norm(t.C))


@dataclass(frozen=True)
class SubadditivityReport:
    radii: np.ndarray
    T_M: np.ndarray
    T_A: np.ndarray
    T_B: np.ndarray
    rhs: np.ndarray

    @property
    def slack(self):
        return self.rhs - self.T_M

    @property
    def holds(self):
        return bool(np.all(self.slack >= 0))


def growth_subadditivity(t, radii, M=1024):
    """
    ``T(r, (I - zM_C)^-1) <= 2 (T_A + T_B) + log+ r + log+(2 + 2 r ||C||) + 2``.

    The resolvent of ``M_C`` has the diagonal resolvents on its diagonal and
    ``z R_A C R_B`` in the corner, which gives the additive constant.
    """
    t = _triple(t)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    gM = resolvent_growth(assemble(t), radii, M)
    gA = resolvent_growth(t.A, gM.radii, M)
    gB = resolvent_growth(t.B, gM.radii, M)
    r = gM.radii
    budget = log_plus(2 + 2 * r * op_norm(t.C)) + 2
    rhs = 2 * (gA.T_inf + gB.T_inf) + log_plus(r) + budget
    return SubadditivityReport(r, gM.T_inf, gA.T_inf, gB.T_inf, rhs)
