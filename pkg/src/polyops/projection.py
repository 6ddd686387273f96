"""
Riesz projections on circles and lemniscates.

``P = (1 / 2 pi i) int_gamma (lambda - A)^-1 d lambda`` is computed with the
trapezoidal rule, which converges geometrically in the number of nodes as
long as the contour keeps a fixed distance from the spectrum.  A lemniscate
``|p(lambda)| = rho`` is traced in the variable ``w = p(lambda)``: the
circle ``|w| = rho`` is sampled and its ``d`` preimages are continued from
node to node, giving one closed loop around each root of ``p`` when ``rho``
is below every critical value.

The radius selection follows the growth estimate for ``T(r, (1 - zA)^-1)``:
some ``rho`` in ``[eps, sqrt(theta) eps]`` has
``log ||P_rho|| <= C(theta) T(theta / eps)`` and the number of eigenvalues
outside ``|lambda| = rho`` is below ``T(theta / eps) / log theta``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import (ContourError, DecompositionError, DomainError, InputError,
                     LemniscateError, SelectionError)
from .meromorphic import growth_at
from .multicentric import preimage_paths
from .numkernel import (MonicPoly, as_cmatrix, eigenvalues, op_norm,
                        poly_eval, singular_values)

__all__ = ['Circle', 'Lemniscate', 'ProjectionReport', 'SplitResult',
           'LemniscateReport', 'StructureReport', 'WestSplit', 'c_theta',
           'riesz_projection', 'choose_rho', 'split_algebraic',
           'lemniscate_projections', 'structure_decompose', 'west_split']

DEFAULT_NODES = 1024
IDEM_TOL = 1e-6
N_CANDIDATES = 32
# radii this close (relative) to an eigenvalue modulus are not tried
SKIP_RTOL = 1e-6


def c_theta(theta):
    """
    The constant ``C(theta)`` of the projection-norm estimate.

    ``C = (s + 1)/(s - 1) + log(4 e s (s + 1)/(s - 1))`` with
    ``s = sqrt(theta)``.
    """
    theta = float(theta)
    if not theta > 1.0 or not math.isfinite(theta):
        raise DomainError(f'theta must be a finite number > 1, got {theta!r}')
    s = math.sqrt(theta)
    q = (s + 1.0) / (s - 1.0)
    return q + math.log(4.0 * math.e * s * q)


# ================
# Contours
# ================

@dataclass(frozen=True)
class Circle:
    rho: float
    center: complex = 0j

    def __post_init__(self):
        if not self.rho > 0:
            raise InputError(f'circle radius must be positive, got {self.rho!r}')


@dataclass(frozen=True)
class Lemniscate:
    """The level set ``|p(lambda)| = rho``."""

    p: MonicPoly
    rho: float

    def __post_init__(self):
        if not isinstance(self.p, MonicPoly):
            object.__setattr__(self, 'p', MonicPoly.from_coeffs(self.p))
        if not self.rho > 0:
            raise InputError(f'lemniscate level must be positive, got {self.rho!r}')


def _as_contour(contour):
    if isinstance(contour, (Circle, Lemniscate)):
        return contour
    if np.isscalar(contour):
        return Circle(float(contour))
    raise InputError(f'cannot interpret {contour!r} as a contour')


@dataclass(frozen=True)
class ProjectionReport:
    P: np.ndarray
    rho: float
    contour: object
    nodes: int
    idem_residual: float
    rank: int
    enclosed: int
    converged: bool
    bound_rhs: float = None
    pole_count: int = None
    extra: dict = field(default_factory=dict)

    @property
    def norm(self):
        return op_norm(self.P)


def _weighted_resolvent_sum(A, zs, g, chunk_bytes=64 << 20):
    """``sum_m g_m (z_m - A)^-1`` by batched LU solves."""
    n = A.shape[0]
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    step = max(1, int(chunk_bytes // (16 * n * n)))
    for i in range(0, zs.size, step):
        z = zs[i:i + step]
        R = np.linalg.solve(z[:, None, None] * eye[None] - A[None],
                            np.broadcast_to(eye, (z.size, n, n)))
        out += np.tensordot(g[i:i + step], R, axes=1)
    return out


def _rank(P):
    s = singular_values(P)
    return int(np.sum(s > 0.5))


def _finish(P, rho, contour, M, enclosed, tol, **extra):
    idem = float(op_norm(P @ P - P)) if P.size else 0.0
    return ProjectionReport(P, float(rho), contour, int(M), idem, _rank(P),
                            int(enclosed), idem <= tol, extra=extra)


def _circle_projection(A, c, M, tol, lam):
    scale = 1.0 + op_norm(A)
    gap = np.abs(np.abs(lam - c.center) - c.rho)
    if lam.size and gap.min() < 1e-8 * scale:
        k = int(np.argmin(gap))
        raise ContourError(f'eigenvalue {lam[k]:.6g} lies on the circle |z - {c.center:g}| = {c.rho:g}',
                           eigenvalue=complex(lam[k]))
    theta = 2 * np.pi * np.arange(M) / M
    u = c.rho * np.exp(1j * theta)
    P = _weighted_resolvent_sum(A, c.center + u, u / M)
    enclosed = int(np.sum(np.abs(lam - c.center) < c.rho))
    return _finish(P, c.rho, c, M, enclosed, tol)


def _lemniscate_loops(p, rho, M):
    """
    Loops of ``|p| = rho``, one column per root, and the matching roots.

    Raises
    ------
    LemniscateError
        If ``rho`` is not below every critical value or the continuation
        fails.
    """
    d = p.degree
    if d > 1:
        crit = np.roots(p.derivative())
        cv = np.abs(p(crit))
        if np.min(cv) <= rho:
            raise LemniscateError(
                f'level {rho:g} is not below the smallest critical value '
                f'{np.min(cv):.6g}; the lemniscate has fewer than {d} components')
    ws = rho * np.exp(2j * np.pi * np.arange(M) / M)
    try:
        Z = preimage_paths(p, ws)
    except DecompositionError as exc:
        raise LemniscateError(f'branch tracking failed: {exc}') from exc
    roots = p.roots()
    owner = np.empty(d, dtype=int)
    for j in range(d):
        loop = Z[:, j]
        wind = np.array([_winding(loop, r) for r in roots])
        inside = np.flatnonzero(np.abs(wind - 1) < 1e-6)
        if inside.size != 1:
            raise LemniscateError(f'loop {j} encircles {inside.size} roots instead of one')
        owner[j] = inside[0]
    if len(set(owner.tolist())) != d:
        raise LemniscateError('two loops encircle the same root')
    return ws, Z, roots[owner]


def _winding(loop, z0):
    a = np.angle(np.roll(loop, -1) - z0) - np.angle(loop - z0)
    a = (a + np.pi) % (2 * np.pi) - np.pi
    return float(np.sum(a) / (2 * np.pi))


def _lemniscate_parts(A, L, M, tol, lam):
    p, rho = L.p, L.rho
    scale = 1.0 + op_norm(A)
    if lam.size:
        dp = np.abs(np.polyval(p.derivative(), lam)) if p.degree > 1 else np.ones(lam.size)
        gap = np.abs(np.abs(p(lam)) - rho) / np.maximum(dp, 1e-300)
        if gap.min() < 1e-8 * scale:
            k = int(np.argmin(gap))
            raise ContourError(f'eigenvalue {lam[k]:.6g} lies on the lemniscate |p| = {rho:g}',
                               eigenvalue=complex(lam[k]))
    ws, Z, centers = _lemniscate_loops(p, rho, M)
    dp_coef = p.derivative() if p.degree > 1 else np.array([1.0 + 0j])
    inside = np.abs(p(lam)) < rho
    parts = []
    for j in range(p.degree):
        z = Z[:, j]
        g = ws / np.polyval(dp_coef, z) / M
        P = _weighted_resolvent_sum(A, z, g)
        enclosed = int(np.sum(inside & (np.argmin(np.abs(lam[:, None] - centers[None, :]), axis=1) == j)))
        parts.append(_finish(P, rho, L, M, enclosed, tol, root=complex(centers[j]), loop=z))
    return parts, ws, Z, centers


def riesz_projection(A, contour, M=DEFAULT_NODES, tol=IDEM_TOL):
    """
    Spectral projection of *A* for the region inside *contour*.

    Parameters
    ----------
    A : array_like
        Square matrix.
    contour : Circle, Lemniscate or float
        A bare number is a circle about the origin with that radius.
    M : int
        Trapezoidal nodes (per loop for lemniscates).
    tol : float
        Idempotency tolerance used to mark the result converged.

    Returns
    -------
    ProjectionReport
        ``pole_count`` is the number of eigenvalues outside the contour.

    Raises
    ------
    ContourError
        If an eigenvalue lies within ``1e-8 (1 + ||A||)`` of the contour.
    LemniscateError
        If the lemniscate does not split into one loop per root.
    """
    A = as_cmatrix(A, square=True)
    contour = _as_contour(contour)
    if int(M) < 8:
        raise InputError('need at least 8 quadrature nodes')
    M = int(M)
    lam = eigenvalues(A).eigenvalues
    if isinstance(contour, Circle):
        rep = _circle_projection(A, contour, M, tol, lam)
    else:
        parts, *_ = _lemniscate_parts(A, contour, M, tol, lam)
        P = sum(r.P for r in parts)
        rep = _finish(P, contour.rho, contour, M, sum(r.enclosed for r in parts), tol,
                      components=tuple(parts))
    return _with_counts(rep, lam.size - rep.enclosed)


def _with_counts(rep, pole_count, bound_rhs=None, **extra):
    ex = dict(rep.extra)
    ex.update(extra)
    return ProjectionReport(rep.P, rep.rho, rep.contour, rep.nodes, rep.idem_residual,
                            rep.rank, rep.enclosed, rep.converged, bound_rhs,
                            int(pole_count), ex)


# ==================
# Radius selection
# ==================

def _default_eps(A):
    s = op_norm(A)
    return 0.1 * s if s > 0 else 0.1


def choose_rho(A, eps=None, theta=4.0, M=DEFAULT_NODES, tol=IDEM_TOL):
    """
    Pick ``rho`` in ``[eps, sqrt(theta) eps]`` with the smallest ``||P_rho||``.

    Thirty-two geometrically spaced radii are scanned; radii within a
    relative ``1e-6`` of an eigenvalue modulus are skipped.  Radii that
    enclose the same eigenvalues give the same projection, so the
    quadrature is done once per distinct enclosed set, on the candidate
    farthest from the spectrum.

    Returns
    -------
    rho : float
    report : ProjectionReport
        ``extra`` holds ``T`` (``T(theta/eps, (1 - zA)^-1)``), ``log_norm``,
        ``norm_bound_ok`` and ``count_bound_ok``.

    Raises
    ------
    SelectionError
        If every candidate radius is blocked by an eigenvalue.
    """
    A = as_cmatrix(A, square=True)
    eps = _default_eps(A) if eps is None else float(eps)
    if not eps > 0:
        raise InputError(f'eps must be positive, got {eps!r}')
    Ct = c_theta(theta)
    lam = eigenvalues(A).eigenvalues
    mods = np.abs(lam)
    cand = eps * np.asarray(theta, float) ** (np.arange(N_CANDIDATES) / (2.0 * (N_CANDIDATES - 1)))
    groups = {}
    for rho in cand:
        if mods.size:
            clear = np.min(np.abs(mods - rho)) / rho
            if clear <= SKIP_RTOL:
                continue
        else:
            clear = np.inf
        key = int(np.sum(mods < rho))
        if key not in groups or clear > groups[key][1]:
            groups[key] = (float(rho), clear)
    if not groups:
        raise SelectionError(f'all {N_CANDIDATES} candidate radii in [{eps:g}, '
                             f'{math.sqrt(theta) * eps:g}] are blocked by eigenvalues')

    best = None
    for key in sorted(groups):
        rho, clear = groups[key]
        rep = None
        for mult in (1, 4, 16):
            rep = _circle_projection(A, Circle(rho), M * mult, tol, lam)
            if rep.converged:
                break
        nrm = rep.norm
        better = (best is None or (rep.converged and not best[1].converged)
                  or (rep.converged == best[1].converged and nrm < best[2] * (1 - 1e-9)))
        if better:
            best = (rho, rep, nrm)
    rho, rep, nrm = best

    T = growth_at(A, theta / eps, M)
    n_out = int(np.sum(mods > rho))
    log_norm = math.log(nrm) if nrm > 0 else -math.inf
    rhs = Ct * T
    rep = _with_counts(rep, n_out, rhs, T=T, theta=float(theta), eps=eps,
                       log_norm=log_norm, norm_bound_ok=bool(log_norm <= rhs),
                       count_bound_ok=bool(n_out < T / math.log(theta)),
                       candidates=len(groups))
    return rho, rep


@dataclass(frozen=True)
class SplitResult:
    """``A = B + E`` with ``B = (1 - P) A`` algebraic and ``E = P A`` small."""

    B: np.ndarray
    E: np.ndarray
    P: ProjectionReport
    deg_B: int
    e_radius: float
    annihilation_residual: float
    outside: np.ndarray


def _range_basis(P):
    U, s, _ = np.linalg.svd(P)
    return U[:, :int(np.sum(s > 0.5))]


def split_algebraic(A, eps=None, theta=4.0, M=DEFAULT_NODES):
    """
    Split *A* into an algebraic part and a part with spectrum in ``|z| < rho``.

    ``rho`` comes from :func:`choose_rho`.  ``deg_B`` is the number of
    eigenvalues outside the circle, with multiplicity.  The product of
    ``z - lambda`` over those eigenvalues is checked to annihilate ``B`` on
    the range of ``1 - P`` (relative residual, expected below ``1e-6``).
    """
    A = as_cmatrix(A, square=True)
    rho, rep = choose_rho(A, eps, theta, M)
    P = rep.P
    E = P @ A
    B = A - E
    lam = eigenvalues(A).eigenvalues
    out = lam[np.abs(lam) > rho]
    n = A.shape[0]
    Q = np.eye(n) - P
    if out.size:
        R = poly_eval(MonicPoly.from_roots(out), B) @ Q
        scale = np.prod(op_norm(B) + np.abs(out)) * max(1.0, op_norm(Q))
        ann = float(op_norm(R) / max(scale, 1e-300))
    else:
        ann = float(op_norm(B @ Q) / max(1.0, op_norm(A)))
    V = _range_basis(P)
    if V.shape[1]:
        e_rad = float(np.max(np.abs(sla.eigvals(V.conj().T @ A @ V))))
    else:
        e_rad = 0.0
    return SplitResult(B, E, rep, int(out.size), e_rad, ann, out)


# ======================
# Lemniscate projections
# ======================

@dataclass(frozen=True)
class LemniscateReport:
    """
    Projections for the loops of ``|p| = rho`` and the constants ``C_0, C_j``.

    ``total`` is the projection of ``p(A)`` for ``|w| < rho``, computed
    separately so that ``additivity = ||P_rho - sum_j P_rho,j||`` is a real
    check.  ``log_M = C(theta) T(theta/eps, (1 - w p(A))^-1)``.
    """

    components: tuple
    total: ProjectionReport
    roots: np.ndarray
    C0: float
    C: np.ndarray
    additivity: float
    log_M: float
    eps: float
    theta: float

    @property
    def bounds_ok(self):
        M = math.exp(min(self.log_M, 700.0))
        ok = [r.norm <= c * M for r, c in zip(self.components, self.C)]
        return bool(all(ok) and self.total.norm <= self.C0 * M)

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)


def _cofactor_integrals(A, p, ws, Z, rho):
    """``(1/2 pi rho) int q(lambda, A) / p(lambda) d lambda`` over each loop."""
    c = p.coeffs[::-1]      # lowest power first, c[d] = 1
    d = p.degree
    M = ws.size
    dp_coef = p.derivative() if d > 1 else np.array([1.0 + 0j])
    n = A.shape[0]
    pw = [np.eye(n, dtype=complex)]
    for _ in range(d - 1):
        pw.append(pw[-1] @ A)
    out = []
    for j in range(d):
        z = Z[:, j]
        # d lambda / p(lambda) = i d theta / p'(lambda) on the loop
        g = 1j * (2 * np.pi / M) / np.polyval(dp_coef, z) / (2 * np.pi * rho)
        S = np.zeros((n, n), dtype=complex)
        for k in range(d):
            h = sum(c[i] * z ** (i - k - 1) for i in range(k + 1, d + 1))
            S += np.sum(g * h) * pw[k]
        out.append(S)
    return out


def lemniscate_projections(A, p, rho, M=DEFAULT_NODES, eps=None, theta=4.0,
                           tol=IDEM_TOL):
    """
    Projections ``P_rho,j`` for each loop of ``|p(lambda)| = rho``.

    Parameters
    ----------
    A : array_like
    p : MonicPoly
    rho : float
        Must be below every critical value of ``p``.
    M : int
        Nodes on ``|w| = rho``.
    eps, theta : float
        Parameters of the norm bound.  The default ``eps = rho/sqrt(theta)``
        puts ``rho`` at the top of the admissible interval.

    Returns
    -------
    LemniscateReport
    """
    A = as_cmatrix(A, square=True)
    if not isinstance(p, MonicPoly):
        p = MonicPoly.from_coeffs(p)
    L = Lemniscate(p, rho)
    M = int(M)
    lam = eigenvalues(A).eigenvalues
    parts, ws, Z, roots = _lemniscate_parts(A, L, M, tol, lam)
    pA = poly_eval(p, A)
    total = riesz_projection(pA, Circle(rho), M, tol)
    add = float(op_norm(total.P - sum(r.P for r in parts)))
    ints = _cofactor_integrals(A, p, ws, Z, rho)
    C = np.array([op_norm(S) for S in ints])
    C0 = op_norm(sum(ints))
    eps = rho / math.sqrt(theta) if eps is None else float(eps)
    log_M = c_theta(theta) * growth_at(pA, theta / eps, M)
    return LemniscateReport(tuple(parts), total, roots, float(C0), C, add,
                            float(log_M), eps, float(theta))


# ======================
# Structure decomposition
# ======================

@dataclass(frozen=True)
class StructureReport:
    """
    ``X^-1 A X`` in the basis of ``range(1 - P_rho)`` followed by the ranges
    of the ``P_rho,j``.

    ``blocks[0]`` is ``A_0`` (possibly empty) and ``blocks[j]`` belongs to
    the root ``roots[j-1]``.  ``radius[j]`` is the spectral radius of
    ``A_j - lambda_j`` and ``loop_radius[j]`` the largest distance from
    ``lambda_j`` to its loop, which bounds it.
    """

    blocks: tuple
    sizes: tuple
    X: np.ndarray
    residual: float
    roots: np.ndarray
    radius: np.ndarray
    loop_radius: np.ndarray
    a0_residual: float
    lemniscate: LemniscateReport

    @property
    def radius_ok(self):
        return bool(np.all(self.radius < self.loop_radius))


def structure_decompose(A, p, rho, M=DEFAULT_NODES, tol=IDEM_TOL):
    """Invariant-subspace splitting of *A* along the loops of ``|p| = rho``."""
    A = as_cmatrix(A, square=True)
    if not isinstance(p, MonicPoly):
        p = MonicPoly.from_coeffs(p)
    rep = lemniscate_projections(A, p, rho, M, tol=tol)
    n = A.shape[0]
    P_all = sum(r.P for r in rep.components)
    bases = [_range_basis(np.eye(n) - P_all)] + [_range_basis(r.P) for r in rep.components]
    sizes = tuple(b.shape[1] for b in bases)
    if sum(sizes) != n:
        raise DecompositionError(f'projection ranks {sizes} do not add up to {n}')
    X = np.hstack(bases)
    At = np.linalg.solve(X, A @ X)
    edges = np.concatenate(([0], np.cumsum(sizes)))
    blocks = []
    off = At.copy()
    for a, b in zip(edges[:-1], edges[1:]):
        blocks.append(At[a:b, a:b].copy())
        off[a:b, a:b] = 0
    resid = float(op_norm(off))
    radius, loop_r = [], []
    for j, (root, comp) in enumerate(zip(rep.roots, rep.components), start=1):
        Aj = blocks[j]
        radius.append(float(np.max(np.abs(sla.eigvals(Aj) - root))) if Aj.size else 0.0)
        loop_r.append(float(np.max(np.abs(comp.extra['loop'] - root))))
    A0 = blocks[0]
    if A0.size:
        mu = sla.eigvals(A0)
        R = poly_eval(MonicPoly.from_roots(mu), A0)
        scale = np.prod(op_norm(A0) + np.abs(mu))
        a0 = float(op_norm(R) / max(scale, 1e-300))
    else:
        a0 = 0.0
    return StructureReport(tuple(blocks), sizes, X, resid, rep.roots,
                           np.array(radius), np.array(loop_r), a0, rep)


class WestSplit(NamedTuple):
    N: np.ndarray
    Q: np.ndarray
    commutator_radius: float


def west_split(A):
    """
    ``A = N + Q`` with ``N`` normal and ``Q`` nilpotent, from the Schur form.

    ``N = U diag(T) U*`` and ``Q = U triu(T, 1) U*``.  The commutator
    ``[N, Q]`` need not vanish; its spectral radius is reported.
    """
    A = as_cmatrix(A, square=True)
    if A.shape[0] == 0:
        return WestSplit(A.copy(), A.copy(), 0.0)
    T, U = sla.schur(A, output='complex')
    Uh = U.conj().T
    N = (U * np.diag(T)) @ Uh
    Q = U @ np.triu(T, 1) @ Uh
    K = N @ Q - Q @ N
    return WestSplit(N, Q, float(np.max(np.abs(sla.eigvals(K)))))
