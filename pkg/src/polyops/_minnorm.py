"""
Minimisation of the spectral norm of an affine matrix family.

``g(c) = || B0 + sum_k c_k B_k ||_2`` is convex in the complex vector ``c``
but not smooth where the top singular value is multiple.  We minimise the
log-sum-exp smoothing ``mu * log sum_i exp(sigma_i / mu)``, whose gradient
mixes the singular pairs with softmax weights, with L-BFGS and a
geometric continuation ``mu -> 0``.  The smoothing overestimates the norm
by at most ``mu log n`` so the final stage is exact to rounding.

When every matrix is diagonal (normal problems after an eigenbasis
change) the family is passed as vectors and ``sigma_i = |m_i|``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, nnls

__all__ = ['MinNormResult', 'min_norm_affine']


@dataclass
class MinNormResult:
    coeffs: np.ndarray
    value: float
    iterations: int
    stationarity: float
    converged: bool
    gap: float = 0.0


def _unpack(x):
    m = x.size // 2
    return x[:m] + 1j * x[m:]


def _pack(c):
    return np.concatenate([c.real, c.imag])


class _Family:
    def __init__(self, B0, Bs):
        self.diag = B0.ndim == 1
        self.B0 = B0
        self.Bs = Bs  # shape (m,) + B0.shape

    def matrix(self, c):
        if self.Bs.shape[0] == 0:
            return self.B0
        return self.B0 + np.tensordot(c, self.Bs, axes=1)

    def norm(self, c):
        M = self.matrix(c)
        if self.diag:
            return float(np.max(np.abs(M))) if M.size else 0.0
        return float(np.linalg.norm(M, 2))

    def active_subgradients(self, c, rel=1e-7):
        """
        Data of the subdifferential at *c*.

        Diagonal mode returns real stacked gradients of the maximal entries.
        Matrix mode returns the stack ``G_k = U^H B_k V`` over the top
        singular subspace; subgradients are ``tr(G_k Y)`` with ``Y`` in the
        spectraplex.
        """
        M = self.matrix(c)
        if self.diag:
            s = np.abs(M)
            idx = np.nonzero(s >= s.max() * (1 - rel))[0]
            phase = np.conj(M[idx]) / np.where(s[idx] > 0, s[idx], 1.0)
            G = self.Bs[:, idx] * phase[None, :]
            return np.concatenate([G.real, -G.imag]), s.max()
        U, s, Vh = np.linalg.svd(M)
        idx = np.nonzero(s >= s[0] * (1 - rel))[0]
        G = np.einsum('ai,kab,bj->kij', U[:, idx].conj(), self.Bs, Vh[idx].conj().T)
        return G, s[0]

    def smoothed(self, c, mu):
        """Smoothed value and complex gradient ``g`` with ``df = Re(g . dc)``."""
        M = self.matrix(c)
        if self.diag:
            s = np.abs(M)
            phase = np.where(s > 0, np.conj(M) / np.where(s > 0, s, 1.0), 0.0)
            t = (s - s.max()) / mu
            w = np.exp(t)
            Z = w.sum()
            val = s.max() + mu * np.log(Z)
            w /= Z
            g = self.Bs @ (w * phase) if self.Bs.shape[0] else np.zeros(0, complex)
            return val, g
        U, s, Vh = np.linalg.svd(M)
        t = (s - s[0]) / mu
        w = np.exp(t)
        keep = w > 1e-18
        Z = w.sum()
        val = s[0] + mu * np.log(Z)
        w = w[keep] / Z
        Uk = U[:, keep]
        Vk = Vh[keep].conj().T
        # g_k = sum_i w_i u_i^H B_k v_i
        g = np.einsum('ai,kab,bi,i->k', Uk.conj(), self.Bs, Vk, w) if self.Bs.shape[0] else \
            np.zeros(0, complex)
        return val, g


def _hull_min(G):
    """Smallest convex combination of the columns of *G* (real stacked)."""
    k = G.shape[1]
    beta = 1e3 * max(1.0, np.abs(G).max())
    Aug = np.vstack([G, beta * np.ones((1, k))])
    rhs = np.concatenate([np.zeros(G.shape[0]), [beta]])
    w, _ = nnls(Aug, rhs)
    if w.sum() > 0:
        w = w / w.sum()
    return float(np.linalg.norm(G @ w)), w


def _spectraplex_min(G):
    """
    ``min |(tr(G_k Y))_k|`` over Hermitian ``Y >= 0`` with unit trace.

    Factorised as ``Y = L L^H / ||L||_F^2`` and started from the best
    diagonal ``Y``.
    """
    m, k, _ = G.shape
    diag = np.einsum('kii->ki', G)
    val, w = _hull_min(np.concatenate([diag.real, -diag.imag]))
    if k == 1 or val == 0.0:
        return val, np.diag(w).astype(complex)
    L0 = np.diag(np.sqrt(w)).astype(complex) + 1e-3 * np.eye(k)

    def fg(x):
        L = (x[:k * k] + 1j * x[k * k:]).reshape(k, k)
        Y = L @ L.conj().T
        t = np.trace(Y).real
        u = np.einsum('kij,ji->k', G, Y)
        S = np.sum(np.abs(u) ** 2)
        Gam = 2 * np.einsum('k,kji->ij', u, G.conj()) @ L \
            + 2 * np.einsum('k,kij->ij', u.conj(), G) @ L
        Gam = Gam / t ** 2 - 4 * S * L / t ** 3
        return S / t ** 2, np.concatenate([Gam.real.ravel(), Gam.imag.ravel()])

    x0 = np.concatenate([L0.real.ravel(), L0.imag.ravel()])
    res = minimize(fg, x0, jac=True, method='L-BFGS-B',
                   options={'maxiter': 2000, 'gtol': 1e-20, 'ftol': 1e-30})
    L = (res.x[:k * k] + 1j * res.x[k * k:]).reshape(k, k)
    Y = L @ L.conj().T
    Y /= np.trace(Y).real
    val2 = float(np.sqrt(max(res.fun, 0.0)))
    if val2 < val:
        return val2, Y
    return val, np.diag(w).astype(complex)


def _certificate(fam, c):
    """
    Stationarity residual and relative duality gap at *c*.

    The stationarity residual is the norm of the minimal subgradient.  The
    dual of ``min ||B0 + sum c_k B_k||`` is ``max Re<B0, Z>`` over
    ``||Z||_* <= 1`` with ``<B_k, Z> = 0``; the minimal subgradient's
    dual matrix, projected onto those constraints and renormalised, gives
    a lower bound and hence a gap.
    """
    G, top = fam.active_subgradients(c)
    if top == 0.0:
        return 0.0, 0.0
    M = fam.matrix(c)
    if fam.diag:
        stat, w = _hull_min(G)
        s = np.abs(M)
        idx = np.nonzero(s >= s.max() * (1 - 1e-7))[0]
        Z = np.zeros_like(M)
        Z[idx] = w * M[idx] / s[idx]
    else:
        stat, Y = _spectraplex_min(G)
        U, s, Vh = np.linalg.svd(M)
        idx = np.nonzero(s >= s[0] * (1 - 1e-7))[0]
        Z = U[:, idx] @ Y @ Vh[idx]
    B = fam.Bs.reshape(fam.Bs.shape[0], -1)
    z = Z.ravel()
    gram = B.conj() @ B.T
    r = B.conj() @ z
    a = np.linalg.lstsq(gram, r, rcond=None)[0]
    zp = z - B.T @ a
    if fam.diag:
        nrm = np.sum(np.abs(zp))
    else:
        nrm = np.sum(np.linalg.svd(zp.reshape(M.shape), compute_uv=False))
    if nrm == 0.0:
        return stat, np.inf
    lower = np.real(np.vdot(fam.B0.ravel(), zp)) / nrm
    return stat, float(max(top - lower, 0.0) / top)


def min_norm_affine(B0, Bs, c0=None, stages=10, mu_floor=1e-11, maxiter=400,
                    stat_tol=1e-7, gap_tol=1e-9, zero_tol=1e-14):
    """
    Minimise ``|| B0 + sum_k c_k Bs[k] ||_2`` over complex ``c``.

    Parameters
    ----------
    B0 : ndarray
        ``(n, n)`` matrix, or ``(n,)`` vector for a diagonal family.
    Bs : ndarray
        Stack of shape ``(m,) + B0.shape``.
    c0 : ndarray, optional
        Starting coefficients; the Frobenius least-squares solution otherwise.

    Notes
    -----
    Convergence is declared when the minimal subgradient is below
    *stat_tol* or the relative duality gap is below *gap_tol*.  The second
    test matters near multiple top singular values, where iterates that
    are optimal to rounding can still carry a visible subgradient.

    The search runs in an orthonormal (Frobenius) basis of the span of
    ``Bs``, which removes the ill-conditioning of power bases.
    """
    B0 = np.asarray(B0, dtype=complex)
    Bs = np.asarray(Bs, dtype=complex).reshape((-1,) + B0.shape)
    fam = _Family(B0, Bs)
    m = Bs.shape[0]
    if m == 0:
        v = fam.norm(np.zeros(0))
        return MinNormResult(np.zeros(0, complex), v, 0, 0.0, True)

    # orthonormal coordinates for span{B_k}: M = B0' + sum_j d_j Q_j with
    # B0' orthogonal to the span and c = X S^-1 (d - Q^H b0)
    b0 = B0.ravel()
    W, S, Xh = np.linalg.svd(Bs.reshape(m, -1).T, full_matrices=False)
    r = int(np.sum(S > 1e-13 * S[0])) if S.size and S[0] > 0 else 0
    Q, S, X = W[:, :r], S[:r], Xh[:r].conj().T
    qb = Q.conj().T @ b0
    ofam = _Family((b0 - Q @ qb).reshape(B0.shape), Q.T.reshape((r,) + B0.shape))

    def to_c(d):
        return X @ ((d - qb) / S)

    if c0 is None:
        d = np.zeros(r, complex)
    else:
        d = S * (X.conj().T @ np.asarray(c0, dtype=complex)) + qb
    best_d, best_v = d.copy(), ofam.norm(d)
    scale = max(np.linalg.norm(b0, np.inf), 1.0)
    if c0 is not None:
        # honour the caller's start exactly, whatever the span truncation did
        v0 = fam.norm(np.asarray(c0, dtype=complex))
    else:
        v0 = np.inf
    if best_v <= zero_tol * scale or r == 0:
        return _finish(fam, ofam, best_d, to_c, c0, v0, 0, stat_tol, gap_tol, scale)

    iters = 0
    mu = max(0.1 * best_v, mu_floor)
    for _ in range(stages):
        def fg(x, mu=mu):
            val, g = ofam.smoothed(_unpack(x), mu)
            return val, np.concatenate([g.real, -g.imag])
        res = minimize(fg, _pack(d), jac=True, method='L-BFGS-B',
                       options={'maxiter': maxiter, 'gtol': 1e-14, 'ftol': 1e-16,
                                'maxcor': 30})
        iters += int(res.nit)
        d = _unpack(res.x)
        v = ofam.norm(d)
        if v < best_v:
            best_d, best_v = d.copy(), v
        if best_v <= zero_tol * scale:
            break
        if mu <= mu_floor * max(best_v, 1e-300):
            break
        mu = max(mu * 0.05, mu_floor * best_v)
    return _finish(fam, ofam, best_d, to_c, c0, v0, iters, stat_tol, gap_tol, scale)


def _herm_basis(k):
    basis = []
    for i in range(k - 1):
        H = np.zeros((k, k), complex)
        H[i, i], H[k - 1, k - 1] = 1.0, -1.0
        basis.append(H)
    for i in range(k):
        for j in range(i + 1, k):
            H = np.zeros((k, k), complex)
            H[i, j] = H[j, i] = 1.0
            basis.append(H)
            H = np.zeros((k, k), complex)
            H[i, j], H[j, i] = 1j, -1j
            basis.append(H)
    return basis


def _polish(fam, d, rel=1e-5, iters=10):
    """
    Newton refinement on the optimality system of a matrix family.

    With ``k`` top singular values coalescing at the optimum the minimiser
    solves ``V^H M^H M V = s^2 I`` (top-``k`` right subspace ``V``) together
    with ``tr(G_j Y) = 0`` for some unit-trace Hermitian ``Y``.  Both are
    smooth near the solution, so Newton with a finite-difference Jacobian
    converges quickly.  Returns the refined coordinates (or *d* itself
    when nothing improved).
    """
    M = fam.matrix(d)
    U, s, Vh = np.linalg.svd(M)
    k = int(np.sum(s >= s[0] * (1 - rel)))
    if k >= s.size or s[k] > s[0] * (1 - 1e-3):
        return d  # no clear gap below the top cluster
    r = d.size
    V0 = Vh[:k].conj().T
    G0 = np.einsum('ai,kab,bj->kij', U[:, :k].conj(), fam.Bs, V0)
    _, Y0 = _spectraplex_min(G0)
    hb = _herm_basis(k)
    y0 = np.array([np.real(np.trace(H.conj().T @ Y0)) / np.real(np.trace(H.conj().T @ H))
                   for H in hb])

    def F(z):
        dd = z[:r] + 1j * z[r:2 * r]
        Y = np.eye(k) / k + sum(c * H for c, H in zip(z[2 * r:], hb))
        M = fam.matrix(dd)
        _, _, Vh = np.linalg.svd(M)
        V = Vh[:k].conj().T
        a, _, b = np.linalg.svd(V.conj().T @ V0)
        V = V @ (a @ b)
        MV = M @ V
        K = MV.conj().T @ MV
        s2 = np.trace(K).real / k
        E = (K - s2 * np.eye(k)) / s2
        Uu = MV / np.sqrt(s2)
        g = np.einsum('ai,kab,bj,ji->k', Uu.conj(), fam.Bs, V, Y)
        eq = [np.real(E[i, i]) for i in range(k - 1)]
        for i in range(k):
            for j in range(i + 1, k):
                eq += [E[i, j].real, E[i, j].imag]
        return np.concatenate([g.real, g.imag, eq])

    z = np.concatenate([d.real, d.imag, y0])
    f = F(z)
    best = (np.linalg.norm(f), z)
    for _ in range(iters):
        h = 1e-7
        J = np.empty((f.size, z.size))
        for i in range(z.size):
            zp = z.copy()
            zp[i] += h
            J[:, i] = (F(zp) - f) / h
        step = np.linalg.lstsq(J, -f, rcond=None)[0]
        z = z + step
        f = F(z)
        nf = np.linalg.norm(f)
        if nf < best[0]:
            best = (nf, z)
        if nf < 1e-13 or np.linalg.norm(step) < 1e-15:
            break
    z = best[1]
    return z[:r] + 1j * z[r:2 * r]


def _finish(fam, ofam, d, to_c, c0, v0, iters, stat_tol, gap_tol, scale):
    if not ofam.diag:
        stat, gap = _certificate(ofam, d)
        if stat >= stat_tol and gap >= gap_tol:
            try:
                dn = _polish(ofam, d)
            except np.linalg.LinAlgError:
                dn = d
            vn, v = ofam.norm(dn), ofam.norm(d)
            if vn <= v * (1 + 1e-14):
                d = dn
    c = to_c(d)
    v = fam.norm(c)
    if v0 < v:
        c, v = np.asarray(c0, dtype=complex).copy(), v0
    if v <= 1e-12 * scale:
        return MinNormResult(c, v, iters, 0.0, True, 0.0)
    stat, gap = _certificate(ofam, d)
    converged = stat < stat_tol or gap < gap_tol
    return MinNormResult(c, v, iters, stat, bool(converged), gap)
