"""
Truncated example operators with closed-form checks.

Every family is described by an :class:`OperatorSpec` and built by
:func:`make`.  Bilateral families live on the indices ``-N..N`` (so the
matrix has ``2N + 1`` rows) and are closed either by zero fill or
periodically.  ``verify_example`` runs the checks that the construction
of each family makes exact, on columns away from the window edges.
"""

import ast
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InputError
from .numkernel import MonicPoly, eigenvalues, op_norm, poly_eval

__all__ = ['OperatorSpec', 'FAMILIES', 'make', 'predict_spectrum', 'PredictedSpectrum',
           'verify_example', 'ExampleReport', 'Check', 'truncation_convergence',
           'ConvergenceTable', 'load_spec', 'parse_spec_text', 'foias_pearcy_weights',
           'volterra_matrices', 'example44_triple']

FAMILIES = {
    'identity': 'identity matrix',
    'forward-shift': 'unilateral forward shift S e_j = e_{j+1}',
    'backward-shift': 'unilateral backward shift',
    'bilateral-shift': 'bilateral shift on indices -N..N',
    'diagonal': 'diagonal with values=[...]',
    'circulant': 'A_n(r) = C_n D_n(r), params n, r (default r = 2^(-1/(n-1)))',
    'circulant-sum': 'direct sum of A_n(r_n) over n in blocks=[lo, hi]',
    'direct-sum': 'direct sum of member specs',
    'shift-rank1': 'bilateral shift plus alpha e_0 e_k^*, params alpha, k',
    'alternating': 'lambda1/lambda2 alternating diagonal plus rho S, bilateral',
    'unitary-blocks': 'direct sum of exp(i theta_j) [[1, 1], [0, -1]]',
    'weighted-shift': 'backward shift with weights 2^(-4^v2(j))',
    'volterra': 'V^2 f(t) = int_0^t (t - s) f(s) ds, trapezoid on N points',
    'volterra-boundary': 'solution operator of u" = f, u(0) = u(1) = 0',
    'homotopy': 'alpha B + (1 - alpha) V^2',
    'example44': '[[S, e_1 e_1^*], [0, S^*]] on two copies of the window',
}

BILATERAL = {'bilateral-shift', 'shift-rank1', 'alternating'}
B2 = np.array([[1.0, 1.0], [0.0, -1.0]])


@dataclass(frozen=True)
class OperatorSpec:
    family: str
    params: dict = field(default_factory=dict)
    window: int = 64
    boundary: str = 'zero'

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f'unknown family {self.family!r}; known: {", ".join(sorted(FAMILIES))}')
        if int(self.window) != self.window or self.window < 4:
            raise InputError(f'window must be an integer >= 4, got {self.window!r}')
        if self.boundary not in ('zero', 'periodic'):
            raise InputError(f'boundary must be zero or periodic, got {self.boundary!r}')
        object.__setattr__(self, 'window', int(self.window))
        object.__setattr__(self, 'params', dict(self.params))

    def with_window(self, N):
        return OperatorSpec(self.family, self.params, N, self.boundary)


# =============
# Constructors
# =============

def _shift(n, periodic=False):
    S = np.eye(n, k=-1, dtype=complex)
    if periodic:
        S[0, -1] = 1.0
    return S


def circulant_block(n, r=None):
    """``A_n(r) = C_n D_n(r)``; ``r`` defaults to ``2^(-1/(n-1))``."""
    if n < 2:
        raise InputError('circulant blocks need n >= 2')
    if r is None:
        r = 2.0 ** (-1.0 / (n - 1))
    if not r > 0:
        raise InputError('r must be positive')
    C = _shift(n, periodic=True)
    d = np.full(n, 1.0 / r)
    d[-1] = r ** (n - 1)
    return C * d[None, :]


def foias_pearcy_weights(N):
    """``omega_j = 2^(-4^v)`` with ``v`` the 2-adic valuation of ``j``, ``j = 1..N``."""
    j = np.arange(1, N + 1)
    v = np.zeros(N, dtype=int)
    m = j.copy()
    while np.any(m % 2 == 0):
        even = m % 2 == 0
        v[even] += 1
        m[even] //= 2
    # exponents overflow doubles quickly; 2^-1024 is already zero
    e = np.minimum(4.0 ** v, 2000.0)
    return 2.0 ** (-e)


def volterra_matrices(N):
    """Trapezoid discretisations ``(V^2, B)`` on ``N`` equispaced points of [0, 1]."""
    t = np.linspace(0.0, 1.0, N)
    h = t[1] - t[0]
    w = np.full(N, h)
    w[0] = w[-1] = h / 2
    K = np.tril((t[:, None] - t[None, :]) * w[None, :], -1)
    B = K - np.outer(t, w * (1.0 - t))
    return K, B


def example44_triple(N):
    """Window of ``A = S``, ``B = S^*``, ``C = e_1 e_1^*``."""
    S = _shift(N)
    C = np.zeros((N, N))
    C[0, 0] = 1.0
    return S.astype(complex), S.T.astype(complex), C.astype(complex)


def _theta(m):
    # a deterministic sequence that fills the circle densely
    return 2 * np.pi * ((np.arange(1, m + 1) * (math.sqrt(5) - 1) / 2) % 1.0)


def make(spec):
    """
    The truncated matrix for *spec*.

    Raises
    ------
    InputError
        For unknown families or invalid parameters.
    """
    if not isinstance(spec, OperatorSpec):
        raise InputError('make expects an OperatorSpec')
    f, p, N = spec.family, spec.params, spec.window
    per = spec.boundary == 'periodic'
    if f == 'identity':
        return np.eye(N, dtype=complex)
    if f == 'forward-shift':
        return _shift(N, per)
    if f == 'backward-shift':
        return _shift(N, per).T.copy()
    if f == 'diagonal':
        vals = np.asarray(p.get('values', []), dtype=complex).ravel()
        if vals.size == 0:
            raise InputError('diagonal family needs values')
        return np.diag(vals)
    if f == 'circulant':
        n = int(p.get('n', N))
        return circulant_block(n, p.get('r'))
    if f == 'circulant-sum':
        lo, hi = p.get('blocks', (2, 12))
        return sla.block_diag(*[circulant_block(n) for n in range(int(lo), int(hi) + 1)]).astype(complex)
    if f == 'direct-sum':
        members = p.get('members', ())
        if not members:
            raise InputError('direct-sum needs members')
        return sla.block_diag(*[make(m if isinstance(m, OperatorSpec) else OperatorSpec(**m))
                                for m in members]).astype(complex)
    if f in BILATERAL:
        size = 2 * N + 1
        S = _shift(size, per)
        if f == 'bilateral-shift':
            return S
        if f == 'shift-rank1':
            alpha = complex(p.get('alpha', 2.0))
            k = int(p.get('k', 0))
            if abs(k) > N:
                raise InputError(f'|k| = {abs(k)} does not fit in the window')
            T = S.copy()
            T[N, N + k] += alpha
            return T
        lam1 = complex(p.get('lambda1', 1.0))
        lam2 = complex(p.get('lambda2', -1.0))
        rho = float(p.get('rho', 1.0))
        idx = np.arange(-N, size - N)
        d = np.where(idx % 2 == 1, lam1, lam2)
        return np.diag(d) + rho * S
    if f == 'unitary-blocks':
        m = max(1, N // 2)
        th = np.asarray(p.get('thetas', _theta(m)), dtype=float)
        return sla.block_diag(*[np.exp(1j * a) * B2 for a in th])
    if f == 'weighted-shift':
        w = foias_pearcy_weights(N - 1)
        return np.diag(w.astype(complex), 1)
    if f in ('volterra', 'volterra-boundary', 'homotopy'):
        K, B = volterra_matrices(N)
        if f == 'volterra':
            return K.astype(complex)
        if f == 'volterra-boundary':
            return B.astype(complex)
        a = float(p.get('alpha', 0.5))
        return (a * B + (1 - a) * K).astype(complex)
    if f == 'example44':
        A, B, C = example44_triple(N)
        return np.block([[A, C], [np.zeros_like(C), B]])
    raise InputError(f'no constructor for {f!r}')


# ===========================
# Spectra of shift perturbations
# ===========================

@dataclass(frozen=True)
class PredictedSpectrum:
    """The unit circle, possibly the open disc, plus isolated eigenvalues."""

    circle: bool
    disc: bool
    points: np.ndarray

    def outside(self, radius=1.0):
        return self.points[np.abs(self.points) > radius]


def _roots_of_power(m, c):
    """The ``m`` roots of ``lambda^m = c``."""
    c = complex(c)
    r = abs(c) ** (1.0 / m)
    return r * np.exp(1j * (np.angle(c) + 2 * np.pi * np.arange(m)) / m)


def predict_spectrum(spec):
    """
    Spectrum of ``S + alpha e_0 e_k^*`` on the bilateral shift.

    With ``f_0 = (lambda - S)^-1 e_0`` an eigenvalue off the circle solves
    ``alpha e_k^* f_0 = 1``.  Outside the disc ``f_0 = sum lambda^(-j-1) e_j``
    so ``lambda^(k+1) = alpha`` for ``k >= 0``; inside the disc
    ``f_0 = -sum lambda^j e_(-j-1)`` so ``-alpha lambda^(m-1) = 1`` for
    ``k = -m < 0``.  The case ``k = -1, alpha = -1`` fills the open disc.
    """
    if spec.family != 'shift-rank1':
        raise InputError(f'no spectral prediction for family {spec.family!r}')
    alpha = complex(spec.params.get('alpha', 2.0))
    k = int(spec.params.get('k', 0))
    if k >= 0:
        pts = _roots_of_power(k + 1, alpha) if abs(alpha) > 1 else np.zeros(0, complex)
        return PredictedSpectrum(True, False, pts)
    m = -k
    if m == 1:
        return PredictedSpectrum(True, abs(alpha + 1) < 1e-14, np.zeros(0, complex))
    if alpha == 0:
        return PredictedSpectrum(True, False, np.zeros(0, complex))
    pts = _roots_of_power(m - 1, -1.0 / alpha)
    return PredictedSpectrum(True, False, pts[np.abs(pts) < 1])


# ================
# Example checks
# ================

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    anchor: str = ''

    @property
    def passed(self):
        return bool(self.value <= self.threshold)


@dataclass(frozen=True)
class ExampleReport:
    spec: OperatorSpec
    checks: tuple
    data: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _alternating_check(spec, A):
    N = spec.window
    p = spec.params
    lam1 = complex(p.get('lambda1', 1.0))
    lam2 = complex(p.get('lambda2', -1.0))
    rho = float(p.get('rho', 1.0))
    P = poly_eval(MonicPoly.from_roots([lam1, lam2]), A)
    S = _shift(2 * N + 1, spec.boundary == 'periodic')
    D = P - (rho * S) @ (rho * S)
    band = 2
    cols = slice(band, D.shape[1] - band)
    err = float(np.max(np.abs(D[:, cols]))) if D[:, cols].size else 0.0
    return [Check('interior columns of p(T) - (rho S)^2', err, 1e-12, 'alternating shift: p(T) = (rho S)^2')]


def _circulant_sum_check(spec, A):
    lo, hi = spec.params.get('blocks', (2, 12))
    lo, hi = int(lo), int(hi)
    kmax = int(spec.params.get('kmax', hi - 1))
    dev = 0.0
    Ak = np.eye(A.shape[0], dtype=complex)
    norms = []
    for _ in range(kmax):
        Ak = Ak @ A
        nk = op_norm(Ak)
        norms.append(nk)
        dev = max(dev, abs(nk - 2.0))
    per = 0.0
    for n in range(lo, hi + 1):
        An = circulant_block(n)
        per = max(per, float(np.max(np.abs(np.linalg.matrix_power(An, n) - np.eye(n)))))
    return [Check('max_k | ||A^k|| - 2 |', dev, 1e-9, 'circulant sum: ||A^n|| = 2 for n != 0'),
            Check('max_n ||A_n(r_n)^n - I||_max', per, 1e-12, 'circulant: A_n(r)^n = I')], {'norms': norms}


def _circulant_check(spec, A):
    n = A.shape[0]
    r = spec.params.get('r')
    r = 2.0 ** (-1.0 / (n - 1)) if r is None else float(r)
    pos, neg = 0.0, 0.0
    Ai = np.linalg.inv(A)
    for k in range(1, n):
        pos = max(pos, abs(op_norm(np.linalg.matrix_power(A, k)) - r ** (-k)) / r ** (-k))
        neg = max(neg, abs(op_norm(np.linalg.matrix_power(Ai, k)) - r ** (k - n)) / r ** (k - n))
    eye = float(np.max(np.abs(np.linalg.matrix_power(A, n) - np.eye(n))))
    return [Check('A_n(r)^n - I', eye, 1e-12, 'circulant: A_n(r)^n = I'),
            Check('||A^k|| vs r^-k (relative)', pos, 1e-10, 'circulant: ||A_n(r)^k|| = r^-k'),
            Check('||A^-k|| vs r^(k-n) (relative)', neg, 1e-10, 'circulant: ||A_n(r)^-k|| = r^(k-n)')]


def _unitary_blocks_check(spec, A):
    A2 = A @ A
    d = op_norm(A2.conj().T @ A2 - np.eye(A.shape[0]))
    comm = op_norm(A @ A.conj().T - A.conj().T @ A)
    return [Check('||(A^2)* A^2 - I||', d, 1e-12, 'direct sum of rotated B: A^2 unitary')], {'commutator': comm}


def _example44_check(spec, A):
    G = A.conj().T @ A
    dev = np.max(np.abs(G - np.eye(A.shape[0])), axis=0)
    bad = np.flatnonzero(dev > 1e-12)
    keep = np.setdiff1d(np.arange(A.shape[0]), bad)
    inner = float(np.max(np.abs(G[np.ix_(keep, keep)] - np.eye(keep.size)))) if keep.size else 0.0
    return [Check('boundary columns flagged', float(bad.size), 2.0, 'block example: M_C unitary'),
            Check('orthonormality off the boundary', inner, 1e-12, 'block example: M_C unitary')], \
        {'boundary_columns': bad.tolist()}


def _shift_rank1_check(spec, A, thresh=1.1, tol=1e-6):
    pred = predict_spectrum(spec).outside(thresh)
    lam = eigenvalues(A).eigenvalues
    found = lam[np.abs(lam) > thresh]
    miss = 0.0
    for z in pred:
        miss = max(miss, float(np.min(np.abs(found - z))) if found.size else math.inf)
    spurious = 0
    for z in found:
        if not pred.size or np.min(np.abs(pred - z)) > tol:
            spurious += 1
    extra = float(spurious)
    return [Check('distance of predicted outside eigenvalues', miss, tol, 'rank-one shift perturbation spectrum'),
            Check('unpredicted eigenvalues with |lambda| > 1.1', extra, 0.0, 'rank-one shift perturbation spectrum')], \
        {'predicted': pred.tolist(), 'found': found.tolist()}


def _weighted_shift_check(spec, A):
    w = foias_pearcy_weights(min(10, spec.window - 1))
    expo = -np.log2(w)
    ref = np.array([1, 4, 1, 16, 1, 4, 1, 64, 1, 4], float)[:expo.size]
    dev = float(np.max(np.abs(expo - ref)))
    n = int(spec.params.get('power', 3))
    wf = np.diag(A, 1).real
    slide = max(np.prod(wf[i:i + n]) for i in range(wf.size - n + 1))
    got = op_norm(np.linalg.matrix_power(A, n))
    return [Check('weight exponent prefix', dev, 0.0, 'quasinilpotent weighted shift weights'),
            Check(f'||T^{n}|| vs max sliding product', abs(got - slide), 1e-10 * max(slide, 1e-300),
                  'weighted shift power norms')]


def _volterra_boundary_check(spec, A, jmax=3):
    lam = np.sort(eigenvalues(A).eigenvalues.real)[:jmax]
    ref = -1.0 / (np.pi * np.arange(1, jmax + 1)) ** 2
    rel = float(np.max(np.abs(lam - ref) / np.abs(ref)))
    return [Check('leading eigenvalues vs -1/(pi j)^2 (relative)', rel, 0.01,
                  'boundary value operator eigenvalues')], {'eigenvalues': lam.tolist()}


def _homotopy_check(spec, A, radii=None, M=None):
    from .meromorphic import loglog_slope, resolvent_growth

    radii = np.geomspace(10, 1e4, 13) if radii is None else radii
    M = int(spec.params.get('nodes', 256)) if M is None else M
    g = resolvent_growth(A, radii, M)
    s = loglog_slope(g.radii, g.T_inf)
    return [Check('|slope - 0.5| of log T against log r', abs(s - 0.5), 0.1,
                  'Volterra homotopy: T(r) ~ sqrt r')], \
        {'slope': s, 'radii': g.radii.tolist(), 'T': g.T_inf.tolist(),
         'm': g.m_inf.tolist(), 'N': g.N_inf.tolist()}


_CHECKS = {
    'alternating': _alternating_check,
    'circulant-sum': _circulant_sum_check,
    'circulant': _circulant_check,
    'unitary-blocks': _unitary_blocks_check,
    'example44': _example44_check,
    'shift-rank1': _shift_rank1_check,
    'weighted-shift': _weighted_shift_check,
    'volterra-boundary': _volterra_boundary_check,
    'homotopy': _homotopy_check,
}


def verify_example(spec):
    """Run the closed-form checks of *spec*'s family (none for plain families)."""
    A = make(spec)
    fn = _CHECKS.get(spec.family)
    if fn is None:
        return ExampleReport(spec, ())
    out = fn(spec, A)
    if isinstance(out, tuple):
        checks, data = out
    else:
        checks, data = out, {}
    return ExampleReport(spec, tuple(checks), data)


# ======================
# Window-size studies
# ======================

@dataclass(frozen=True)
class ConvergenceTable:
    windows: np.ndarray
    values: np.ndarray
    differences: np.ndarray
    rates: np.ndarray

    def rows(self):
        d = np.concatenate(([np.nan], self.differences))
        r = np.concatenate(([np.nan, np.nan], self.rates))
        return [(int(w), complex(v), float(a), float(b))
                for w, v, a, b in zip(self.windows, self.values, d, r)]


def truncation_convergence(spec, quantity, windows, target=None, power=None, r=None, M=256):
    """
    A quantity across window sizes, with successive differences.

    Parameters
    ----------
    quantity : {'eigenvalue', 'norm-of-power', 'growth-curve'}
        ``eigenvalue`` tracks the eigenvalue closest to *target* (default:
        the one of largest modulus); ``norm-of-power`` is ``||A^power||``;
        ``growth-curve`` is ``T(r, (1 - zA)^-1)``.

    Returns
    -------
    ConvergenceTable
        ``rates[i]`` is the per-unit-window ratio
        ``(d[i+1] / d[i])^(1 / (N[i+2] - N[i+1]))`` of successive differences.
    """
    windows = [int(w) for w in windows]
    vals = []
    for N in windows:
        A = make(spec.with_window(N))
        if quantity == 'eigenvalue':
            lam = eigenvalues(A).eigenvalues
            i = np.argmax(np.abs(lam)) if target is None else np.argmin(np.abs(lam - target))
            vals.append(complex(lam[i]))
        elif quantity == 'norm-of-power':
            vals.append(op_norm(np.linalg.matrix_power(A, int(power or 1))))
        elif quantity == 'growth-curve':
            from .meromorphic import growth_at
            vals.append(growth_at(A, float(r or 10.0), M))
        else:
            raise InputError(f'unknown quantity {quantity!r}')
    vals = np.array(vals, dtype=complex)
    diffs = np.abs(np.diff(vals))
    rates = []
    for i in range(len(diffs) - 1):
        step = windows[i + 2] - windows[i + 1]
        if diffs[i] > 0 and diffs[i + 1] > 0 and step > 0:
            rates.append((diffs[i + 1] / diffs[i]) ** (1.0 / step))
        else:
            rates.append(0.0 if diffs[i + 1] == 0 else np.nan)
    return ConvergenceTable(np.array(windows), vals, diffs, np.array(rates))


# =============
# Config files
# =============

def _parse_value(text):
    text = text.strip()
    if '..' in text and not text.startswith(('[', '(')):
        lo, hi = text.split('..', 1)
        return (int(lo), int(hi))
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_spec_text(text):
    """
    Build an :class:`OperatorSpec` from ``key = value`` lines.

    ``family``, ``window`` and ``boundary`` are fields; every other key
    goes into ``params``.  ``#`` starts a comment.  Values are Python
    literals, ``lo..hi`` ranges or bare strings.
    """
    kw = {'params': {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise InputError(f'line {lineno}: expected key = value, got {raw!r}')
        key, val = (s.strip() for s in line.split('=', 1))
        val = _parse_value(val)
        if key in ('family', 'window', 'boundary'):
            kw[key] = val
        else:
            kw['params'][key] = val
    if 'family' not in kw:
        raise InputError('spec has no family')
    return OperatorSpec(**kw)


def load_spec(path):
    with open(path, encoding='utf-8') as fh:
        return parse_spec_text(fh.read())
