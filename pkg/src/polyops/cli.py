"""
Command-line front end.

Every command writes a JSON report with the keys ``command``, ``params``,
``seed``, ``version``, ``inputs`` (SHA-256 of each input file), ``results``,
``assertions`` and ``timings``.  The exit status is 0 when every assertion
passes, 1 when some fail and 2 for unusable input.
"""

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .cmx import read_cmx
from .errors import PolyopsError
from .suites import assertion

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


# ==============
# JSON plumbing
# ==============

def to_jsonable(x):
    """Numbers, arrays and complex values as plain JSON types; complex as [re, im]."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        if z.imag == 0:
            return to_jsonable(z.real)
        return [to_jsonable(z.real), to_jsonable(z.imag)]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isfinite(v):
            return v
        return 'nan' if math.isnan(v) else ('inf' if v > 0 else '-inf')
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _digest(path):
    h = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects results and assertions for one command."""

    def __init__(self, args):
        self.args = args
        self.results = {}
        self.assertions = []
        self.inputs = {}
        self.csv_rows = None
        self.csv_header = None
        self.t0 = time.perf_counter()

    @property
    def tol_scale(self):
        return self.args.tol_scale

    def matrix(self, path):
        self.inputs[path] = _digest(path)
        return read_cmx(path)

    def check(self, name, anchor, lhs, rhs, ok=None):
        self.assertions.append(assertion(name, anchor, lhs, rhs, ok))

    def csv(self, header, rows):
        self.csv_header, self.csv_rows = header, rows

    def report(self):
        params = {k: v for k, v in sorted(vars(self.args).items())
                  if k not in ('func', 'json', 'csv', 'report', 'config')}
        return to_jsonable({
            'command': self.args.command,
            'params': params,
            'seed': self.args.seed,
            'version': __version__,
            'inputs': self.inputs,
            'results': self.results,
            'assertions': self.assertions,
            'timings': {'total_seconds': time.perf_counter() - self.t0},
        })


def _floats(text):
    return [float(t) for t in str(text).split(',') if t.strip()]


def _complexes(text):
    return [complex(t.strip().replace(' ', '')) for t in str(text).split(',') if t.strip()]


# =========
# Commands
# =========

def cmd_capacity(run):
    from .capacity import capacity_profile

    A = run.matrix(run.args.matrix)
    prof = capacity_profile(A, run.args.nmax)
    rows = []
    for r, env in zip(prof, prof.envelope):
        rows.append((r.degree, r.value, r.cap_n, env))
        run.check(f'converged[n={r.degree}]', 'monic minimisation optimality certificate',
                  r.stationarity_residual, 1e-7 * run.tol_scale, r.converged)
    run.results = {'degrees': [r.degree for r in prof],
                   'values': [r.value for r in prof],
                   'cap': prof.cap, 'envelope': prof.envelope,
                   'coefficients': [list(r.poly.lower) for r in prof]}
    run.check('envelope_nonincreasing', 'capacity as infimum over monic polynomials',
              float(np.max(np.diff(prof.envelope), initial=0.0)), 0.0)
    run.csv(('n', 'value', 'cap_n', 'envelope'), rows)


def cmd_growth(run):
    from .meromorphic import resolvent_growth

    A = run.matrix(run.args.matrix)
    g = resolvent_growth(A, _floats(run.args.radii), run.args.nodes)
    run.results = {'radii': g.radii, 'm_inf': g.m_inf, 'N_inf': g.N_inf, 'T_inf': g.T_inf,
                   'nodes': g.quadrature_nodes, 'skipped_nodes': g.skipped}
    run.check('T_nonnegative', 'growth functions m, N, T of the resolvent',
              -float(np.min(g.T_inf)), 0.0)
    run.csv(('r', 'm', 'N', 'T'), g.rows())


def cmd_project(run):
    from .numkernel import MonicPoly
    from .projection import choose_rho, lemniscate_projections

    a = run.args
    A = run.matrix(a.matrix)
    if a.poly:
        if a.rho is None:
            raise PolyopsError('--poly needs --rho')
        p = MonicPoly.from_coeffs(_complexes(a.poly))
        L = lemniscate_projections(A, p, a.rho, a.nodes, a.eps, a.theta)
        run.results = {'rho': a.rho, 'roots': L.roots, 'C0': L.C0, 'C': L.C, 'log_M': L.log_M,
                       'ranks': [c.rank for c in L], 'norms': [c.norm for c in L],
                       'idem_residuals': [c.idem_residual for c in L],
                       'additivity': L.additivity}
        run.check('additivity', 'lemniscate projections add up to P_rho',
                  L.additivity, 1e-6 * run.tol_scale)
        for j, c in enumerate(L):
            run.check(f'idempotent[{j}]', 'Riesz projection P^2 = P', c.idem_residual,
                      1e-6 * run.tol_scale)
        run.check('norm_bounds', 'lemniscate projection bound ||P_rho,j|| <= C_j M',
                  0.0, 0.0, L.bounds_ok)
        return
    rho, rep = choose_rho(A, a.eps, a.theta, a.nodes)
    ex = rep.extra
    run.results = {'rho': rho, 'norm': rep.norm, 'log_norm': ex['log_norm'], 'T': ex['T'],
                   'bound_rhs': rep.bound_rhs, 'pole_count': rep.pole_count,
                   'rank': rep.rank, 'idem_residual': rep.idem_residual,
                   'converged': rep.converged, 'eps': ex['eps'], 'theta': ex['theta']}
    slack = 0.1 * run.tol_scale
    run.check('norm_bound', 'projection norm bound log||P|| <= C(theta) T',
              ex['log_norm'], rep.bound_rhs + slack)
    run.check('count_bound', 'eigenvalue count bound n < T / log theta',
              rep.pole_count, ex['T'] / math.log(ex['theta']) + slack)
    run.check('idempotent', 'Riesz projection P^2 = P', rep.idem_residual, 1e-6 * run.tol_scale)


def cmd_split(run):
    from .projection import split_algebraic

    a = run.args
    A = run.matrix(a.matrix)
    s = split_algebraic(A, a.eps, a.theta, a.nodes)
    run.results = {'rho': s.P.rho, 'deg_B': s.deg_B, 'e_radius': s.e_radius,
                   'annihilation_residual': s.annihilation_residual,
                   'outside_eigenvalues': s.outside}
    run.check('E_spectrum_inside', 'algebraic plus small splitting A = B + E',
              s.e_radius, s.P.rho, s.e_radius < s.P.rho)
    run.check('B_annihilated', 'algebraic plus small splitting A = B + E',
              s.annihilation_residual, 1e-6 * run.tol_scale)
    run.check('sum_exact', 'algebraic plus small splitting A = B + E',
              float(np.max(np.abs(A - (s.B + s.E)))), 1e-14 * max(1.0, float(np.max(np.abs(A)))))


def cmd_classify(run):
    from . import classify as C

    a = run.args
    A = run.matrix(a.matrix)
    kind = a.cls
    tol = 1e-8 * run.tol_scale
    if kind == 'normal':
        rep = C.poly_normal_search(A, a.dmax, seed=a.seed)
        run.results = {'degree': rep.degree, 'coeffs': rep.coeffs, 'defect': rep.defect,
                       'certified': rep.certified, 'history': rep.history}
        run.check('certified', 'polynomially normal search', rep.defect, tol, rep.certified)
    elif kind == 'unitary':
        rep = C.poly_unitary_search(A, a.dmax, seed=a.seed)
        runs = rep.extra.get('runs', ())
        run.results = {'degree': rep.degree, 'coeffs': rep.coeffs, 'defect': rep.defect,
                       'certified': rep.certified, 'history': rep.history, 'runs': runs}
        for r in runs:
            run.check(f'lower_bound[d={r["degree"]}]', 'eigenvalue lower bound on the unitary defect',
                      r['lower_bound'], r['defect'] + 1e-9)
        run.check('certified', 'polynomially unitary search', rep.defect, tol, rep.certified)
    elif kind == 'minimal':
        p = C.minimal_polynomial(A)
        run.results = {'degree': p.degree, 'coeffs': p.coeffs}
    elif kind == 'simplifying':
        rep = C.simplifying_polynomial(A, full_output=True)
        run.results = {'coeffs': rep.poly.coeffs, 'residual': rep.residual, 'cond_V': rep.cond_V,
                       'diagonalizable': rep.diagonalizable}
        run.check('diagonalizable', 'simplifying polynomial s_A(A) diagonalisable',
                  rep.residual, 1e-6 * run.tol_scale)
    elif kind == 'lrg':
        rep = C.lrg_constant(A, full_output=True)
        run.results = {'constant': rep.constant, 'ring_max': rep.ring_max, 'radii': rep.radii,
                       'unbounded': rep.unbounded}
    elif kind == 'power':
        rep = C.power_bounded_scan(A, a.dmax)
        run.results = {'sup_norm_pos': rep.sup_norm_pos, 'sup_norm_neg': rep.sup_norm_neg,
                       'norms_pos': rep.norms_pos, 'norms_neg': rep.norms_neg,
                       'unbounded': rep.unbounded}
    else:
        raise PolyopsError(f'unknown class {kind!r}')


def cmd_multicentric(run):
    from .multicentric import builtin_phi, decompose, decompose_table, eval_phi

    a = run.args
    A = run.matrix(a.matrix)
    centers = _complexes(a.centers)
    if a.phi_table:
        T = run.matrix(a.phi_table)
        f = decompose_table(T[:, 0], T[:, 1], centers, K=a.terms)
        direct = None
    elif a.phi:
        phi = builtin_phi(a.phi)
        f = decompose(phi, centers, K=a.terms)
        direct = _direct_phi(a.phi, A)
    else:
        raise PolyopsError('give --phi or --phi-table')
    out, info = eval_phi(A, f, full_output=True)
    run.results = {'phi_A': out, 'series_radius': f.radius, **info}
    if direct is not None:
        err = float(np.linalg.norm(out - direct, 2) / max(np.linalg.norm(direct, 2), 1e-300))
        run.results['relative_error_vs_direct'] = err
        run.check('matches_direct', 'multicentric representation of phi(A)', err,
                  1e-8 * run.tol_scale)


def _direct_phi(spec, A):
    import scipy.linalg as sla

    from .numkernel import polyval_matrix

    name, _, arg = spec.partition(':')
    name = name.strip().lower()
    if name == 'exp':
        return sla.expm(A)
    if name == 'log':
        return sla.logm(A)
    if name == 'power':
        return sla.fractional_matrix_power(A, float(arg))
    if name == 'poly':
        return polyval_matrix(_complexes(arg), A)
    if name == 'rational':
        num, _, den = arg.partition(';')
        return np.linalg.solve(polyval_matrix(_complexes(den), A), polyval_matrix(_complexes(num), A))
    return None


def cmd_block(run):
    from . import blockops as B

    a = run.args
    A, Bm, Cm = run.matrix(a.a), run.matrix(a.b), run.matrix(a.c)
    t = B.BlockTriple(A, Bm, Cm)
    checks = set(a.check.split(',')) if a.check != 'all' else {
        'spectrum', 'sylvester', 'diag', 'resolvent', 'degree', 'normality', 'growth'}
    ts = run.tol_scale
    if 'spectrum' in checks:
        s = B.spectrum_check(t)
        run.results['spectrum'] = {'matching_distance': s.matching_distance, 'hausdorff': s.hausdorff}
        run.check('spectrum', 'spectrum of M_C is the union of the diagonal spectra',
                  s.matching_distance, s.tol * ts)
    if 'sylvester' in checks or 'diag' in checks:
        d = B.block_diagonalize(t)
        run.results['block_diagonalize'] = {'residual': d.residual,
                                            'sylvester_residual': d.sylvester_residual,
                                            'charpoly_error': d.charpoly_error}
        run.check('sylvester', 'Sylvester equation AX - XB = C', d.sylvester_residual, 1e-9 * ts)
        run.check('block_diagonal', 'block diagonalisation by the Sylvester solution',
                  d.residual, 1e-8 * ts)
    if 'resolvent' in checks:
        lam = 2.0 * max(1.0, np.linalg.norm(B.assemble(t), 2))
        r = B.resolvent_block_check(t, lam)
        run.results['resolvent'] = {'lambda': lam, 'rel_error': r.rel_error}
        run.check('resolvent_corner', 'resolvent corner (l - A)^-1 C (l - B)^-1',
                  r.rel_error, 1e-9 * ts)
    if 'degree' in checks:
        d = B.degree_bound_check(t)
        run.results['degree'] = vars(d) if hasattr(d, '__dict__') else d._asdict()
        run.check('degree_bound', 'deg M_C <= 2 (deg A + deg B)', d.deg_M, 2 * (d.deg_A + d.deg_B))
        run.check('corner_only', '(m_A m_B)(M_C) has zero diagonal blocks', d.diag_residual, 1e-8 * ts)
        run.check('square_zero', '((m_A m_B)(M_C))^2 = 0', d.square_residual, 1e-8 * ts)
    if 'normality' in checks:
        n = B.normality_obstruction(t)
        run.results['normality'] = {'commutator': n.commutator, 'normal': n.normal,
                                    'identity_residual': n.identity_residual,
                                    'M0_normal': n.M0_normal}
        run.check('normality_obstruction', 'normal M_C forces C*C + B*B = BB*', 0.0, 0.0, n.consistent)
    if 'growth' in checks:
        radii = _floats(a.radii)
        g = B.growth_subadditivity(t, radii, a.nodes)
        run.results['growth'] = {'radii': g.radii, 'T_M': g.T_M, 'T_A': g.T_A, 'T_B': g.T_B,
                                 'rhs': g.rhs}
        for r, lhs, rhs in zip(g.radii, g.T_M, g.rhs):
            run.check(f'growth[r={r:g}]', 'growth of the block resolvent', lhs, rhs)


def _zoo_spec(run):
    from .zoo import OperatorSpec, _parse_value, load_spec

    a = run.args
    if a.spec:
        run.inputs[a.spec] = _digest(a.spec)
        return load_spec(a.spec)
    params = {}
    for item in a.param or ():
        if '=' not in item:
            raise PolyopsError(f'--param expects key=value, got {item!r}')
        k, v = item.split('=', 1)
        params[k.strip()] = _parse_value(v)
    if a.blocks:
        params['blocks'] = _parse_value(a.blocks)
    return OperatorSpec(a.family, params, a.window, a.boundary)


def cmd_zoo(run):
    from .zoo import FAMILIES, make, verify_example

    a = run.args
    if a.action == 'list':
        run.results = {'families': FAMILIES}
        return
    if not a.family and not a.spec:
        raise PolyopsError('zoo run needs --family or --spec')
    spec = _zoo_spec(run)
    rep = verify_example(spec)
    run.results = {'family': spec.family, 'window': spec.window, 'boundary': spec.boundary,
                   'shape': list(make(spec).shape), 'data': rep.data,
                   'checks': [{'name': c.name, 'value': c.value, 'threshold': c.threshold}
                              for c in rep.checks]}
    for c in rep.checks:
        run.check(c.name, c.anchor, c.value, c.threshold)
    if 'norms' in rep.data:
        run.csv(('k', 'norm'), list(enumerate(rep.data['norms'], start=1)))


def cmd_verify(run):
    from .suites import SUITES

    a = run.args
    names = sorted(SUITES) if a.suite == 'all' else [a.suite]
    for name in names:
        res = SUITES[name](a.count, seed=a.seed, tol_scale=run.tol_scale)
        run.assertions.extend(res)
        run.results[name] = {'instances': a.count, 'assertions': len(res),
                             'failures': sum(not r['pass'] for r in res),
                             'min_slack': min(r['rhs'] - r['lhs'] for r in res)}


# ========
# Parsing
# ========

def build_parser():
    top = argparse.ArgumentParser(prog='polyops', description='Simplifying matrices by polynomials.')
    top.add_argument('--version', action='version', version=f'polyops {__version__}')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='random seed (default 0)')
    common.add_argument('--tol-scale', type=float, default=1.0,
                        help='multiply every assertion tolerance by this factor')
    common.add_argument('--json', metavar='OUT', help='write the JSON report here')
    common.add_argument('--report', metavar='OUT', help='alias of --json')
    common.add_argument('--csv', metavar='OUT', help='write curves as CSV here')
    common.add_argument('--config', metavar='FILE', help='key = value defaults for this command')
    sub = top.add_subparsers(dest='command', required=True)

    p = sub.add_parser('capacity', parents=[common], help='monic minimisation profile')
    p.add_argument('--matrix', required=True)
    p.add_argument('--nmax', type=int, default=8)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser('growth', parents=[common], help='m, N, T of the resolvent')
    p.add_argument('--matrix', required=True)
    p.add_argument('--radii', default='1,2,4,8,16')
    p.add_argument('--nodes', type=int, default=1024)
    p.set_defaults(func=cmd_growth)

    for name, fn, hlp in (('project', cmd_project, 'Riesz projections and their bounds'),
                          ('split', cmd_split, 'algebraic plus small splitting')):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument('--matrix', required=True)
        p.add_argument('--eps', type=float, default=None)
        p.add_argument('--theta', type=float, default=4.0)
        p.add_argument('--nodes', type=int, default=1024)
        if name == 'project':
            p.add_argument('--poly', default=None, help='full coefficients, highest first')
            p.add_argument('--rho', type=float, default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser('classify', parents=[common], help='polynomial class searches')
    p.add_argument('--matrix', required=True)
    p.add_argument('--class', dest='cls', default='normal',
                   choices=['normal', 'unitary', 'minimal', 'simplifying', 'lrg', 'power'])
    p.add_argument('--dmax', type=int, default=6)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser('multicentric', parents=[common], help='phi(A) by multicentric calculus')
    p.add_argument('--matrix', required=True)
    p.add_argument('--centers', required=True)
    p.add_argument('--phi', default=None)
    p.add_argument('--phi-table', default=None)
    p.add_argument('--terms', type=int, default=64)
    p.set_defaults(func=cmd_multicentric)

    p = sub.add_parser('block', parents=[common], help='block upper-triangular checks')
    p.add_argument('--a', required=True)
    p.add_argument('--b', required=True)
    p.add_argument('--c', required=True)
    p.add_argument('--check', default='all')
    p.add_argument('--radii', default='1,4,16')
    p.add_argument('--nodes', type=int, default=1024)
    p.set_defaults(func=cmd_block)

    p = sub.add_parser('zoo', parents=[common], help='example operator gallery')
    p.add_argument('action', choices=['list', 'run'])
    p.add_argument('--family', default=None)
    p.add_argument('--window', type=int, default=64)
    p.add_argument('--boundary', default='zero', choices=['zero', 'periodic'])
    p.add_argument('--blocks', default=None, help='range lo..hi for circulant sums')
    p.add_argument('--param', action='append', help='family parameter key=value')
    p.add_argument('--check', default='all', help='accepted for compatibility; all checks run')
    p.add_argument('--spec', default=None, help='key = value spec file')
    p.set_defaults(func=cmd_zoo)

    p = sub.add_parser('verify', parents=[common], help='randomised inequality suites')
    p.add_argument('--suite', default='all', choices=['all', 'growth', 'projection', 'block'])
    p.add_argument('--count', type=int, default=100)
    p.set_defaults(func=cmd_verify)
    return top


def _apply_config(parser, args, argv):
    from .zoo import _parse_value

    with open(args.config, encoding='utf-8') as fh:
        lines = fh.read().splitlines()
    given = {a.split('=')[0] for a in argv if a.startswith('--')}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise PolyopsError(f'{args.config}:{lineno}: expected key = value')
        key, val = (s.strip() for s in line.split('=', 1))
        dest = key.replace('-', '_')
        if not hasattr(args, dest):
            raise PolyopsError(f'{args.config}:{lineno}: unknown option {key!r}')
        if '--' + key.replace('_', '-') in given:
            continue
        v = _parse_value(val)
        if isinstance(v, tuple) and dest not in ('blocks',):
            v = ','.join(str(x) for x in v)
        setattr(args, dest, str(v) if isinstance(getattr(args, dest), str) else v)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            _apply_config(parser, args, argv)
        run = Run(args)
        args.func(run)
    except (PolyopsError, OSError, ValueError) as exc:
        print(f'polyops: error: {exc}', file=sys.stderr)
        return EXIT_INPUT
    rep = run.report()
    text = json.dumps(rep, sort_keys=True, indent=2)
    out = args.json or args.report
    if out:
        with open(out, 'w', encoding='utf-8') as fh:
            fh.write(text + '\n')
    else:
        print(text)
    if args.csv and run.csv_rows is not None:
        import csv
        with open(args.csv, 'w', newline='', encoding='utf-8') as fh:
            w = csv.writer(fh)
            w.writerow(run.csv_header)
            for row in run.csv_rows:
                w.writerow([to_jsonable(v) for v in row])
    failed = [a['name'] for a in run.assertions if not a['pass']]
    if failed:
        print('polyops: failed assertions: ' + ', '.join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
