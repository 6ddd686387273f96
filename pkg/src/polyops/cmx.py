"""
Reader and writer for the plain-text "cmx" matrix format.

The first line holds ``rows cols``; each following line holds one row of
``re+imj`` tokens separated by whitespace.  Floats are written with
``repr`` so a write/read cycle reproduces every finite double exactly.
"""

import math

import numpy as np

from .errors import InputError

__all__ = ['format_token', 'parse_token', 'dumps', 'loads', 'read_cmx', 'write_cmx']


def format_token(z):
    z = complex(z)
    re, im = z.real, z.imag
    if not (math.isfinite(re) and math.isfinite(im)):
        raise InputError(f'non-finite entry {z!r}')
    sign = '-' if math.copysign(1.0, im) < 0 else '+'
    return f'{re!r}{sign}{abs(im)!r}j'


def _split_point(tok):
    # last sign that is not the leading one and not part of an exponent
    for i in range(len(tok) - 1, 0, -1):
        if tok[i] in '+-' and tok[i - 1] not in 'eE':
            return i
    return None


def parse_token(tok):
    tok = tok.strip()
    try:
        if tok.endswith('j'):
            body = tok[:-1]
            k = _split_point(body)
            if k is None:
                re, im = 0.0, float(body)
            else:
                re, im = float(body[:k]), float(body[k:])
        else:
            re, im = float(tok), 0.0
    except ValueError as exc:
        raise InputError(f'bad matrix token {tok!r}') from exc
    if not (math.isfinite(re) and math.isfinite(im)):
        raise InputError(f'non-finite matrix token {tok!r}')
    return complex(re, im)


def dumps(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise InputError('cmx holds 2-D matrices only')
    lines = [f'{A.shape[0]} {A.shape[1]}']
    for row in A:
        lines.append(' '.join(format_token(z) for z in row))
    return '\n'.join(lines) + '\n'


def loads(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith('#')]
    if not lines:
        raise InputError('empty cmx document')
    head = lines[0].split()
    if len(head) != 2:
        raise InputError(f'bad cmx header {lines[0]!r}')
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError as exc:
        raise InputError(f'bad cmx header {lines[0]!r}') from exc
    if rows < 0 or cols < 0:
        raise InputError('negative cmx dimensions')
    body = lines[1:]
    if len(body) != rows:
        raise InputError(f'expected {rows} rows, found {len(body)}')
    A = np.empty((rows, cols), dtype=complex)
    for i, ln in enumerate(body):
        toks = ln.split()
        if len(toks) != cols:
            raise InputError(f'row {i + 1}: expected {cols} entries, found {len(toks)}')
        A[i] = [parse_token(t) for t in toks]
    return A


def read_cmx(path):
    with open(path, encoding='utf-8') as fh:
        return loads(fh.read())


def write_cmx(path, A):
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dumps(A))
