import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyops.cmx import dumps, loads, parse_token, read_cmx, write_cmx
from polyops.errors import InputError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_roundtrip_is_exact(r, c, data):
    vals = data.draw(st.lists(st.tuples(finite, finite), min_size=r * c, max_size=r * c))
    A = np.array([complex(a, b) for a, b in vals]).reshape(r, c)
    B = loads(dumps(A))
    assert np.array_equal(A.view(float), B.view(float))


def test_tokens():
    assert parse_token('1.5-2e-3j') == complex(1.5, -2e-3)
    assert parse_token('-3') == -3
    assert parse_token('2j') == 2j
    with pytest.raises(InputError):
        parse_token('nan+0j')
    with pytest.raises(InputError):
        parse_token('abc')


def test_shape_errors(tmp_path):
    with pytest.raises(InputError):
        loads('2 2\n1 2\n')
    with pytest.raises(InputError):
        loads('1 2\n1\n')
    p = tmp_path / 'm.cmx'
    write_cmx(p, np.eye(2))
    assert np.array_equal(read_cmx(p), np.eye(2))
