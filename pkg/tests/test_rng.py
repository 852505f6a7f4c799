import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from numba import njit

from hitlimits.rng import draw_uniform, draw_uniform_py, sample_key, sample_key_py, stream_key


@njit
def _draws(stream, index, n):
    key = sample_key(stream, index)
    out = np.empty(n)
    for i in range(n):
        out[i] = draw_uniform(key, i)
    return out


@given(st.integers(0, 2**32), st.text(max_size=8), st.integers(0, 10**9))
def test_compiled_stream_matches_python_mirror(seed, label, index):
    stream = stream_key(seed, label)
    key = sample_key_py(int(stream), index)
    assert int(sample_key(stream, np.int64(index))) == key
    expected = [draw_uniform_py(key, c) for c in range(4)]
    assert list(_draws(stream, index, 4)) == expected


def test_uniforms_in_unit_interval_and_roughly_uniform():
    u = _draws(stream_key(7, "x"), 3, 200_000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert hist.min() > 19_000


def test_streams_differ_by_seed_and_label():
    a = _draws(stream_key(7, "a"), 0, 8)
    assert not np.array_equal(a, _draws(stream_key(8, "a"), 0, 8))
    assert not np.array_equal(a, _draws(stream_key(7, "b"), 0, 8))
    assert np.array_equal(a, _draws(stream_key(7, "a"), 0, 8))
