"""Counter-based random streams.

Every draw is a pure function of ``(stream key, sample index, counter)``:
the SplitMix64 finaliser applied to a Weyl sequence.  Workers that own
disjoint sample-index ranges therefore reproduce a serial run bit for bit.
"""

import zlib

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def sample_key(stream, index):
    return mix64(stream ^ mix64(np.uint64(index) * GOLDEN + GOLDEN))


@njit(inline="always")
def draw_u64(key, counter):
    return mix64(key + (np.uint64(counter) + np.uint64(1)) * GOLDEN)


@njit(inline="always")
def draw_uniform(key, counter):
    """Uniform double on ``[0, 1)`` with 53 random bits."""
    return float(draw_u64(key, counter) >> _S11) * _INV53


@njit(inline="always")
def draw_uniform_pos(key, counter):
    """Uniform double on ``(0, 1]``."""
    return (float(draw_u64(key, counter) >> _S11) + 1.0) * _INV53


# pure-Python mirror, used to pin the kernels' streams in tests


def _mix64_py(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, label: str = "") -> np.uint64:
    """Key of the stream named ``label`` under ``seed``."""
    tag = zlib.crc32(label.encode("utf-8"))
    return np.uint64(_mix64_py(_mix64_py(int(seed) & MASK64) ^ (tag * 0x9E3779B97F4A7C15)))


def sample_key_py(stream: int, index: int) -> int:
    g = 0x9E3779B97F4A7C15
    return _mix64_py(int(stream) ^ _mix64_py(index * g + g))


def draw_uniform_py(key: int, counter: int) -> float:
    g = 0x9E3779B97F4A7C15
    return (_mix64_py(key + (counter + 1) * g) >> 11) * _INV53
