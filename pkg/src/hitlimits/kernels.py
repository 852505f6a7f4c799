"""Compiled orbit kernels behind the Monte Carlo samplers.

Family codes: ``DOUBLING`` iterates a 53-bit integer mantissa and shifts a
fresh random bit in at the bottom every step, which is the exact orbit of a
real point whose unseen binary digits are i.i.d. fair bits (plain floating-point
doubling collapses to 0 after 53 steps).  ``AFFINE`` runs an arbitrary
piecewise affine table.  ``INTERMITTENT`` runs ``x + 2^p x^(1+p)`` / ``2x - 1``
with the same low-bit refresh on the ``2x - 1`` branch.

Raw hitting times use ``-1`` for overflow (cap exceeded).
"""

import math

import numpy as np
from numba import njit, prange

from .rng import draw_u64, draw_uniform, draw_uniform_pos, sample_key

DOUBLING = 0
AFFINE = 1
INTERMITTENT = 2

_TWO53 = 9007199254740992.0
_INV53 = 1.0 / _TWO53
_MASK53 = np.uint64((1 << 53) - 1)
_ONE = np.uint64(1)
_ONE_MINUS = 1.0 - 2.0**-53
_TINY = 1e-300


@njit(inline="always")
def in_set(x, lo, hi, clo, chi):
    for i in range(lo.shape[0]):
        if x < lo[i]:
            return False
        if x < hi[i]:
            if x > lo[i] or clo[i]:
                return True
        elif x == hi[i] and chi[i]:
            return True
    return False


@njit(inline="always")
def draw_initial(key, law_lo, law_hi, law_cum):
    u = draw_uniform(key, 0)
    c = np.searchsorted(law_cum, u, side="right")
    if c >= law_cum.shape[0]:
        c = law_cum.shape[0] - 1
    x = law_lo[c] + (law_hi[c] - law_lo[c]) * draw_uniform(key, 1)
    if x >= law_hi[c] and law_hi[c] > law_lo[c]:
        x = law_lo[c]
    if x > _ONE_MINUS:
        x = _ONE_MINUS
    return x


@njit(inline="always")
def affine_step(x, a_lo, a_val, a_slope):
    i = np.searchsorted(a_lo, x, side="right") - 1
    y = a_val[i] + a_slope[i] * (x - a_lo[i])
    if y > _ONE_MINUS:
        y = _ONE_MINUS
    elif y < 0.0:
        y = 0.0
    return y


@njit(parallel=True, cache=True)
def hitting_kernel(family, p, a_lo, a_val, a_slope,
                   law_lo, law_hi, law_cum,
                   e_lo, e_hi, e_clo, e_chi,
                   y_lo, y_hi, y_clo, y_chi,
                   induced, cap, stream, offset, n):
    """First hitting time of E (or, with ``induced``, of E under the first
    return map to Y, counting returns) for ``n`` initial points."""
    x0s = np.empty(n, dtype=np.float64)
    raw = np.empty(n, dtype=np.int64)
    c = 2.0**p
    for s in prange(n):
        key = sample_key(stream, offset + s)
        x = draw_initial(key, law_lo, law_hi, law_cum)
        x0s[s] = x
        ctr = 2
        m = np.uint64(x * _TWO53)
        word = np.uint64(0)
        nbits = 0
        t = 0
        count = 0
        result = -1
        # the cap counts returns in induced mode and base steps otherwise
        while (count < cap) if induced else (t < cap):
            if family == DOUBLING:
                if nbits == 0:
                    word = draw_u64(key, ctr)
                    ctr += 1
                    nbits = 64
                m = ((m << _ONE) & _MASK53) | (word & _ONE)
                word = word >> _ONE
                nbits -= 1
                x = float(m) * _INV53
            elif family == AFFINE:
                x = affine_step(x, a_lo, a_val, a_slope)
            else:
                if x < 0.5:
                    if x < _TINY:
                        x = 0.0
                    else:
                        x = x + c * x ** (1.0 + p)
                        if x > _ONE_MINUS:
                            x = _ONE_MINUS
                else:
                    if nbits == 0:
                        word = draw_u64(key, ctr)
                        ctr += 1
                        nbits = 64
                    x = 2.0 * x - 1.0 + float(word & _ONE) * _INV53
                    word = word >> _ONE
                    nbits -= 1
            t += 1
            if induced:
                if in_set(x, y_lo, y_hi, y_clo, y_chi):
                    count += 1
                    if in_set(x, e_lo, e_hi, e_clo, e_chi):
                        result = count
                        break
            elif in_set(x, e_lo, e_hi, e_clo, e_chi):
                result = t
                break
        raw[s] = result
    return x0s, raw


@njit(inline="always")
def _normal(key, ctr):
    u1 = draw_uniform_pos(key, ctr)
    u2 = draw_uniform(key, ctr + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(parallel=True, cache=True)
def renewal_kernel(a_lo, a_val, a_slope,
                   law_lo, law_hi, law_cum,
                   e_lo, e_hi, e_clo, e_chi,
                   y_lo, y_hi, y_clo, y_chi,
                   induced, burn_in, log1mq, rt_values, rt_cum, rt_mean, rt_var,
                   n_direct, cap, stream, offset, n):
    """Hitting times for a map whose first return map to Y is piecewise onto
    and affine, so that excursions from Y are i.i.d.

    The true orbit is simulated for ``burn_in`` returns to Y.  After that the
    number of further excursions up to the first one entering E is geometric
    with ``log(1-q) = log1mq``, and the lengths of the non-entering ones are
    i.i.d. with values ``rt_values`` and cumulative law ``rt_cum``.  Their sum
    is drawn exactly below ``n_direct`` terms and from the Gaussian limit
    above it.  Returns float times (they can exceed 2^63); ``inf`` = overflow.
    """
    x0s = np.empty(n, dtype=np.float64)
    raw = np.empty(n, dtype=np.float64)
    big = rt_values.shape[0]
    for s in prange(n):
        key = sample_key(stream, offset + s)
        x = draw_initial(key, law_lo, law_hi, law_cum)
        x0s[s] = x
        ctr = 2
        t = 0.0
        count = 0
        result = -1.0
        renew = burn_in == 0 and in_set(x, y_lo, y_hi, y_clo, y_chi)
        while not renew and t < cap:
            x = affine_step(x, a_lo, a_val, a_slope)
            t += 1.0
            inY = in_set(x, y_lo, y_hi, y_clo, y_chi)
            if induced:
                if inY:
                    count += 1
                    if in_set(x, e_lo, e_hi, e_clo, e_chi):
                        result = float(count)
                        break
                    if count >= burn_in:
                        renew = True
            else:
                if in_set(x, e_lo, e_hi, e_clo, e_chi):
                    result = t
                    break
                if inY:
                    count += 1
                    if count >= burn_in:
                        renew = True
        if renew:
            g = 1.0 + math.floor(math.log(draw_uniform_pos(key, ctr)) / log1mq)
            ctr += 1
            if induced:
                result = count + g
            else:
                rest = g - 1.0
                if rest <= n_direct:
                    total = 0.0
                    for _ in range(int(rest)):
                        c = np.searchsorted(rt_cum, draw_uniform(key, ctr), side="right")
                        ctr += 1
                        if c >= big:
                            c = big - 1
                        total += rt_values[c]
                else:
                    total = rest * rt_mean + math.sqrt(rest * rt_var) * _normal(key, ctr)
                    ctr += 2
                    total = max(math.floor(total + 0.5), rest)
                result = t + total + 1.0
        if result < 0.0 or result > cap:
            result = np.inf
        raw[s] = result
    return x0s, raw
