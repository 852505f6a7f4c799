import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hitlimits.inducing import (
    build_induced,
    check_reach_only_via,
    hitting_time,
    induced_hitting_time,
    induced_return_times,
    neutral_boundary_orbit,
    pullback_target,
)
from hitlimits.intervals import IntervalSet, dyadic
from hitlimits.measures import LEBESGUE, ladder_measure_exact

HALF = IntervalSet.of(Fraction(1, 2), 1)


@pytest.fixture(scope="module")
def doubling_induced(doubling):
    return build_induced(doubling, HALF)


def test_doubling_first_cylinders(doubling_induced):
    W = doubling_induced.cylinders
    assert W[0] == IntervalSet.of(Fraction(3, 4), 1)
    assert W[1] == IntervalSet.of(Fraction(5, 8), Fraction(3, 4))
    assert W[2] == IntervalSet.of(Fraction(9, 16), Fraction(5, 8))


@pytest.mark.parametrize("j", [1, 2, 3, 4, 5])
def test_doubling_cylinders_agree_with_orbits(doubling, doubling_induced, j):
    cyl = doubling_induced.cylinders[j - 1]
    for piece in cyl:
        for t in (Fraction(1, 7), Fraction(1, 2), Fraction(5, 6)):
            x = piece.lo + t * piece.length()
            assert doubling_induced.return_time(x) == j


def test_doubling_kac_and_coverage(doubling_induced):
    W = doubling_induced.cylinders
    assert sum(j * float(w.total_length()) for j, w in enumerate(W, 1)) == pytest.approx(1.0, abs=1e-12)
    assert sum(float(w.total_length()) for w in W) + doubling_induced.tail_length == pytest.approx(0.5)


def test_entry_levels_telescope(doubling_induced):
    # an invariant measure sees the level j entry set as the mass with return time >= j
    W = [float(w.total_length()) for w in doubling_induced.cylinders]
    for j, U in enumerate(doubling_induced.entry_levels[:20], 1):
        assert LEBESGUE.measure_of(U) == pytest.approx(sum(W[j - 1:]) + doubling_induced.tail_length, abs=1e-12)


def test_ladder_entry_levels_telescope(ladder):
    mu = ladder_measure_exact(ladder.params)
    system = build_induced(ladder, HALF)
    W = [mu.measure_of(w) for w in system.cylinders]
    for j in (1, 2, 5, 10):
        assert mu.measure_of(system.entry_levels[j - 1]) == pytest.approx(sum(W[j - 1:]), rel=1e-9, abs=1e-15)
    assert sum(j * w for j, w in enumerate(W, 1)) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("name", ["doubling", "ladder"])
def test_return_map_is_piecewise_onto(request, name):
    T = request.getfixturevalue(name)
    assert build_induced(T, HALF).is_piecewise_onto()


def test_misaligned_inducing_set_rejected(doubling):
    with pytest.raises(ValueError, match="not a union of partition cells"):
        build_induced(doubling, IntervalSet.of(0.3, 1))
    with pytest.raises(ValueError):
        build_induced(doubling, IntervalSet())


def test_return_map_iterates(doubling_induced):
    assert doubling_induced(Fraction(9, 10)) == Fraction(4, 5)
    assert doubling_induced(Fraction(5, 8)) == Fraction(1, 2)
    with pytest.raises(ValueError):
        doubling_induced.return_time(Fraction(1, 4))


def test_hitting_time_examples(doubling):
    E = IntervalSet.of(0, Fraction(1, 4))
    assert hitting_time(doubling, Fraction(3, 10), E) == 2
    assert hitting_time(doubling, Fraction(1, 10), E) == 1
    assert hitting_time(doubling, Fraction(1, 3), E, cap=200) == math.inf


def test_induced_hitting_time_examples(doubling_induced):
    Ep = IntervalSet.of(Fraction(3, 4), 1)
    assert induced_hitting_time(doubling_induced, Fraction(9, 10), Ep) == 1
    # 5/8 -> 1/4 -> 1/2 (return, not in E') -> 0 fixed point: never
    assert induced_hitting_time(doubling_induced, Fraction(5, 8), Ep, cap=100) == math.inf
    assert induced_return_times(doubling_induced, Fraction(11, 16), 2) == [2, 1]


def test_boundary_orbit_doubling(doubling):
    c = neutral_boundary_orbit(doubling, 12)
    assert c == [dyadic(j) for j in range(13)]
    assert neutral_boundary_orbit(doubling, 0) == [1]
    with pytest.raises(ValueError):
        neutral_boundary_orbit(doubling, -1)


def test_boundary_orbit_intermittent_against_root_finder(intermittent_half):
    p = 0.5
    c = neutral_boundary_orbit(intermittent_half, 30)
    mpmath.mp.dps = 40
    ref = [mpmath.mpf(1)]
    for _ in range(30):
        y = ref[-1]
        ref.append(mpmath.findroot(lambda x: x + 2**p * x ** (1 + p) - y, y / 2))
    for a, b in zip(c, ref):
        assert a == pytest.approx(float(b), rel=1e-13)
    assert c[1] == pytest.approx(0.5, rel=1e-15)


def test_boundary_gaps_become_comparable(intermittent_half):
    c = neutral_boundary_orbit(intermittent_half, 1002)
    gap = [c[j] - c[j + 1] for j in (1000, 1001)]
    assert abs(gap[1] / gap[0] - 1) < 1e-2


@pytest.mark.parametrize("k", [3, 6, 10])
def test_pullback_of_fixed_point_cylinder(doubling, k):
    Ep = pullback_target(doubling, HALF, IntervalSet.of(0, dyadic(k)))
    assert Ep == IntervalSet.of(Fraction(1, 2), Fraction(1, 2) + dyadic(k + 1))
    # contained in the one-step preimage of E
    assert Ep.issubset(doubling.preimage(IntervalSet.of(0, dyadic(k))))


@given(st.integers(2, 30))
def test_pullback_inside_Y_and_preimage(k):
    from hitlimits.maps import build_map

    T = build_map("ladder", rule="geometric-fast", J=40)
    E = IntervalSet.of(0, dyadic(k))
    Ep = pullback_target(T, HALF, E)
    assert Ep.issubset(HALF)
    assert Ep.issubset(T.preimage(E))
    for piece in Ep:
        assert T(piece.lo + piece.length() / 2) in E


def test_reach_only_via_pullback_passes(doubling):
    E = IntervalSet.of(0, dyadic(6))
    Ep = pullback_target(doubling, HALF, E)
    assert check_reach_only_via(doubling, HALF, E, Ep).status == "PASS"


def test_reach_only_via_wrong_target_fails(doubling):
    E = IntervalSet.of(0, dyadic(4))
    verdict = check_reach_only_via(doubling, HALF, E, IntervalSet.of(Fraction(3, 4), 1))
    assert verdict.status == "FAIL" and not verdict.passed
    orbit = verdict.counterexample
    assert orbit[-1] in E


def test_reach_containment_shortcut(doubling):
    E = IntervalSet.of(Fraction(3, 4), Fraction(7, 8))
    assert check_reach_only_via(doubling, HALF, E, HALF).status == "PASS"
