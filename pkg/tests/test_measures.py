from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitlimits.intervals import Interval, IntervalSet, dyadic
from hitlimits.maps import LadderMapParams, build_map, make_ladder
from hitlimits.measures import (
    LEBESGUE,
    ConvergenceError,
    cell_transition_matrix,
    empirical_k0,
    extremal_index,
    invariance_defect,
    ladder_cell_masses,
    ladder_measure_exact,
    measure_from_dict,
    stationary_vector,
    transfer_matrix_stationary,
    ulam_density,
    ulam_edges,
    ulam_matrix,
)


@pytest.fixture(scope="module")
def ladder_exact(ladder):
    return ladder_measure_exact(ladder.params)


@pytest.fixture(scope="module")
def ulam_half(intermittent_half):
    return ulam_density(intermittent_half, 4096)


def test_lebesgue_measure_of_quarter():
    assert LEBESGUE.measure_of(IntervalSet.of(0, 0.25)) == 0.25


def test_ladder_measure_is_probability(ladder_exact):
    assert abs(ladder_exact.total_mass() - 1) < 1e-12
    assert all(d >= 0 for d in ladder_exact.densities)
    assert ladder_exact.tail_bound < 1e-12


def test_ladder_top_half_mass_is_half_of_eta0(ladder):
    eta0, mu_y = ladder_cell_masses(ladder.params)
    assert mu_y[0] == eta0 / 2


def test_ladder_recursion_is_exactly_invariant():
    # independent oracle: push every cell back through the exact inverse
    # branches with rational densities; μ(T^{-1}C) = μ(C) must hold exactly
    T = make_ladder(LadderMapParams.from_rule("geometric-fast", 12))
    eta0, mu_y = ladder_cell_masses(T.params)
    J = T.params.J
    cells = list(T.cells.values())
    dens = [Fraction(0)] + [2 ** (i + 1) * mu_y[i] for i in range(J - 1, 0, -1)] + [eta0] * J

    def mass(S):
        return sum((piece.length() * d for c, d in zip(cells, dens)
                    for piece in IntervalSet([c]).intersect(S)), Fraction(0))

    for c in cells:
        assert mass(T.preimage(IntervalSet([c]))) == mass(IntervalSet([c]))


def test_ladder_linear_in_eta0(ladder):
    # doubling η0 doubles every unnormalised σ and μ(Y_j): normalised values unchanged
    e1, m1 = ladder_cell_masses(ladder.params)
    assert sum(m1) == pytest.approx(1.0, abs=1e-15)
    assert all(m > 0 for m in m1)


def test_ladder_decay_of_level_masses(ladder_exact):
    mu = ladder_exact.meta["mu_Y"]
    k0 = ladder_exact.meta["empirical_k0"]
    assert k0 is not None
    mu_f = [Fraction(m) for m in mu]
    assert all(mu_f[k + 1] <= dyadic(k + 1) * mu_f[k] for k in range(k0, len(mu) - 1))


def test_empirical_k0_none_when_decay_fails():
    assert empirical_k0([Fraction(1), Fraction(1), Fraction(1)]) is None


def test_transfer_matches_exact(ladder, ladder_exact):
    trans = transfer_matrix_stationary(ladder)
    diff = np.abs(ladder_exact.masses() - np.asarray(trans.meta["masses"]))
    assert diff.max() < 1e-12


def test_transfer_doubling_is_lebesgue(doubling):
    m = transfer_matrix_stationary(doubling)
    assert m.meta["masses"] == pytest.approx([0.5, 0.5])
    assert m.densities == pytest.approx((1.0, 1.0))


def test_transition_matrix_row_stochastic(ladder):
    P = cell_transition_matrix(ladder, tuple(ladder.cells.values()))
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-14)
    assert (P >= 0).all()


@settings(max_examples=25)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=6))
def test_stationary_vector_is_probability(weights):
    n = len(weights)
    P = np.tile(np.asarray(weights), (n, 1)) + np.eye(n)
    P /= P.sum(axis=1, keepdims=True)
    pi, _, residual = stationary_vector(P, tol=1e-14)
    assert (pi >= 0).all() and abs(pi.sum() - 1) < 1e-12 and residual < 1e-12


def test_stationary_vector_budget_exhausted():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])  # periodic: power iteration oscillates
    with pytest.raises(ConvergenceError):
        stationary_vector(P, tol=1e-14, max_steps=50, init=[1.0, 0.0])


def test_ladder_invariance_defect_random_intervals(ladder, ladder_exact):
    rng = np.random.default_rng(1)
    for a, b in np.sort(rng.random((100, 2)), axis=1):
        A = IntervalSet.of(Fraction(float(a)), Fraction(float(b)))
        assert invariance_defect(ladder, ladder_exact, A) < 1e-10


def test_truncation_tail_rejected():
    params = LadderMapParams.from_rule("dyadic", 8)
    with pytest.raises(ConvergenceError, match="increase J"):
        ladder_measure_exact(params)


@pytest.mark.parametrize("n_bins", [64, 1000])
def test_ulam_doubling_density_is_one(doubling, n_bins):
    u = ulam_density(doubling, n_bins)
    assert np.max(np.abs(u.densities - 1)) < 1e-10


def test_ulam_matrix_rows_sum_to_one(intermittent_half):
    P = ulam_matrix(intermittent_half, ulam_edges(2048, "geometric"))
    rows = np.asarray(P.sum(axis=1)).ravel()
    assert np.max(np.abs(rows - 1)) < 1e-9


def test_ulam_density_invariants(ulam_half):
    assert abs(ulam_half.total_mass() - 1) < 1e-8
    assert ulam_half.residual < 1e-10
    lo = ulam_half.edges[:-1]
    assert (ulam_half.densities[lo >= 0.05] > 0).all()


def test_ulam_refinement_of_density_at_half(intermittent_half, ulam_half):
    fine = ulam_density(intermittent_half, 2**14)
    a, b = ulam_half.density_right_of(0.5), fine.density_right_of(0.5)
    assert abs(a - b) / b < 0.02


def test_ulam_density_solves_fixed_point_equation(intermittent_half):
    # h(y) = h(ψ(y)) / T'(ψ(y)) + h((y+1)/2) / 2 with ψ the left inverse
    u = ulam_density(intermittent_half, 2**14)
    psi = intermittent_half.branches[0].inverse
    for y in (0.1, 0.3, 0.6, 0.9):
        x = psi(y)
        rhs = u.density_at(x) / intermittent_half.derivative(x) + u.density_at((y + 1) / 2) / 2
        assert rhs == pytest.approx(u.density_at(y), rel=0.01)


def test_ulam_edges_contain_half():
    for grid in ("uniform", "geometric"):
        e = ulam_edges(4096, grid)
        assert 0.5 in e and e[0] == 0 and e[-1] == 1 and np.all(np.diff(e) > 0)
        assert len(e) == 4097
    with pytest.raises(ValueError):
        ulam_edges(8)


def test_measure_of_is_additive(ladder_exact):
    a, b = IntervalSet.of(0, dyadic(3)), IntervalSet.of(dyadic(3), Fraction(3, 4))
    assert ladder_exact.measure_of(a.union(b)) == pytest.approx(
        ladder_exact.measure_of(a) + ladder_exact.measure_of(b), rel=1e-15)


def test_measure_of_level_cell_is_recursion_value(ladder_exact):
    mu = ladder_exact.meta["mu_Y"]
    for j in (1, 3, 7):
        Yj = IntervalSet.of(dyadic(j + 1), dyadic(j))
        assert ladder_exact.measure_of(Yj) == pytest.approx(mu[j], rel=1e-13)


def test_extremal_index_doubling_is_half(doubling):
    Y = IntervalSet.of(Fraction(1, 2), 1)
    for k in (3, 10, 20):
        assert extremal_index(doubling, LEBESGUE, Y, IntervalSet.of(0, dyadic(k))) == 0.5


def test_ladder_extremal_index_tends_to_one(ladder, ladder_exact):
    Y = IntervalSet.of(Fraction(1, 2), 1)
    th = [extremal_index(ladder, ladder_exact, Y, IntervalSet.of(0, dyadic(k))) for k in (4, 6, 8, 10)]
    assert th[-1] >= 0.99
    assert all(abs(1 - b) < abs(1 - a) for a, b in zip(th, th[1:]))


def test_ulam_roundtrip_through_dict(ulam_half):
    back = measure_from_dict(ulam_half.to_dict())
    assert np.array_equal(back.densities, ulam_half.densities)
    assert back.density_right_of(0.5) == ulam_half.density_right_of(0.5)


def test_piecewise_measure_roundtrip_through_dict(doubling):
    m = transfer_matrix_stationary(doubling)
    back = measure_from_dict(m.to_dict())
    assert back.densities == m.densities
    assert back.measure_of(IntervalSet.of(0.1, 0.7)) == pytest.approx(0.6)


def test_ulam_invariance_defect_shrinks_with_resolution(intermittent_half):
    # not monotone bin by bin: an interval whose ends fall on bin edges is almost exact
    coarse, fine = (ulam_density(intermittent_half, n) for n in (512, 8192))
    for a, b in ((0.2, 0.4), (0.1, 0.9), (0.6, 0.85)):
        A = IntervalSet.of(a, b)
        assert invariance_defect(intermittent_half, fine, A) < invariance_defect(intermittent_half, coarse, A)
