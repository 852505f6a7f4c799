"""First return maps, pulled-back targets and the reach-only-via check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .intervals import Interval, IntervalSet, as_interval_set, dyadic
from .maps import LadderMapParams, PiecewiseMap, left_inverse


def hitting_time(T: PiecewiseMap, x, E, cap: int = 10**6):
    """``min{n >= 1 : T^n x in E}``, or ``math.inf`` when the cap is reached."""
    E = as_interval_set(E)
    for n in range(1, cap + 1):
        x = T(x)
        if x in E:
            return n
    return math.inf


def pullback_target(T: PiecewiseMap, Y, E) -> IntervalSet:
    """``Y ∩ T^{-1} E``: points of ``Y`` whose next iterate lies in ``E``."""
    return as_interval_set(Y).intersect(T.preimage(as_interval_set(E)))


def neutral_boundary_orbit(T: PiecewiseMap, K: int) -> list:
    """``c_0 = 1`` and ``c_{j+1} = ψ(c_j)`` with ``ψ`` the inverse of the left branch.

    So ``c_1`` is the right end of the left branch and ``c_j`` decreases to the
    fixed point 0.  ``K = 0`` returns ``[1]``.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    psi = left_inverse(T)
    c = [Fraction(1) if T.branches[0].affine is not None else 1.0]
    for _ in range(K):
        c.append(psi(c[-1]))
    return c


@dataclass(frozen=True)
class InducedSystem:
    """First return map of ``base`` to ``Y``.

    ``cylinders[j-1]`` is the level set ``{x in Y : φ_Y(x) = j}``; ``entry_levels[j-1]``
    is the set of points outside ``Y`` (``Y`` itself for ``j = 1``) that need
    exactly ``j - 1`` more steps to enter ``Y``.  ``tail_length`` is the
    Lebesgue length of ``Y`` not covered by the listed cylinders.
    """

    base: PiecewiseMap
    Y: IntervalSet
    cylinders: tuple[IntervalSet, ...]
    entry_levels: tuple[IntervalSet, ...]
    tail_length: float
    meta: dict = field(default_factory=dict)

    @property
    def max_return(self) -> int:
        return len(self.cylinders)

    def return_time(self, x, cap: int | None = None):
        """``φ_Y(x)`` for ``x in Y``."""
        if x not in self.Y:
            raise ValueError(f"{x!r} is not in Y")
        return hitting_time(self.base, x, self.Y, cap or 10 * self.max_return + 10**4)

    def __call__(self, x):
        n = self.return_time(x)
        if n == math.inf:
            raise RuntimeError("no return to Y within the cap")
        for _ in range(n):
            x = self.base(x)
        return x

    def is_piecewise_onto(self, tol: float = 1e-12) -> bool:
        """Every branch of the return map is onto ``Y`` modulo null sets."""
        for j, cyl in enumerate(self.cylinders, start=1):
            pre = self.entry_levels[j - 1]
            for piece in cyl:
                br = self.base.branch_at(piece.lo)
                img = IntervalSet([br.image_of(piece)])
                if not img.approx_equal(pre, tol):
                    return False
        return True


def _aligned_with_partition(T: PiecewiseMap, Y: IntervalSet) -> bool:
    """``Y`` is a union of branch domains (mod null sets)."""
    inside = IntervalSet([d for d in T.partition if IntervalSet([d]).issubset(Y)])
    return inside.approx_equal(Y)


def build_induced(T: PiecewiseMap, Y, max_return: int | None = None) -> InducedSystem:
    """Return-time cylinders of ``Y`` up to ``max_return``.

    ``Y`` has to be a union of branch domains; otherwise the return map is not
    Markov with respect to anything we can cut out exactly, and it is rejected.
    """
    Y = as_interval_set(Y)
    if not Y or float(Y.total_length()) <= 0:
        raise ValueError("inducing set must have positive length")
    if not _aligned_with_partition(T, Y):
        raise ValueError(f"inducing set {Y!r} is not a union of partition cells of {T.name!r}")
    if max_return is None:
        max_return = 10_000 if T.name == "intermittent" else 60
    outside = Y.complement()
    levels = [Y]
    cylinders = [pullback_target(T, Y, Y)]
    for _ in range(max_return - 1):
        nxt = outside.intersect(T.preimage(levels[-1]))
        if not nxt:
            break
        levels.append(nxt)
        cylinders.append(pullback_target(T, Y, nxt))
    while len(cylinders) > 1 and not cylinders[-1]:
        cylinders.pop()
        levels.pop()
    covered = sum(float(c.total_length()) for c in cylinders)
    return InducedSystem(T, Y, tuple(cylinders), tuple(levels),
                         max(float(Y.total_length()) - covered, 0.0),
                         {"family": T.name})


def induced_hitting_time(system: InducedSystem, x, Ep, cap: int = 10**6):
    """Number of returns to ``Y`` up to and including the first one landing in ``E'``."""
    Ep = as_interval_set(Ep)
    T, Y = system.base, system.Y
    count = 0
    for _ in range(cap):
        x = T(x)
        if x in Y:
            count += 1
            if x in Ep:
                return count
    return math.inf


def induced_return_times(system: InducedSystem, x, n_returns: int) -> list[int]:
    """Successive return times ``φ_Y(T_Y^i x)`` along the induced orbit."""
    out = []
    T, Y = system.base, system.Y
    t = 0
    while len(out) < n_returns:
        x = T(x)
        t += 1
        if x in Y:
            out.append(t)
            t = 0
    return out


# ----------------------------------------------------- reach-only-via check


@dataclass(frozen=True)
class ReachVerdict:
    status: str  # PASS, PASS-probabilistic, FAIL
    reason: str
    counterexample: tuple | None = None

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"


def check_reach_only_via(T: PiecewiseMap, Y, E, Ep, *, n_probes: int = 2000, horizon: int = 64,
                         seed: int = 0, tol: float = 1e-13) -> ReachVerdict:
    """Whether every orbit from ``Y`` that reaches ``E`` passes through ``E'`` first (or then).

    Two sufficient structural conditions are tried (modulo null sets): ``E ⊆ E'``;
    or ``E`` lies outside ``Y``, the part of ``T^{-1}E`` outside ``Y`` is inside
    ``E`` and the part inside ``Y`` is inside ``E'`` (then the last visit to ``Y``
    before entering ``E``, through a chain of ``E``-points, is in ``E'``).
    Failing both, orbits from random points of ``Y`` are searched for a
    counterexample.
    """
    Y, E, Ep = (as_interval_set(s) for s in (Y, E, Ep))
    if E.issubset(Ep, tol):
        return ReachVerdict("PASS", "E is contained in E'")
    outside = Y.complement()
    pre = T.preimage(E)
    if (E.issubset(outside, tol) and outside.intersect(pre).issubset(E, tol)
            and Y.intersect(pre).issubset(Ep, tol)):
        return ReachVerdict("PASS", "E is entered from outside Y only through E, and from Y only through E'")
    rng = np.random.default_rng(seed)
    lengths = np.array([float(c.length()) for c in Y])
    picks = rng.choice(len(lengths), size=n_probes, p=lengths / lengths.sum())
    for i, u in zip(picks, rng.random(n_probes)):
        c = Y.components[i]
        x = float(c.lo) + u * float(c.length())
        orbit = [x]
        seen = x in Ep
        for _ in range(horizon):
            x = T(x)
            orbit.append(x)
            if x in Ep and x in Y:
                seen = True
            if x in E:
                if not seen:
                    return ReachVerdict("FAIL", "orbit enters E without passing through E'", tuple(orbit))
                break
    return ReachVerdict("PASS-probabilistic", f"no counterexample among {n_probes} orbits of length {horizon}")


# ------------------------------------------------ ladder excursion structure


@dataclass(frozen=True)
class ExcursionLaw:
    """Law of one excursion from ``Y = [1/2, 1)`` for the ladder map and ``E_k = [0, 2^{-k})``.

    With probability ``entry`` the excursion enters ``E_k``; otherwise it returns to
    ``Y`` after ``return_values[i]`` steps with probability ``return_probs[i]``
    (conditional on not entering).  Exact for the truncated map because the
    return map is piecewise onto and affine, so excursions are i.i.d. under
    Lebesgue measure on ``Y``.
    """

    k: int
    entry: float
    return_values: np.ndarray
    return_probs: np.ndarray
    entry_exact: Fraction

    @property
    def return_mean(self) -> float:
        return float(np.dot(self.return_values, self.return_probs))

    @property
    def return_var(self) -> float:
        m = self.return_mean
        return float(np.dot((self.return_values - m) ** 2, self.return_probs))


def ladder_excursion_law(params: LadderMapParams, k: int) -> ExcursionLaw:
    J = params.J
    if not 1 <= k < J:
        raise ValueError(f"need 1 <= k < J={J}, got k={k}")
    lam = params.cell_lengths
    # Z_j (j = 1..J) maps onto (2^-j, 1); it hits Y_i (i < j) with conditional weight w_i
    weight = [Fraction(1, 2)] + [dyadic(i + 1) for i in range(1, J)]
    scale = [2 * lam[j - 1] / (1 - dyadic(j)) for j in range(1, J + 1)]  # density of Y-mass per unit
    entry = sum((scale[j - 1] * (dyadic(k) - dyadic(j)) for j in range(k + 1, J + 1)), Fraction(0))
    probs = []
    for i in range(k):
        probs.append(weight[i] * sum((scale[j - 1] for j in range(i + 1, J + 1)), Fraction(0)))
    total = entry + sum(probs)
    if total != 1:
        raise AssertionError(f"excursion law does not sum to one (got {float(total)})")
    cond = [float(p / (1 - entry)) for p in probs]
    return ExcursionLaw(k, float(entry), np.arange(1, k + 1, dtype=np.float64), np.array(cond), entry)
