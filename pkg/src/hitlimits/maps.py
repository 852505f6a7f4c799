"""Piecewise monotone interval maps and the three concrete families.

All partition cells are left-closed/right-open, so evaluation is total on
``[0, 1)``.  Images are clamped into ``[0, 1)``; the only points affected are
branch endpoints and values rounded up to 1.0, a Lebesgue-null set.

Families
--------
``doubling``
    ``x -> 2x mod 1``.
``ladder``
    Piecewise affine Markov map with a doubling branch on ``[0, 1/2)`` and
    countably many decreasing branches ``Z_j`` accumulating at 1, truncated
    at ``J`` branches.  Geometry is kept in exact rationals because the
    breakpoints ``z_j`` are closer to 1 than double precision can resolve.
``intermittent``
    ``x + 2^p x^(1+p)`` on ``[0, 1/2)`` and ``2x - 1`` on ``[1/2, 1)``,
    with a neutral fixed point at 0.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .intervals import Interval, IntervalSet, dyadic

ONE_MINUS = math.nextafter(1.0, 0.0)


class DomainError(ValueError):
    """Point outside the state space ``[0, 1)``."""


@dataclass(frozen=True)
class Branch:
    """Monotone homeomorphism from ``domain`` onto ``image``.

    ``affine`` is ``(anchor, value, slope)`` with ``T(x) = value + slope*(x - anchor)``
    for piecewise affine branches, ``None`` otherwise.
    """

    domain: Interval
    increasing: bool
    forward: Callable
    derivative: Callable
    inverse: Callable
    image: Interval
    affine: tuple | None = None

    def __call__(self, x):
        return self.forward(x)

    def preimage(self, target: Interval) -> Interval | None:
        """``domain ∩ T^{-1}(target)`` as a single interval (or None)."""
        piece = target.intersect(self.image)
        if piece is None:
            return None
        a, b = self.inverse(piece.lo), self.inverse(piece.hi)
        if self.increasing:
            iv = Interval(a, b, piece.closed_lo, piece.closed_hi) if a <= b else None
        else:
            iv = Interval(b, a, piece.closed_hi, piece.closed_lo) if b <= a else None
        if iv is None:
            return None
        return iv.intersect(self.domain)

    def image_of(self, iv: Interval) -> Interval:
        """Forward image of a subinterval of the domain."""
        a, b = self.forward(iv.lo), self.forward(iv.hi)
        if self.increasing:
            return Interval(a, b, iv.closed_lo, iv.closed_hi)
        return Interval(b, a, iv.closed_hi, iv.closed_lo)


@dataclass(frozen=True)
class PiecewiseMap:
    name: str
    branches: tuple[Branch, ...]
    is_markov: bool
    is_piecewise_onto: bool
    is_uniformly_expanding: bool
    expansion_bound: float
    params: object = None
    cells: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_lows", [b.domain.lo for b in self.branches])

    @property
    def partition(self) -> tuple[Interval, ...]:
        return tuple(b.domain for b in self.branches)

    def branch_index(self, x) -> int:
        if not (0 <= x < 1):
            raise DomainError(f"x={x!r} is outside [0, 1)")
        i = bisect.bisect_right(self._lows, x) - 1
        # zero-width branches (collapsed in floating point) are skipped
        while i > 0 and not (x in self.branches[i].domain):
            i -= 1
        return i

    def branch_at(self, x) -> Branch:
        return self.branches[self.branch_index(x)]

    def __call__(self, x):
        y = self.branch_at(x).forward(x)
        if isinstance(y, float):
            if y >= 1.0:
                return ONE_MINUS
            if y < 0.0:
                return 0.0
        return y

    def derivative(self, x):
        return self.branch_at(x).derivative(x)

    def preimage(self, target: IntervalSet) -> IntervalSet:
        pieces = []
        for br in self.branches:
            for iv in target:
                piece = br.preimage(iv)
                if piece is not None:
                    pieces.append(piece)
        return IntervalSet(pieces)

    def affine_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Float ``(lo, value, slope)`` arrays for the simulation kernels."""
        if any(b.affine is None for b in self.branches):
            raise ValueError(f"map {self.name!r} is not piecewise affine")
        lo = np.array([float(b.domain.lo) for b in self.branches])
        val = np.array([float(b.affine[1] + b.affine[2] * (b.domain.lo - b.affine[0])) for b in self.branches])
        slope = np.array([float(b.affine[2]) for b in self.branches])
        return lo, val, slope


def evaluate(T: PiecewiseMap, x):
    return T(x)


def orbit(T: PiecewiseMap, x, n: int) -> list:
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = [x]
    for _ in range(n):
        x = T(x)
        out.append(x)
    return out


def _exact(y):
    # preimages of affine branches stay exact; a float promotes Fractions to float
    return Fraction(y) if isinstance(y, float) else y


def _affine_branch(lo, hi, anchor, value, slope) -> Branch:
    """Affine branch ``x -> value + slope*(x - anchor)`` on ``[lo, hi)``."""
    inc = slope > 0
    ends = (value + slope * (lo - anchor), value + slope * (hi - anchor))
    image = Interval(min(ends), max(ends), inc, not inc)
    if image.hi == 1:
        image = Interval(image.lo, 1, image.closed_lo, False)
    return Branch(
        domain=Interval(lo, hi, True, False),
        increasing=inc,
        forward=lambda x: value + slope * (x - anchor),
        derivative=lambda x: slope,
        inverse=lambda y: anchor + (_exact(y) - value) / slope,
        image=image,
        affine=(anchor, value, slope),
    )


def make_doubling() -> PiecewiseMap:
    half = Fraction(1, 2)
    branches = (
        _affine_branch(0, half, 0, 0, 2),
        _affine_branch(half, 1, half, 0, 2),
    )
    return PiecewiseMap("doubling", branches, True, True, True, 2.0,
                        params=None, cells={"Z0": branches[0].domain, "Y": branches[1].domain})


# ---------------------------------------------------------------- ladder


@dataclass(frozen=True)
class LadderMapParams:
    """Cell lengths ``λ_1..λ_J`` of the decreasing branches (exact rationals).

    ``tail`` is ``1/2 - sum(lambdas)``: the length beyond the truncation, which
    the last branch absorbs.
    """

    lambdas: tuple[Fraction, ...]
    rule: str = "explicit"

    def __post_init__(self):
        lam = tuple(Fraction(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(lam) < 2:
            raise ValueError("truncation J must be at least 2")
        if any(x <= 0 for x in lam):
            raise ValueError("all lambda_j must be positive")
        if sum(lam) > Fraction(1, 2):
            raise ValueError("sum of lambda_j exceeds 1/2")
        bad = [j for j, s in enumerate(self.slopes, start=1) if s <= 1]
        if bad:
            raise ValueError(f"slopes s_j <= 1 at j={bad}: map not uniformly expanding")

    @property
    def J(self) -> int:
        return len(self.lambdas)

    @property
    def tail(self) -> Fraction:
        return Fraction(1, 2) - sum(self.lambdas)

    @property
    def cell_lengths(self) -> tuple[Fraction, ...]:
        """Lengths of ``Z_1..Z_J`` in the truncated map (last one absorbs the tail)."""
        return self.lambdas[:-1] + (self.lambdas[-1] + self.tail,)

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        return tuple((1 - dyadic(j)) / lam for j, lam in enumerate(self.cell_lengths, start=1))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        """``z_0 = 0, z_1 = 1/2, ..., z_{J+1} = 1``."""
        z = [Fraction(0), Fraction(1, 2)]
        for lam in self.cell_lengths:
            z.append(z[-1] + lam)
        return tuple(z)

    def satisfies_decay(self, k0: int) -> bool:
        """``λ_{i+1} <= 2^{-(i+3)} λ_i`` for all ``i >= k0`` inside the truncation."""
        lam = self.lambdas
        return all(lam[i] <= dyadic(i + 3) * lam[i - 1] for i in range(max(k0, 1), len(lam)))

    @classmethod
    def from_rule(cls, rule: str = "geometric-fast", J: int = 40) -> "LadderMapParams":
        if rule == "geometric-fast":
            # λ_{i+1} = 2^{-(i+3)} λ_i, normalised so the untruncated sum is 1/2
            # (20 extra terms put the normalisation error far below 2^-1000)
            expo = [0]
            for i in range(1, J + 20):
                expo.append(expo[-1] + i + 3)
            shape = [dyadic(e) for e in expo]
            lam1 = Fraction(1, 2) / sum(shape)
            return cls(tuple(lam1 * s for s in shape[:J]), rule)
        if rule == "dyadic":
            return cls(tuple(dyadic(j + 1) for j in range(1, J + 1)), rule)
        raise ValueError(f"unknown lambda rule {rule!r}")


def make_ladder(params: LadderMapParams) -> PiecewiseMap:
    z = params.breakpoints
    slopes = params.slopes
    branches = [_affine_branch(z[0], z[1], 0, 0, 2)]
    for j in range(1, params.J + 1):
        branches.append(_affine_branch(z[j], z[j + 1], z[j], 1, -slopes[j - 1]))
    cells = {"Y_tail": Interval(0, dyadic(params.J))}
    for i in range(params.J - 1, 0, -1):
        cells[f"Y_{i}"] = Interval(dyadic(i + 1), dyadic(i))
    for j in range(1, params.J + 1):
        cells[f"Z_{j}"] = Interval(z[j], z[j + 1])
    return PiecewiseMap(
        "ladder", tuple(branches), True, False, True, float(min(min(slopes), 2)),
        params=params, cells=cells,
    )


# ---------------------------------------------------------- intermittent


@dataclass(frozen=True)
class IntermittentParams:
    p: float

    def __post_init__(self):
        if not (0 < self.p < 1):
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


def left_branch_inverse(y, p: float, iters: int = 200):
    """Solve ``x + 2^p x^(1+p) = y`` for ``x`` in ``[0, 1/2]`` by bisection.

    Works elementwise on arrays.  The bracket is ``[0, min(y, 1/2)]`` so the
    result is accurate relative to ``y`` and reaches full double precision.
    """
    c = 2.0**p
    if np.ndim(y) == 0:
        y = float(y)
        lo, hi = 0.0, min(y, 0.5)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if mid + c * mid ** (1.0 + p) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    y = np.asarray(y, dtype=np.float64)
    lo = np.zeros_like(y)
    hi = np.minimum(y, 0.5)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        active = (mid != lo) & (mid != hi)
        if not active.any():
            break
        below = mid + c * mid ** (1.0 + p) < y
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return 0.5 * (lo + hi)


def make_intermittent(params: IntermittentParams) -> PiecewiseMap:
    p = params.p
    c = 2.0**p

    def fwd(x):
        x = float(x)
        return x + c * x ** (1.0 + p)

    left = Branch(
        domain=Interval(0.0, 0.5),
        increasing=True,
        forward=fwd,
        derivative=lambda x: 1.0 + c * (1.0 + p) * float(x) ** p,
        inverse=lambda y: left_branch_inverse(float(y), p),
        image=Interval(0.0, 1.0),
    )
    right = _affine_branch(Fraction(1, 2), 1, Fraction(1, 2), 0, 2)
    # T' >= 1 with equality only at 0, hence no uniform expansion bound
    return PiecewiseMap("intermittent", (left, right), True, True, False, 1.0,
                        params=params, cells={"Z0": left.domain, "Y": right.domain})


# -------------------------------------------------------------- registry

FAMILIES = ("doubling", "ladder", "intermittent")


def build_map(family: str, **params) -> PiecewiseMap:
    """Construct a map from a family name and keyword parameters.

    ``ladder`` accepts ``rule`` (``geometric-fast``/``dyadic``), ``J`` or an
    explicit ``lambdas`` list; ``intermittent`` requires ``p``.
    """
    if family == "doubling":
        if params:
            raise ValueError(f"doubling takes no parameters, got {sorted(params)}")
        return make_doubling()
    if family == "ladder":
        unknown = set(params) - {"rule", "J", "lambdas"}
        if unknown:
            raise ValueError(f"unknown ladder parameters {sorted(unknown)}")
        if "lambdas" in params:
            return make_ladder(LadderMapParams(tuple(Fraction(str(x)) for x in params["lambdas"])))
        return make_ladder(LadderMapParams.from_rule(params.get("rule", "geometric-fast"),
                                                   int(params.get("J", 40))))
    if family == "intermittent":
        unknown = set(params) - {"p"}
        if unknown or "p" not in params:
            raise ValueError("intermittent takes exactly one parameter 'p'")
        return make_intermittent(IntermittentParams(float(params["p"])))
    raise ValueError(f"unknown map family {family!r}; known: {', '.join(FAMILIES)}")


def fixed_point_slope(T: PiecewiseMap) -> float:
    """``T'(0+)``, the one-sided derivative at the fixed point 0."""
    return float(T.branches[0].derivative(0.0))


def left_inverse(T: PiecewiseMap) -> Callable:
    """Inverse of the increasing left branch fixing 0."""
    br = T.branches[0]
    if not br.increasing or br.forward(0) != 0:
        raise ValueError(f"map {T.name!r} has no increasing left branch fixing 0")
    return br.inverse


def sample_grid(iv: Interval, n: int) -> np.ndarray:
    """``n`` interior points of ``iv`` (float) for grid-based property checks."""
    lo, hi = float(iv.lo), float(iv.hi)
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n
