"""Monte Carlo sampling of normalised hitting and return times."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .inducing import InducedSystem, ladder_excursion_law, pullback_target
from .intervals import IntervalSet, as_interval_set, dyadic
from .laws import EmpiricalCDF
from .maps import PiecewiseMap
from .rng import stream_key

CAP_FACTOR = 100.0
_INT_CAP = 2**62


@dataclass(frozen=True)
class InitialLaw:
    """Absolutely continuous law with piecewise constant density on cells ``[lo_i, hi_i)``."""

    lo: np.ndarray
    hi: np.ndarray
    cum: np.ndarray
    description: str = ""

    @classmethod
    def from_cells(cls, lo, hi, mass, description=""):
        lo, hi, mass = (np.asarray(a, dtype=np.float64) for a in (lo, hi, mass))
        keep = (mass > 0) & (hi > lo)
        if not keep.any():
            raise ValueError("initial law has no mass")
        lo, hi, mass = lo[keep], hi[keep], mass[keep]
        cum = np.cumsum(mass)
        cum /= cum[-1]
        return cls(lo, hi, cum, description)

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0):
        return cls.from_cells([lo], [hi], [1.0], f"uniform[{float(lo):g},{float(hi):g})")

    @classmethod
    def uniform_on(cls, S):
        S = as_interval_set(S)
        comps = [c for c in S if float(c.hi) > float(c.lo)]
        return cls.from_cells([float(c.lo) for c in comps], [float(c.hi) for c in comps],
                              [float(c.length()) for c in comps], f"uniform on {S!r}")

    @classmethod
    def from_measure(cls, measure, restrict=None):
        """``measure`` conditioned on ``restrict`` (whole space when None)."""
        S = None if restrict is None else as_interval_set(restrict)
        lo, hi, mass = measure.law_cells(S)
        return cls.from_cells(lo, hi, mass, "invariant measure" + ("" if S is None else f" on {S!r}"))


@dataclass(frozen=True)
class HittingSample:
    """Raw hitting times (``inf`` = overflow) and their normalisation."""

    times: np.ndarray
    x0: np.ndarray
    gamma: float
    cap: float
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def normalised(self) -> np.ndarray:
        return self.gamma * self.times

    @property
    def ecdf(self) -> EmpiricalCDF:
        return EmpiricalCDF.from_samples(self.normalised)

    @property
    def overflow_fraction(self) -> float:
        return float(np.mean(~np.isfinite(self.times)))


def _set_arrays(S):
    S = as_interval_set(S)
    if not S:
        z = np.zeros(0)
        return z, z, np.zeros(0, np.bool_), np.zeros(0, np.bool_)
    return S.to_arrays()


def _ladder_level(T: PiecewiseMap, E) -> int | None:
    """``k`` if ``E`` is ``[0, 2^{-k})`` modulo endpoints, else None."""
    E = as_interval_set(E)
    if len(E) != 1 or E.lo != 0:
        return None
    m, e = math.frexp(float(E.hi))
    if m != 0.5 or E.hi != dyadic(1 - e) or not 1 <= 1 - e < T.params.J:
        return None
    return 1 - e


_HALF = IntervalSet.of(dyadic(1), 1)


def _renewal_target(T, target, inducing):
    """Level ``k`` for which the renewal sampler applies, or None."""
    if T.name != "ladder":
        return None
    if inducing is None:
        return _ladder_level(T, target)
    if not inducing.Y.approx_equal(_HALF):
        return None
    target = as_interval_set(target)
    for k in range(1, T.params.J):
        if pullback_target(T, inducing.Y, IntervalSet.of(0, dyadic(k))).approx_equal(target):
            return k
    return None


def draw_hitting_times(T: PiecewiseMap, target, law: InitialLaw, n: int, *, seed: int, cap: float,
                       label: str = "", inducing: InducedSystem | None = None, method: str = "auto",
                       burn_in: int = 8, n_direct: int = 4096, offset: int = 0):
    """Raw hitting times of ``target`` for ``n`` initial points drawn from ``law``.

    With ``inducing`` the time is counted in returns to its ``Y`` (the first
    return landing in ``target``).  ``method``: ``direct`` iterates the map;
    ``renewal`` (ladder only, chosen by ``auto`` when applicable) uses the
    i.i.d. excursion structure so that targets of measure 1e-30 are reachable.

    Returns ``(x0, times, method_used)`` with ``inf`` marking overflow.
    """
    if n <= 0:
        raise ValueError("sample size must be positive")
    if method not in ("auto", "direct", "renewal"):
        raise ValueError(f"unknown sampling method {method!r}")
    target = as_interval_set(target)
    stream = stream_key(seed, label)
    e = _set_arrays(target)
    y = _set_arrays(inducing.Y if inducing is not None else IntervalSet())
    induced = inducing is not None
    if induced and not target.issubset(inducing.Y):
        raise ValueError("induced target must lie inside the inducing set")

    k = _renewal_target(T, target, inducing) if method != "direct" else None
    if method == "renewal" and k is None:
        raise ValueError("renewal sampling needs the ladder map and a target [0, 2^-k) (or its pullback)")
    if k is not None:
        a = T.affine_table()
        exc = ladder_excursion_law(T.params, k)
        y = _set_arrays(_HALF)
        rt_cum = np.cumsum(exc.return_probs)
        rt_cum[-1] = 1.0
        x0, raw = kernels.renewal_kernel(
            *a, law.lo, law.hi, law.cum, *e, *y, induced, int(burn_in),
            math.log1p(-exc.entry), exc.return_values, rt_cum, exc.return_mean, exc.return_var,
            float(n_direct), float(cap), stream, int(offset), int(n))
        return x0, raw, "renewal"

    if T.name == "doubling":
        fam, p = kernels.DOUBLING, 0.0
    elif T.name == "intermittent":
        fam, p = kernels.INTERMITTENT, float(T.params.p)
    else:
        fam, p = kernels.AFFINE, 0.0
    a = T.affine_table() if fam != kernels.INTERMITTENT else (np.zeros(1), np.zeros(1), np.zeros(1))
    x0, raw = kernels.hitting_kernel(
        fam, p, *a, law.lo, law.hi, law.cum, *e, *y, induced,
        int(min(cap, _INT_CAP)), stream, int(offset), int(n))
    times = raw.astype(np.float64)
    times[raw < 0] = np.inf
    return x0, times, "direct"


def default_cap(gamma: float, cap_factor: float = CAP_FACTOR) -> float:
    return math.ceil(cap_factor / gamma)


def sample_hitting_cdf(T: PiecewiseMap, E, gamma: float, N: int, *, seed: int, law: InitialLaw | None = None,
                       cap: float | None = None, label: str = "hit", **kw) -> HittingSample:
    """Hitting times of ``E`` from ``law`` (Lebesgue by default), scaled by ``gamma``."""
    law = law or InitialLaw.uniform()
    cap = cap or default_cap(gamma)
    x0, t, method = draw_hitting_times(T, E, law, N, seed=seed, cap=cap, label=label, **kw)
    return HittingSample(t, x0, float(gamma), float(cap), method, {"law": law.description})


def sample_induced_hitting_cdf(system: InducedSystem, Ep, gamma: float, N: int, *, seed: int,
                               law: InitialLaw | None = None, cap: float | None = None,
                               label: str = "induced", **kw) -> HittingSample:
    """Induced hitting times of ``E'`` from ``law`` (Lebesgue on ``Y`` by default)."""
    law = law or InitialLaw.uniform_on(system.Y)
    cap = cap or default_cap(gamma)
    x0, t, method = draw_hitting_times(system.base, Ep, law, N, seed=seed, cap=cap, label=label,
                                       inducing=system, **kw)
    return HittingSample(t, x0, float(gamma), float(cap), method, {"law": law.description})


def sample_return_cdf(T: PiecewiseMap, E, gamma: float, measure, N: int, *, seed: int,
                      cap: float | None = None, label: str = "return", **kw) -> HittingSample:
    """Return times to ``E`` from the invariant measure conditioned on ``E``."""
    law = InitialLaw.from_measure(measure, E)
    return sample_hitting_cdf(T, E, gamma, N, seed=seed, law=law, cap=cap, label=label, **kw)
