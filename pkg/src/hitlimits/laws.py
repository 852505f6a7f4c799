"""Limit laws, empirical distribution functions and Kolmogorov-Smirnov distances."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

KINDS = ("standard_exponential", "scaled_exponential", "return_mixture", "diverge")

# window [0, ATOM_WINDOW) excluded from the sup when the law has an atom at 0
ATOM_WINDOW = 0.01


@dataclass(frozen=True)
class LimitLaw:
    kind: str
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown limit law {self.kind!r}; known: {', '.join(KINDS)}")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")

    @classmethod
    def standard_exponential(cls):
        return cls("standard_exponential", 1.0)

    @classmethod
    def scaled_exponential(cls, theta):
        return cls("scaled_exponential", float(theta))

    @classmethod
    def return_mixture(cls, theta):
        return cls("return_mixture", float(theta))

    @classmethod
    def diverge(cls):
        return cls("diverge", 1.0)

    @property
    def atom(self) -> float:
        """Mass at 0."""
        return 1.0 - self.theta if self.kind == "return_mixture" else 0.0

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        pos = np.maximum(t, 0.0)
        if self.kind == "diverge":
            out = np.zeros_like(t)
        elif self.kind == "standard_exponential":
            out = -np.expm1(-pos)
        elif self.kind == "scaled_exponential":
            out = -np.expm1(-self.theta * pos)
        else:
            out = (1.0 - self.theta) + self.theta * -np.expm1(-self.theta * pos)
        out = np.where(t < 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def cdf_left(self, t):
        """``F(t-)``; differs from ``F(t)`` only at the atom."""
        t = np.asarray(t, dtype=np.float64)
        out = np.where(t <= 0, 0.0, self.cdf(t))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "theta": self.theta}

    def __str__(self) -> str:
        if self.kind in ("standard_exponential", "diverge"):
            return self.kind
        return f"{self.kind}(theta={self.theta:g})"


def law_from_dict(d) -> LimitLaw:
    if isinstance(d, str):
        d = {"kind": d}
    return LimitLaw(d["kind"], float(d.get("theta", 1.0)))


@dataclass(frozen=True)
class EmpiricalCDF:
    """ECDF of ``n_total`` samples of which ``n_overflow`` are at ``+inf``."""

    values: np.ndarray
    n_total: int

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCDF":
        a = np.asarray(samples, dtype=np.float64)
        if np.isnan(a).any():
            raise ValueError("NaN sample")
        return cls(np.sort(a[np.isfinite(a)]), int(a.size))

    @property
    def n_overflow(self) -> int:
        return self.n_total - self.values.size

    @property
    def overflow_fraction(self) -> float:
        return self.n_overflow / self.n_total if self.n_total else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.searchsorted(self.values, t, side="right") / self.n_total
        return float(out) if out.ndim == 0 else out

    def left(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.searchsorted(self.values, t, side="left") / self.n_total
        return float(out) if out.ndim == 0 else out

    def quantile(self, q: float) -> float:
        """Smallest ``t`` with ``F_n(t) >= q`` (``inf`` if that needs overflowed samples)."""
        idx = math.ceil(q * self.n_total) - 1
        idx = max(idx, 0)
        return float(self.values[idx]) if idx < self.values.size else math.inf

    def mean(self) -> float:
        return math.inf if self.n_overflow else float(self.values.mean())

    def grid(self, n_points: int = 200, t_max: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        if t_max is None:
            t_max = float(self.values[-1]) if self.values.size else 1.0
        t = np.linspace(0.0, t_max, n_points)
        return t, self(t)

    def write_csv(self, path, n_points: int = 200, t_max: float | None = None) -> None:
        t, F = self.grid(n_points, t_max)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "F"])
            for a, b in zip(t, F):
                w.writerow([f"{a:.10g}", f"{b:.10g}"])


def ks_distance(ecdf: EmpiricalCDF, law: LimitLaw, exclude_below: float | None = None) -> float:
    """``sup_{t >= t0} |F_n(t) - F(t)|``, with overflowed samples as mass at infinity.

    ``t0`` defaults to :data:`ATOM_WINDOW` for laws with an atom at 0 and to
    ``-inf`` otherwise.
    """
    if exclude_below is None:
        exclude_below = ATOM_WINDOW if law.atom > 0 else -math.inf
    v = ecdf.values
    n = ecdf.n_total
    # t -> inf: F_n -> 1 - overflow while F -> 1 (or stays 0 for the divergent law)
    best = 1.0 - ecdf.overflow_fraction if law.kind == "diverge" else ecdf.overflow_fraction
    if math.isfinite(exclude_below):
        t0 = exclude_below
        best = max(best, abs(ecdf(t0) - law.cdf(t0)))
        v = v[v > t0]
    if v.size:
        right = np.searchsorted(ecdf.values, v, side="right") / n
        left = np.searchsorted(ecdf.values, v, side="left") / n
        best = max(best, float(np.max(np.abs(right - law.cdf(v)))),
                   float(np.max(np.abs(law.cdf_left(v) - left))))
    return float(best)


def ks_two_sample(a: EmpiricalCDF, b: EmpiricalCDF) -> float:
    """``sup_t |F_a(t) - F_b(t)|`` including the mass at infinity."""
    pts = np.union1d(a.values, b.values)
    best = abs(a.overflow_fraction - b.overflow_fraction)
    if pts.size:
        best = max(best, float(np.max(np.abs(a(pts) - b(pts)))))
    return float(best)


def atom_mass(ecdf: EmpiricalCDF, window: float = ATOM_WINDOW) -> float:
    """``F_n(window)``: the empirical mass near 0 compared against the atom of a return law."""
    return ecdf(window)
