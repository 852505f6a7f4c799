"""Invariant probability measures with piecewise constant densities.

Three constructions:

* :func:`ladder_measure_exact` -- closed form for the ladder map from the
  return-structure recursion, computed in exact rationals.
* :func:`transfer_matrix_stationary` -- stationary vector of the cell
  transition matrix ``P[a, b] = λ(a ∩ T^{-1} b) / λ(a)``; exact for piecewise
  affine Markov partitions.
* :func:`ulam_density` -- the same matrix on a fine grid of bins for maps
  where no finite Markov partition is available (intermittent family).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .intervals import UNIT, Interval, IntervalSet, as_interval_set, dyadic
from .maps import LadderMapParams, PiecewiseMap, left_branch_inverse


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PiecewiseConstantMeasure:
    cells: tuple[Interval, ...]
    densities: tuple[float, ...]
    tail_bound: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.cells) != len(self.densities):
            raise ValueError("cells and densities differ in length")
        if any(d < 0 for d in self.densities):
            raise ValueError("negative density")
        object.__setattr__(self, "_lows", [c.lo for c in self.cells])

    def masses(self) -> np.ndarray:
        return np.array([float(c.length()) * d for c, d in zip(self.cells, self.densities)])

    def total_mass(self) -> float:
        return float(self.masses().sum())

    def density_at(self, x) -> float:
        i = bisect.bisect_right(self._lows, x) - 1
        while i > 0 and x not in self.cells[i]:
            i -= 1
        return self.densities[i]

    def measure_of(self, S) -> float:
        total = 0.0
        for iv in as_interval_set(S):
            i = max(bisect.bisect_right(self._lows, iv.lo) - 1, 0)
            while i < len(self.cells) and self.cells[i].lo < iv.hi:
                piece = self.cells[i].intersect(iv)
                if piece is not None and self.densities[i]:
                    total += float(piece.length()) * self.densities[i]
                i += 1
        return total

    def law_cells(self, restrict: IntervalSet | None = None):
        """``(lo, hi, mass)`` float arrays of the measure restricted to a set."""
        lo, hi, mass = [], [], []
        for c, d in zip(self.cells, self.densities):
            pieces = [c] if restrict is None else IntervalSet([c]).intersect(restrict).components
            for piece in pieces:
                m = float(piece.length()) * d
                if m > 0:
                    lo.append(float(piece.lo))
                    hi.append(float(piece.hi))
                    mass.append(m)
        return np.array(lo), np.array(hi), np.array(mass)

    def to_dict(self) -> dict:
        return {
            "type": "piecewise_constant",
            "cells": [[float(c.lo), float(c.hi)] for c in self.cells],
            "densities": [float(d) for d in self.densities],
            "tail_bound": float(self.tail_bound),
            "meta": self.meta,
        }


@dataclass(frozen=True)
class UlamDensity:
    edges: np.ndarray
    densities: np.ndarray
    power_steps: int
    residual: float
    meta: dict = field(default_factory=dict)

    @property
    def n_bins(self) -> int:
        return len(self.densities)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def masses(self) -> np.ndarray:
        return self.densities * self.widths

    def total_mass(self) -> float:
        return float(self.masses().sum())

    def density_at(self, x) -> float:
        i = int(np.searchsorted(self.edges, x, side="right")) - 1
        return float(self.densities[min(max(i, 0), self.n_bins - 1)])

    def density_right_of(self, c: float) -> float:
        """``h(c+)``: density of the bin starting at ``c`` (or containing it)."""
        return self.density_at(float(c))

    def cdf(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        cum = np.concatenate([[0.0], np.cumsum(self.masses())])
        i = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.n_bins - 1)
        return cum[i] + self.densities[i] * (x - self.edges[i])

    def measure_of(self, S) -> float:
        S = as_interval_set(S)
        if not S:
            return 0.0
        lo, hi, _, _ = S.to_arrays()
        return float(np.sum(self.cdf(hi) - self.cdf(lo)))

    def law_cells(self, restrict: IntervalSet | None = None):
        lo, hi = self.edges[:-1], self.edges[1:]
        mass = self.masses()
        if restrict is None:
            keep = mass > 0
            return lo[keep], hi[keep], mass[keep]
        out_lo, out_hi, out_m = [], [], []
        for iv in restrict:
            a, b = float(iv.lo), float(iv.hi)
            i0 = max(int(np.searchsorted(self.edges, a, side="right")) - 1, 0)
            i1 = min(int(np.searchsorted(self.edges, b, side="left")), self.n_bins)
            for i in range(i0, i1):
                l, h = max(lo[i], a), min(hi[i], b)
                if h > l and self.densities[i] > 0:
                    out_lo.append(l)
                    out_hi.append(h)
                    out_m.append(self.densities[i] * (h - l))
        return np.array(out_lo), np.array(out_hi), np.array(out_m)

    def to_dict(self) -> dict:
        return {
            "type": "ulam",
            "n_bins": self.n_bins,
            "edges": self.edges.tolist(),
            "densities": self.densities.tolist(),
            "power_steps": int(self.power_steps),
            "residual": float(self.residual),
            "meta": self.meta,
        }


LEBESGUE = PiecewiseConstantMeasure((UNIT,), (1.0,), 0.0, {"method": "lebesgue"})


def measure_from_dict(d: dict):
    if d["type"] == "piecewise_constant":
        cells = tuple(Interval(lo, hi) for lo, hi in d["cells"])
        return PiecewiseConstantMeasure(cells, tuple(d["densities"]), d["tail_bound"], d.get("meta", {}))
    if d["type"] == "ulam":
        return UlamDensity(np.array(d["edges"]), np.array(d["densities"]),
                           d["power_steps"], d["residual"], d.get("meta", {}))
    raise ValueError(f"unknown measure type {d['type']!r}")


def dump_measure(m, path) -> None:
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh, sort_keys=True)


def load_measure(path):
    with open(path) as fh:
        return measure_from_dict(json.load(fh))


def measure_of(m, S) -> float:
    return m.measure_of(S)


# ------------------------------------------------------------------ ladder


def ladder_cell_masses(params: LadderMapParams) -> tuple[Fraction, list[Fraction]]:
    """Exact ``(η_0, [μ(Y_0), ..., μ(Y_{J-1})])`` for the truncated ladder map.

    ``σ(m) = η_0 2^{-(m+1)} Σ_{i>m} 1/s_i`` and ``μ(Y_j) = Σ_{i≥j} σ(i)``; the
    free constant ``η_0`` is fixed by total mass one.
    """
    J = params.J
    inv_s = [1 / s for s in params.slopes]
    suffix = [Fraction(0)] * (J + 1)
    for m in range(J - 1, -1, -1):
        suffix[m] = suffix[m + 1] + inv_s[m]  # sum over i > m  (inv_s[m] is 1/s_{m+1})
    sigma = [dyadic(m + 1) * suffix[m] for m in range(J)]
    mu_y = [Fraction(0)] * J
    acc = Fraction(0)
    for j in range(J - 1, -1, -1):
        acc += sigma[j]
        mu_y[j] = acc
    if mu_y[0] != Fraction(1, 2):
        raise AssertionError("recursion inconsistent with mu(Y_0) = eta_0 / 2")
    eta0 = 1 / sum(mu_y)
    return eta0, [eta0 * m for m in mu_y]


def ladder_measure_exact(params: LadderMapParams, max_tail: float = 1e-10) -> PiecewiseConstantMeasure:
    eta0, mu_y = ladder_cell_masses(params)
    J = params.J
    tail_bound = float(eta0 * params.tail)
    if tail_bound > max_tail:
        raise ConvergenceError(
            f"truncation at J={J} leaves tail mass bound {tail_bound:.3g} > {max_tail:.3g}; increase J")
    z = params.breakpoints
    cells = [Interval(0, dyadic(J))]
    dens = [0.0]
    for i in range(J - 1, 0, -1):
        cells.append(Interval(dyadic(i + 1), dyadic(i)))
        dens.append(float(2 ** (i + 1) * mu_y[i]))
    for j in range(1, J + 1):
        cells.append(Interval(z[j], z[j + 1]))
        dens.append(float(eta0))
    ratios = ladder_tail_ratios(mu_y)
    meta = {
        "method": "exact",
        "family": "ladder",
        "J": J,
        "rule": params.rule,
        "eta0": float(eta0),
        "mu_Y": [float(m) for m in mu_y],
        "empirical_k0": empirical_k0(mu_y),
        "tail_ratios": ratios,
    }
    return PiecewiseConstantMeasure(tuple(cells), tuple(dens), tail_bound, meta)


def ladder_tail_ratios(mu_y) -> list[float]:
    """``Σ_{j>k} μ(Y_j) / μ(Y_k)`` for ``k = 0..J-2``."""
    out, acc = [], Fraction(0)
    for k in range(len(mu_y) - 1, -1, -1):
        out.append(float(acc / mu_y[k]) if mu_y[k] else float("nan"))
        acc += mu_y[k]
    return out[::-1][:-1]


def empirical_k0(mu_y) -> int | None:
    """Smallest ``k0`` with ``μ(Y_{k+1}) <= 2^{-(k+1)} μ(Y_k)`` for all ``k >= k0``."""
    k0 = None
    for k in range(len(mu_y) - 2, -1, -1):
        if mu_y[k + 1] <= dyadic(k + 1) * mu_y[k]:
            k0 = k
        else:
            break
    return k0


# ---------------------------------------------------------- transfer matrix


def cell_transition_matrix(T: PiecewiseMap, cells) -> np.ndarray:
    """``P[a, b] = λ(a ∩ T^{-1} b) / λ(a)``, computed in the cells' own arithmetic.

    Every cell must lie inside a single branch domain.
    """
    n = len(cells)
    P = np.zeros((n, n))
    for a, cell in enumerate(cells):
        mid = cell.lo + (cell.hi - cell.lo) / 2
        br = T.branches[T.branch_index(mid)]
        if not (br.domain.lo <= cell.lo and cell.hi <= br.domain.hi):
            raise ValueError(f"cell {cell!r} straddles a branch boundary")
        width = cell.length()
        for b, target in enumerate(cells):
            pre = br.preimage(target)
            if pre is None:
                continue
            piece = pre.intersect(cell)
            if piece is not None:
                P[a, b] = float(piece.length() / width)
    return P


def stationary_vector(P, tol: float = 1e-12, max_steps: int = 1_000_000, init=None):
    """Left fixed vector of a row-stochastic matrix by power iteration.

    Returns ``(pi, steps, residual)`` where ``residual = ||pi P - pi||_1``.
    """
    n = P.shape[0]
    pi = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=np.float64).copy()
    PT = P.T.tocsr() if sp.issparse(P) else P.T
    for step in range(1, max_steps + 1):
        nxt = PT @ pi
        nxt /= nxt.sum()
        delta = float(np.abs(nxt - pi).sum())
        pi = nxt
        if delta < tol:
            return pi, step, float(np.abs(PT @ pi - pi).sum())
    raise ConvergenceError(f"power iteration did not reach tol={tol} in {max_steps} steps")


def markov_cells(T: PiecewiseMap) -> tuple[Interval, ...]:
    """Default Markov partition: the named cells, else the branch domains."""
    return tuple(T.cells.values()) if T.name == "ladder" else T.partition


def transfer_matrix_stationary(T: PiecewiseMap, cells=None, tol: float = 1e-14,
                               max_steps: int = 1_000_000) -> PiecewiseConstantMeasure:
    cells = tuple(cells) if cells is not None else markov_cells(T)
    P = cell_transition_matrix(T, cells)
    pi, steps, residual = stationary_vector(P, tol, max_steps)
    dens = tuple(float(m / float(c.length())) if c.length() > 0 else 0.0 for m, c in zip(pi, cells))
    meta = {"method": "transfer", "family": T.name, "power_steps": steps,
            "residual": residual, "masses": [float(m) for m in pi]}
    return PiecewiseConstantMeasure(cells, dens, 0.0, meta)


# -------------------------------------------------------------------- Ulam


def ulam_edges(n_bins: int, grid: str = "uniform", ratio: float = 1.05, c: float = 0.5,
               x_min: float = 1e-12) -> np.ndarray:
    """Bin edges on ``[0, 1]`` with ``c`` always an edge.

    ``geometric`` spends up to a quarter of the bins on a geometric grid (factor
    ``ratio``) shrinking towards 0, joined to a uniform grid where the widths
    match.  The grid stops at ``x_min``: a deeper first bin leaks less than one
    ulp per step near a neutral fixed point and turns absorbing in floating point.
    """
    if n_bins < 16:
        raise ValueError("n_bins must be at least 16")
    if grid == "uniform":
        n_left = int(round(n_bins * c))
        return np.concatenate([np.linspace(0.0, c, n_left + 1), np.linspace(c, 1.0, n_bins - n_left + 1)[1:]])
    if grid != "geometric":
        raise ValueError(f"unknown grid {grid!r}")
    join = 1.0 / (1.0 + (n_bins - n_bins // 4) * (ratio - 1.0))
    n_geo = min(n_bins // 4, int(math.ceil(math.log(join / x_min) / math.log(ratio))))
    n_uni = n_bins - n_geo
    join = 1.0 / (1.0 + n_uni * (ratio - 1.0))
    width = (1.0 - join) / n_uni
    n_left = max(int(round((c - join) / width)), 1)
    geo = join * ratio ** -np.arange(n_geo - 1, 0, -1, dtype=np.float64)
    return np.concatenate([
        [0.0], geo,
        np.linspace(join, c, n_left + 1),
        np.linspace(c, 1.0, n_uni - n_left + 1)[1:],
    ])


def _vector_inverse(T: PiecewiseMap, k: int):
    br = T.branches[k]
    if br.affine is not None:
        anchor, value, slope = (float(v) for v in br.affine)
        return lambda y: anchor + (y - value) / slope
    if T.name == "intermittent" and k == 0:
        p = T.params.p
        return lambda y: left_branch_inverse(y, p)
    return np.vectorize(lambda y: float(br.inverse(float(y))))


def ulam_matrix(T: PiecewiseMap, edges: np.ndarray) -> sp.csr_matrix:
    n = len(edges) - 1
    rows, cols, vals = [], [], []
    for k, br in enumerate(T.branches):
        d0, d1 = float(br.domain.lo), float(br.domain.hi)
        if d1 <= d0:
            continue
        i0, i1 = float(br.image.lo), float(br.image.hi)
        g = _vector_inverse(T, k)(np.clip(edges, i0, i1))
        if not br.increasing:
            g = g[::-1]
        g = np.clip(g, d0, d1)
        inner = edges[(edges > d0) & (edges < d1)]
        pts = np.unique(np.concatenate([[d0, d1], inner, g]))
        u, v = pts[:-1], pts[1:]
        keep = v > u
        u, v = u[keep], v[keep]
        mid = 0.5 * (u + v)
        a = np.clip(np.searchsorted(edges, mid, side="right") - 1, 0, n - 1)
        b = np.searchsorted(g, mid, side="right") - 1
        b = (b if br.increasing else (n - 1) - b)
        ok = (b >= 0) & (b < n)
        rows.append(a[ok])
        cols.append(b[ok])
        vals.append((v - u)[ok])
    rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
    widths = np.diff(edges)
    P = sp.coo_matrix((vals / widths[rows], (rows, cols)), shape=(n, n)).tocsr()
    P.sum_duplicates()
    return P


def ulam_density(T: PiecewiseMap, n_bins: int = 8192, tol: float = 1e-10, grid: str | None = None,
                 max_steps: int = 1_000_000) -> UlamDensity:
    """Ulam approximation of the invariant density.

    The stationary vector is seeded with a sparse direct solve and then power
    iterated until ``||pi P - pi||_1 < tol``.
    """
    if grid is None:
        grid = "geometric" if T.name == "intermittent" else "uniform"
    edges = ulam_edges(n_bins, grid)
    P = ulam_matrix(T, edges)
    n = P.shape[0]
    A = (P.T - sp.identity(n, format="csr")).tolil()
    A[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    seed = np.clip(spla.spsolve(A.tocsc(), rhs), 0.0, None)
    if not np.all(np.isfinite(seed)) or seed.sum() <= 0:
        seed = np.full(n, 1.0 / n)
    seed /= seed.sum()
    PT = P.T.tocsr()
    pi, steps = seed, 0
    residual = float(np.abs(PT @ pi - pi).sum())
    while not residual < tol:
        if steps >= max_steps:
            raise ConvergenceError(f"Ulam stationary vector residual {residual:.3g} after {steps} steps")
        pi = PT @ pi
        pi /= pi.sum()
        steps += 1
        residual = float(np.abs(PT @ pi - pi).sum())
    dens = pi / np.diff(edges)
    meta = {"method": "ulam", "family": T.name, "grid": grid,
            "params": getattr(T.params, "__dict__", None) and dict(T.params.__dict__)}
    return UlamDensity(edges, dens, steps, residual, meta)


# ----------------------------------------------------------- extremal index


def extremal_index(T: PiecewiseMap, m, Y, E) -> float:
    """Finite-size extremal index ``μ(Y ∩ T^{-1}E) / μ(E)``."""
    from .inducing import pullback_target

    Y, E = as_interval_set(Y), as_interval_set(E)
    mE = m.measure_of(E)
    if mE <= 0:
        raise ValueError("target set has zero measure")
    return m.measure_of(pullback_target(T, Y, E)) / mE


def invariance_defect(T: PiecewiseMap, m, A) -> float:
    """``|μ(T^{-1}A) - μ(A)|``."""
    A = as_interval_set(A)
    return abs(m.measure_of(T.preimage(A)) - m.measure_of(A))
