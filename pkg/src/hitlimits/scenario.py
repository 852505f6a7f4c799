"""Scenario runner, property gates and reports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .inducing import build_induced, check_reach_only_via, pullback_target
from .intervals import Interval, IntervalSet, dyadic
from .laws import EmpiricalCDF, atom_mass, ks_distance, ks_two_sample
from .maps import PiecewiseMap, build_map
from .measures import (
    LEBESGUE,
    invariance_defect,
    ladder_measure_exact,
    load_measure,
    dump_measure,
    transfer_matrix_stationary,
    ulam_density,
)
from .sampling import InitialLaw, sample_hitting_cdf, sample_induced_hitting_cdf, sample_return_cdf

CACHE_ENV = "HITLIMITS_CACHE_DIR"


# ------------------------------------------------------------------ gates


@dataclass(frozen=True)
class Gate:
    name: str
    value: float | bool | str
    threshold: float | str | None
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _jsonable(self.value), "threshold": _jsonable(self.threshold),
                "passed": bool(self.passed), "detail": self.detail}


def gate_below(name, value, threshold, detail="") -> Gate:
    return Gate(name, float(value), float(threshold), bool(value < threshold), detail)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


@dataclass
class ScenarioReport:
    name: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    ecdfs: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    @property
    def failed_gates(self) -> list[Gate]:
        return [g for g in self.gates if not g.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "config": self.config,
            "rows": [{k: _jsonable(v) for k, v in r.items()} for r in self.rows],
            "gates": [g.to_dict() for g in self.gates],
            "meta": {k: _jsonable(v) for k, v in self.meta.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def write(self, out_dir, ecdf_points: int = 200, write_ecdf: bool = True) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.name}.json", out / f"{self.name}.csv"]
        paths[0].write_text(self.to_json())
        write_rows_csv(paths[1], self.rows)
        if write_ecdf:
            for key, ecdf in self.ecdfs.items():
                p = out / f"{self.name}__{key}__ecdf.csv"
                ecdf.write_csv(p, ecdf_points, t_max=6.0)
                paths.append(p)
        return paths


def write_rows_csv(path, rows: list[dict]) -> None:
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _jsonable(r.get(k, "")) for k in keys})


# ------------------------------------------------------------ measure cache


def measure_cache_key(family: str, params: dict, method: str, resolution: int | None) -> str:
    blob = json.dumps({"family": family, "params": params, "method": method, "resolution": resolution},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def compute_measure(T: PiecewiseMap, method: str, bins: int = 8192, params: dict | None = None):
    """Invariant measure of ``T``; Ulam densities are cached under ``$HITLIMITS_CACHE_DIR``.

    Exact and transfer-matrix measures carry rational cell endpoints that a
    float JSON file would lose, so they are always recomputed (both are cheap).
    """
    if method == "lebesgue":
        if T.name != "doubling":
            raise ValueError("Lebesgue measure is invariant only for the doubling map")
        return LEBESGUE
    if method == "exact":
        if T.name != "ladder":
            raise ValueError("closed-form measure is available for the ladder map only")
        return ladder_measure_exact(T.params)
    if method == "transfer":
        return transfer_matrix_stationary(T)
    if method != "ulam":
        raise ValueError(f"unknown measure method {method!r}")
    cache_dir = os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        key = measure_cache_key(T.name, params or {}, method, bins)
        path = Path(cache_dir) / f"measure-{key}.json"
        if path.exists():
            return load_measure(path)
    m = ulam_density(T, bins)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        dump_measure(m, tmp)
        tmp.replace(path)
    return m


# -------------------------------------------------------------- scenarios


def target_set(rule: str, value, closed: bool) -> IntervalSet:
    if rule == "dyadic":
        return IntervalSet.of(0, dyadic(int(value)), True, closed)
    if rule == "interval":
        return IntervalSet.of(0, Fraction(value), True, closed)
    raise ValueError(f"unknown target rule {rule!r}")


def _right_end_of_left_branch(T: PiecewiseMap):
    return T.branches[0].domain.hi


def normalization(cfg: ScenarioConfig, T, m, E, Ep) -> float:
    nz = cfg.normalization
    if nz.rule == "mu_of_E":
        return m.measure_of(E)
    if nz.rule == "mu_of_Eprime":
        return m.measure_of(Ep)
    if nz.constant == "density_over_slope":
        c = _right_end_of_left_branch(T)
        const = m.density_at(float(c)) / float(T.branches[1].derivative(c))
    else:
        const = float(nz.constant)
    return const * float(E.total_length())


def _exact_theta(T, Y, E, Ep, m):
    """``λ(E') / λ(E)`` in rationals when the measure is Lebesgue."""
    if m is LEBESGUE:
        return Fraction(Ep.total_length()) / Fraction(E.total_length())
    return None


def run_scenario(cfg: ScenarioConfig, log=None) -> ScenarioReport:
    """Sample every target of the schedule and evaluate the configured gates."""
    say = log or (lambda *_: None)
    T = build_map(cfg.map.family, **cfg.map.params)
    m = compute_measure(T, cfg.measure.method, cfg.measure.bins, cfg.map.params)
    s, tol, ch = cfg.sampling, cfg.tolerances, cfg.checks
    Y = IntervalSet.of(*ch.inducing_set) if ch.inducing_set else IntervalSet.of(_right_end_of_left_branch(T), 1)
    Y = IntervalSet([Interval(Fraction(iv.lo), Fraction(iv.hi)) for iv in Y])
    system = build_induced(T, Y) if ch.inducing_set else None
    muY = m.measure_of(Y)
    report = ScenarioReport(cfg.name, cfg.to_dict())
    report.meta["measure_method"] = cfg.measure.method
    if hasattr(m, "density_right_of"):
        report.meta["h_c_plus"] = m.density_right_of(float(_right_end_of_left_branch(T)))
    q05 = []

    for idx, value in enumerate(cfg.target.schedule):
        E = target_set(cfg.target.rule, value, cfg.target.is_closed)
        Ep = pullback_target(T, Y, E)
        lamE, muE, muEp = float(E.total_length()), m.measure_of(E), m.measure_of(Ep)
        theta = muEp / muE
        gamma = normalization(cfg, T, m, E, Ep)
        key = f"{cfg.target.rule}={value}"
        label = f"{cfg.name}/{key}"
        row = {"k" if cfg.target.rule == "dyadic" else "eps": value, "lambda_E": lamE, "mu_E": muE,
               "mu_Eprime": muEp, "theta": theta, "gamma": gamma}
        exact = _exact_theta(T, Y, E, Ep, m)
        if exact is not None:
            row["theta_exact"] = str(exact)
        say(f"  {cfg.name} {key}: theta={theta:.6g} gamma={gamma:.6g}")

        if s.mode == "return":
            smp = sample_return_cdf(T, E, gamma, m, s.N, seed=s.seed, label=label + "/return",
                                    cap=math.ceil(s.cap_factor / gamma),
                                    method=s.method, burn_in=s.burn_in)
        else:
            law = InitialLaw.uniform() if s.initial == "lebesgue" else InitialLaw.from_measure(m)
            smp = sample_hitting_cdf(T, E, gamma, s.N, seed=s.seed, law=law, label=label + "/base",
                                     cap=math.ceil(s.cap_factor / gamma), method=s.method, burn_in=s.burn_in)
        ecdf = smp.ecdf
        report.ecdfs[key] = ecdf
        ks = ks_distance(ecdf, cfg.law)
        row.update(ks=ks, overflow=smp.overflow_fraction, sampler=smp.method,
                   mean=ecdf.mean(), median=ecdf.quantile(0.5))
        if s.mode == "hitting" and cfg.law.kind != "diverge":
            # 1 when the normalisation has the right scale; not gated
            row["mean_ratio"] = ecdf.mean() * cfg.law.theta
        report.gates.append(gate_below(f"ks[{key}]", ks, tol.ks, f"KS to {cfg.law}"))
        if s.mode == "return":
            a = atom_mass(ecdf)
            row["atom_mass"] = a
            report.gates.append(gate_below(f"atom[{key}]", abs(a - cfg.law.atom), tol.atom,
                                           f"|F_n(0.01) - {cfg.law.atom:g}|"))

        if ch.mean_within_se is not None:
            vals = smp.normalised
            mean = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
            target = 1.0 / cfg.law.theta
            row.update(mean_se=se)
            report.gates.append(Gate(f"mean[{key}]", mean, f"{target:g} +- {ch.mean_within_se:g} SE",
                                     bool(abs(mean - target) <= ch.mean_within_se * se), f"se={se:.4g}"))

        if ch.theta_exact is not None:
            ok = exact == Fraction(ch.theta_exact) if exact is not None else abs(theta - ch.theta_exact) < 1e-12
            report.gates.append(Gate(f"theta_exact[{key}]", str(exact) if exact is not None else theta,
                                     ch.theta_exact, bool(ok)))
        if ch.theta_min_final is not None and idx == len(cfg.target.schedule) - 1:
            report.gates.append(Gate(f"theta_min[{key}]", theta, ch.theta_min_final,
                                     bool(theta >= ch.theta_min_final)))

        if ch.divergence:
            qv = muE * ecdf.quantile(0.05) / gamma
            row["q05_mu_E_phi"] = qv
            q05.append(qv)

        if ch.robustness_law is not None and s.mode == "hitting":
            lo, hi = ch.robustness_law
            other = sample_hitting_cdf(T, E, gamma, s.N, seed=s.seed, law=InitialLaw.uniform(lo, hi),
                                       label=label + "/robust", cap=math.ceil(s.cap_factor / gamma),
                                       method=s.method, burn_in=s.burn_in)
            d = ks_two_sample(ecdf, other.ecdf)
            row["ks_robustness"] = d
            report.gates.append(gate_below(f"robustness[{key}]", d, tol.robustness,
                                           f"two-sample KS, second law uniform[{lo:g},{hi:g})"))

        if ch.reach_only_via and s.mode == "hitting":
            verdict = check_reach_only_via(T, Y, E, Ep, seed=s.seed)
            row["reach_only_via"] = verdict.status
            report.gates.append(Gate(f"reach_only_via[{key}]", verdict.status, "PASS",
                                     verdict.status == "PASS", verdict.reason))

        if system is not None and s.mode == "hitting":
            base = EmpiricalCDF.from_samples(smp.times * muEp)
            muY_Ep = muEp / muY
            ind = sample_induced_hitting_cdf(system, Ep, muY_Ep, s.N, seed=s.seed, label=label + "/induced",
                                             cap=math.ceil(s.cap_factor / muY_Ep), method=s.method,
                                             burn_in=s.burn_in)
            d = ks_two_sample(base, ind.ecdf)
            row.update(ks_inducing=d, induced_overflow=ind.overflow_fraction)
            report.gates.append(gate_below(f"inducing[{key}]", d, tol.inducing,
                                           "KS(mu(E')phi_E, mu_Y(E')phi^Y_E')"))
        report.rows.append(row)

    if ch.divergence:
        inc = all(b > a for a, b in zip(q05, q05[1:]))
        report.gates.append(Gate("divergence", inc, "strictly increasing", bool(inc),
                                 "5th percentile of mu(E)phi along the schedule: "
                                 + ", ".join(f"{v:.4g}" for v in q05)))
    if ch.tail_ratio_decreasing:
        ratios = m.meta["tail_ratios"]
        dec = all(b < a for a, b in zip(ratios, ratios[1:]))
        report.meta["tail_ratios"] = ratios[: max(cfg.target.schedule) + 1]
        report.gates.append(Gate("tail_ratio_decreasing", dec, "strictly decreasing", bool(dec),
                                 "sum_{j>k} mu(Y_j) / mu(Y_k), k = 0..J-2"))
    return report


# --------------------------------------------------------- property gates


def ladder_measure_gates(J: int = 40, n_intervals: int = 1000, seed: int = 7, rule: str = "geometric-fast",
                         agree_tol: float = 1e-12, defect_tol: float = 1e-10) -> tuple[list[Gate], dict]:
    T = build_map("ladder", rule=rule, J=J)
    exact = ladder_measure_exact(T.params)
    trans = transfer_matrix_stationary(T)
    diff = float(np.max(np.abs(exact.masses() - np.asarray(trans.meta["masses"]))))
    rng = np.random.default_rng(seed)
    pts = np.sort(rng.random((n_intervals, 2)), axis=1)
    worst = 0.0
    for a, b in pts:
        A = IntervalSet.of(Fraction(float(a)), Fraction(float(b)))
        worst = max(worst, invariance_defect(T, exact, A))
    meta = {"ladder_J": J, "ladder_cell_agreement": diff, "ladder_invariance_defect": worst,
            "ladder_power_steps": trans.meta["power_steps"]}
    return [
        gate_below("ladder_measure_vs_transfer", diff, agree_tol, f"max per-cell mass difference, J={J}"),
        gate_below("ladder_invariance_defect", worst, defect_tol,
                   f"max |mu(T^-1 A) - mu(A)| over {n_intervals} random intervals"),
    ], meta


def kac_gate(family: str, params: dict, method: str, N: int, seed: int, n_se: float = 3.0,
             bins: int = 8192) -> tuple[Gate, dict]:
    """Mean return time to ``Y = [1/2, 1)`` under ``μ_Y`` against ``1/μ(Y)``."""
    T = build_map(family, **params)
    m = compute_measure(T, method, bins, params)
    Y = IntervalSet.of(Fraction(1, 2), 1)
    muY = m.measure_of(Y)
    smp = sample_return_cdf(T, Y, 1.0, m, N, seed=seed, label=f"kac/{family}", cap=10**9)
    t = smp.times
    finite = np.isfinite(t)
    mean = float(t[finite].mean()) if finite.all() else math.inf
    se = float(t[finite].std(ddof=1) / math.sqrt(t.size))
    target = 1.0 / muY
    name = f"kac[{family}{'' if not params else ',' + ','.join(f'{k}={v}' for k, v in sorted(params.items()))}]"
    meta = {f"{name}.mean": mean, f"{name}.se": se, f"{name}.target": target}
    return Gate(name, mean, f"{target:.6g} +- {n_se:g} SE", bool(abs(mean - target) <= n_se * se),
                f"se={se:.4g}, measure={method}"), meta


def run_property_gates(seed: int = 7, quick: bool = False, log=None) -> ScenarioReport:
    say = log or (lambda *_: None)
    report = ScenarioReport("properties", {"seed": seed, "quick": quick})
    say("  ladder measure agreement and invariance")
    gates, meta = ladder_measure_gates(n_intervals=200 if quick else 1000, seed=seed)
    report.gates += gates
    report.meta.update(meta)
    N = 10_000 if quick else 100_000
    for family, params, method in (("doubling", {}, "lebesgue"), ("ladder", {"rule": "geometric-fast", "J": 40}, "exact"),
                                   ("intermittent", {"p": 0.5}, "ulam")):
        say(f"  Kac formula: {family}")
        g, meta = kac_gate(family, params, method, N, seed)
        report.gates.append(g)
        report.meta.update(meta)
    return report
