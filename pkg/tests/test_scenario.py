from fractions import Fraction

import pytest

from hitlimits.config import bundled_config, parse_config
from hitlimits.intervals import IntervalSet
from hitlimits.maps import build_map
from hitlimits.measures import LEBESGUE
from hitlimits.scenario import (
    compute_measure,
    measure_cache_key,
    normalization,
    run_property_gates,
    run_scenario,
    target_set,
)

CFG = """
name = "tiny"
[map]
family = "doubling"
[target]
rule = "dyadic"
schedule = [10]
[measure]
method = "lebesgue"
[normalization]
rule = "mu_of_E"
[law]
kind = "scaled_exponential"
theta = 0.5
[sampling]
N = 5000
[tolerances]
ks = 0.05
robustness = 0.05
[checks]
robustness_law = [0.6, 0.9]
mean_within_se = 4.0
"""


def test_target_sets():
    assert target_set("dyadic", 3, False) == IntervalSet.of(0, Fraction(1, 8))
    closed = target_set("interval", 0.25, True)
    assert 0.25 in closed and closed.total_length() == Fraction(1, 4)
    with pytest.raises(ValueError):
        target_set("ball", 1, False)


def test_run_scenario_is_deterministic():
    cfg = parse_config(CFG)
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a.to_json() == b.to_json()
    assert run_scenario(cfg.with_seed(8)).to_json() != a.to_json()


def test_run_scenario_rows_and_gates():
    rep = run_scenario(parse_config(CFG))
    (row,) = rep.rows
    assert row["theta"] == 0.5 and row["theta_exact"] == "1/2" and row["gamma"] == 2.0**-10
    names = [g.name for g in rep.gates]
    assert names == ["ks[dyadic=10]", "mean[dyadic=10]", "robustness[dyadic=10]", "reach_only_via[dyadic=10]"]
    assert rep.passed


def test_neutral_normalisation_uses_density_at_half():
    cfg = bundled_config("neutral-p050")
    T = build_map("intermittent", p=0.5)
    m = compute_measure(T, "ulam", 2048)
    E = target_set("interval", 2**-8, True)
    assert normalization(cfg, T, m, E, E) == pytest.approx(m.density_right_of(0.5) / 2 * 2**-8)


def test_lebesgue_only_for_doubling():
    with pytest.raises(ValueError):
        compute_measure(build_map("intermittent", p=0.5), "lebesgue")
    assert compute_measure(build_map("doubling"), "lebesgue") is LEBESGUE


def test_cache_key_depends_on_every_field():
    base = measure_cache_key("intermittent", {"p": 0.5}, "ulam", 8192)
    assert base == measure_cache_key("intermittent", {"p": 0.5}, "ulam", 8192)
    others = {measure_cache_key("intermittent", {"p": 0.25}, "ulam", 8192),
              measure_cache_key("intermittent", {"p": 0.5}, "ulam", 4096),
              measure_cache_key("ladder", {"p": 0.5}, "ulam", 8192)}
    assert base not in others and len(others) == 3


def test_report_write(tmp_path):
    rep = run_scenario(parse_config(CFG))
    paths = rep.write(tmp_path, ecdf_points=5)
    assert [p.name for p in paths] == ["tiny.json", "tiny.csv", "tiny__dyadic=10__ecdf.csv"]
    assert len(paths[2].read_text().split()) == 6


def test_property_gates_quick():
    rep = run_property_gates(seed=3, quick=True)
    assert rep.passed, rep.failed_gates
    assert rep.meta["ladder_cell_agreement"] < 1e-12
