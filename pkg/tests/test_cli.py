import json
from fractions import Fraction

import pytest

from hitlimits.cli import main
from hitlimits.maps import build_map

SMALL = """
name = "small"
[map]
family = "doubling"
[target]
rule = "dyadic"
schedule = [6, 8]
[measure]
method = "lebesgue"
[normalization]
rule = "mu_of_E"
[law]
kind = "scaled_exponential"
theta = 0.5
[sampling]
N = 20000
[tolerances]
ks = {ks}
inducing = 0.05
[checks]
inducing_set = [0.5, 1.0]
theta_exact = 0.5
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_orbit_doubling(capsys):
    assert run(capsys, "orbit", "doubling", "--x0", "0.3", "--n", "2") == (0, "0.3,0.6,0.2\n", "")


def test_orbit_zero_steps_and_fraction(capsys):
    assert run(capsys, "orbit", "doubling", "--x0", "0.3", "--n", "0")[1] == "0.3\n"
    # 1/3 is periodic in exact arithmetic
    assert run(capsys, "orbit", "doubling", "--x0", "1/3", "--n", "60", "--digits", "6")[1].split(",")[-1].strip() == "0.333333"


@pytest.mark.parametrize("argv", [
    ["orbit", "doubling", "--x0", "1.5", "--n", "2"],
    ["orbit", "doubling", "--x0", "abc", "--n", "2"],
    ["orbit", "intermittent", "--x0", "0.2", "--n", "2"],
    ["orbit", "doubling", "--p", "0.5", "--x0", "0.2", "--n", "2"],
    ["orbit", "tent", "--x0", "0.2", "--n", "2"],
    ["invariant", "intermittent", "--p", "0.5", "--method", "lebesgue"],
    ["suite", "--threads", "0", "--skip-properties", "--scenarios", "folklore-return"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_orbit_ladder_and_intermittent(capsys):
    code, out, _ = run(capsys, "orbit", "intermittent", "--p", "0.5", "--x0", "0.25", "--n", "1")
    assert code == 0 and float(out.split(",")[1]) == pytest.approx(0.25 + 2**0.5 * 0.25**1.5)
    code, out, _ = run(capsys, "orbit", "ladder", "--x0", "0.75", "--n", "1")
    T = build_map("ladder", rule="geometric-fast", J=40)
    assert code == 0 and float(out.split(",")[1]) == pytest.approx(float(T(Fraction(3, 4))), rel=1e-14)


def test_invariant_doubling_transfer(capsys):
    code, out, _ = run(capsys, "invariant", "doubling", "--method", "transfer")
    d = json.loads(out)
    assert code == 0 and d["densities"] == pytest.approx([1.0, 1.0]) and d["h_c_plus"] == pytest.approx(1.0)


def test_invariant_ladder_exact(capsys):
    code, out, _ = run(capsys, "invariant", "ladder", "--method", "exact", "--lambda-rule", "geometric-fast")
    d = json.loads(out)
    assert code == 0 and d["total_mass"] == pytest.approx(1.0, abs=1e-12)
    assert d["meta"]["mu_Y"][0] == pytest.approx(0.9798, abs=1e-4)


def test_invariant_ulam_cached(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HITLIMITS_CACHE_DIR", str(tmp_path / "cache"))
    argv = ["invariant", "intermittent", "--p", "0.5", "--method", "ulam", "--bins", "1024",
            "--out", str(tmp_path / "m.json")]
    assert run(capsys, *argv)[0] == 0
    cached = list((tmp_path / "cache").glob("measure-*.json"))
    assert len(cached) == 1
    first = (tmp_path / "m.json").read_text()
    stamp = cached[0].stat().st_mtime_ns
    assert run(capsys, *argv)[0] == 0
    assert cached[0].stat().st_mtime_ns == stamp  # reused, not rewritten
    assert (tmp_path / "m.json").read_text() == first
    d = json.loads(first)
    assert "h_c_plus" in d and d["total_mass"] == pytest.approx(1.0, abs=1e-8)


def test_hts_pass_and_gate_failure(capsys, tmp_path):
    good = tmp_path / "good.toml"
    good.write_text(SMALL.format(ks=0.05))
    code, out, _ = run(capsys, "hts", str(good), "--out-dir", str(tmp_path / "r"))
    assert code == 0 and "small: PASS" in out
    rep = json.loads((tmp_path / "r" / "small.json").read_text())
    assert rep["passed"] and [r["k"] for r in rep["rows"]] == [6, 8]
    assert (tmp_path / "r" / "small.csv").exists()
    assert (tmp_path / "r" / "small__dyadic=6__ecdf.csv").read_text().startswith("t,F")

    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.format(ks=1e-6))
    code, out, _ = run(capsys, "hts", str(bad), "--out-dir", str(tmp_path / "r2"))
    assert code == 1 and "[FAIL] small: ks[dyadic=6]" in out


def test_hts_malformed_config_lists_keys(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.format(ks=0.05).replace("N = 20000", "N = 0\nsize = 4"))
    code, _, err = run(capsys, "hts", str(bad))
    assert code == 2 and "sampling.size" in err
    assert run(capsys, "hts", str(tmp_path / "missing.toml"))[0] == 2


def test_hts_bundled_ladder_quick(capsys, tmp_path):
    from hitlimits.config import bundled_config_dir

    code, out, _ = run(capsys, "hts", str(bundled_config_dir() / "ladder-unexceptional.toml"), "--quick",
                       "--out-dir", str(tmp_path))
    assert code == 0, out


def test_suite_subset(capsys, tmp_path):
    code, out, _ = run(capsys, "suite", "--scenarios", "folklore-return", "--skip-properties", "--quick",
                       "--out-dir", str(tmp_path))
    assert code == 0 and "suite: PASS" in out
    agg = json.loads((tmp_path / "suite.json").read_text())
    assert agg["passed"] and set(agg["reports"]) == {"folklore-return"} and agg["seed"] == 7
    assert "folklore-return" in json.loads((tmp_path / "timings.json").read_text())


@pytest.mark.parametrize("seed", [7, 8, 9, 10, 11])
def test_quick_suite_passes_across_seeds(capsys, tmp_path, seed):
    import time

    t0 = time.perf_counter()
    code, out, _ = run(capsys, "suite", "--quick", "--seed", str(seed), "--out-dir", str(tmp_path))
    assert code == 0, out
    assert time.perf_counter() - t0 < 120
