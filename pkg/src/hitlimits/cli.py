"""Command line interface: ``orbit``, ``invariant``, ``hts`` and ``suite``.

Exit codes: 0 when every gate passes, 1 on a gate failure, 2 on a
configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from .config import SUITE_SCENARIOS, ConfigError, bundled_config, load_config
from .maps import FAMILIES, DomainError, build_map, orbit

log = logging.getLogger("hitlimits")

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _map_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--p", type=float, help="intermittency exponent (intermittent family)")
    p.add_argument("--lambda-rule", default=None, help="ladder cell-length rule: geometric-fast or dyadic")
    p.add_argument("--J", type=int, default=None, help="ladder truncation")


def _map_params(args) -> dict:
    params = {}
    if args.family == "intermittent":
        if args.p is None:
            raise UsageError("intermittent needs --p")
        params["p"] = args.p
    elif args.p is not None:
        raise UsageError(f"--p does not apply to {args.family}")
    if args.family == "ladder":
        params["rule"] = args.lambda_rule or "geometric-fast"
        params["J"] = args.J or 40
    elif args.lambda_rule is not None or args.J is not None:
        raise UsageError(f"--lambda-rule/--J do not apply to {args.family}")
    return params


def _set_threads(n):
    if n is None:
        return
    import numba

    if n < 1:
        raise UsageError("--threads must be positive")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hitlimits", description="Hitting-time statistics for interval maps.")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("orbit", help="print an orbit")
    _map_args(p)
    p.add_argument("--x0", required=True, help="initial point in [0, 1); a fraction like 1/3 is iterated exactly")
    p.add_argument("--n", type=int, required=True, help="number of iterations")
    p.add_argument("--digits", type=int, default=15, help="significant digits printed")

    p = sub.add_parser("invariant", help="compute an invariant measure as JSON")
    _map_args(p)
    p.add_argument("--method", choices=("lebesgue", "exact", "transfer", "ulam"), required=True)
    p.add_argument("--bins", type=int, default=8192)
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")

    for name, hlp in (("hts", "run one scenario config"), ("suite", "run every bundled scenario and property gate")):
        p = sub.add_parser(name, help=hlp)
        if name == "hts":
            p.add_argument("config", type=Path)
        else:
            p.add_argument("--scenarios", nargs="+", choices=SUITE_SCENARIOS, default=list(SUITE_SCENARIOS))
            p.add_argument("--skip-properties", action="store_true")
        p.add_argument("--seed", type=int, default=None if name == "hts" else 7)
        p.add_argument("--quick", action="store_true", help="smaller samples, looser tolerances")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out-dir", type=Path, default=Path("reports"))
    return parser


def cmd_orbit(args) -> int:
    T = build_map(args.family, **_map_params(args))
    if args.n < 0:
        raise UsageError("--n must be nonnegative")
    try:
        x0 = Fraction(args.x0) if "/" in args.x0 else float(args.x0)
    except ValueError:
        raise UsageError(f"cannot parse --x0 {args.x0!r}") from None
    if not 0 <= x0 < 1:
        raise UsageError(f"--x0 must lie in [0, 1), got {args.x0}")
    if isinstance(x0, Fraction) and args.family == "intermittent":
        x0 = float(x0)
    pts = orbit(T, x0, args.n)
    print(",".join(f"{float(x):.{args.digits}g}" for x in pts))
    return EXIT_OK


def cmd_invariant(args) -> int:
    from .scenario import compute_measure

    params = _map_params(args)
    T = build_map(args.family, **params)
    try:
        m = compute_measure(T, args.method, args.bins, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d = m.to_dict()
    c = float(T.branches[0].domain.hi)
    d["h_c_plus"] = m.density_at(c)
    d["total_mass"] = m.total_mass()
    text = json.dumps(d, sort_keys=True)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"wrote {args.out} (h(c+) = {d['h_c_plus']:.10g})")
    else:
        print(text)
    return EXIT_OK


def _prepare(cfg, args):
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.quick:
        cfg = cfg.quick()
    return cfg


def _summarise(report) -> None:
    for g in report.gates:
        status = "PASS" if g.passed else "FAIL"
        print(f"  [{status}] {report.name}: {g.name} = {g.value} (threshold {g.threshold})")


def cmd_hts(args) -> int:
    from .scenario import run_scenario

    _set_threads(args.threads)
    cfg = _prepare(load_config(args.config), args)
    report = run_scenario(cfg, log=log.info)
    report.write(args.out_dir, cfg.output.ecdf_points, cfg.output.write_ecdf)
    _summarise(report)
    print(f"{cfg.name}: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_GATE


def cmd_suite(args) -> int:
    from .scenario import run_property_gates, run_scenario

    _set_threads(args.threads)
    reports = {}
    timings = {}
    for name in args.scenarios:
        cfg = _prepare(bundled_config(name), args)
        t0 = time.perf_counter()
        log.info("scenario %s", name)
        rep = run_scenario(cfg, log=log.info)
        timings[name] = time.perf_counter() - t0
        rep.write(args.out_dir, cfg.output.ecdf_points, cfg.output.write_ecdf)
        reports[name] = rep
        _summarise(rep)
    if not args.skip_properties:
        t0 = time.perf_counter()
        log.info("property gates")
        rep = run_property_gates(seed=args.seed, quick=args.quick, log=log.info)
        timings["properties"] = time.perf_counter() - t0
        rep.write(args.out_dir, write_ecdf=False)
        reports["properties"] = rep
        _summarise(rep)
    passed = all(r.passed for r in reports.values())
    aggregate = {
        "seed": args.seed,
        "quick": bool(args.quick),
        "passed": passed,
        "reports": {k: r.to_dict() for k, r in reports.items()},
    }
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "suite.json").write_text(json.dumps(aggregate, sort_keys=True, indent=1))
    # wall-clock times are kept out of the deterministic report
    (args.out_dir / "timings.json").write_text(json.dumps(timings, sort_keys=True, indent=1))
    failed = [f"{k}:{g.name}" for k, r in reports.items() for g in r.failed_gates]
    print(f"suite: {'PASS' if passed else 'FAIL'} ({sum(timings.values()):.1f} s)")
    for f in failed:
        print(f"  failed gate {f}")
    return EXIT_OK if passed else EXIT_GATE


COMMANDS = {"orbit": cmd_orbit, "invariant": cmd_invariant, "hts": cmd_hts, "suite": cmd_suite}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(message)s", stream=sys.stderr)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
