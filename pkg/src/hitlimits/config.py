"""Scenario configuration: dataclasses, TOML parsing and validation."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .laws import KINDS, LimitLaw
from .maps import FAMILIES


class ConfigError(ValueError):
    """Invalid configuration; ``keys`` lists the offending dotted keys."""

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(sorted(problems.items()))
        self.keys = list(self.problems)
        lines = [f"  {k}: {v}" for k, v in self.problems.items()]
        super().__init__("invalid configuration:\n" + "\n".join(lines))


TARGET_RULES = ("dyadic", "interval")
NORMALIZATIONS = ("mu_of_E", "mu_of_Eprime", "lambda_scaled")
MEASURE_METHODS = ("lebesgue", "exact", "transfer", "ulam")
MODES = ("hitting", "return")
INITIAL_LAWS = ("lebesgue", "invariant")
SAMPLING_METHODS = ("auto", "direct", "renewal")


@dataclass(frozen=True)
class MapSpec:
    family: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TargetSpec:
    """``dyadic``: ``E_k = [0, 2^-k)`` for ``k`` in the schedule; ``interval``: ``E = [0, ε]``."""

    rule: str
    schedule: tuple
    closed: bool | None = None

    @property
    def is_closed(self) -> bool:
        return self.rule == "interval" if self.closed is None else self.closed


@dataclass(frozen=True)
class MeasureSpec:
    method: str
    bins: int = 8192


@dataclass(frozen=True)
class NormalizationSpec:
    """``lambda_scaled`` multiplies ``λ(E)`` by ``constant``; the string
    ``density_over_slope`` means ``h(c+) / T'(c+)`` at the right end ``c`` of the left branch."""

    rule: str
    constant: float | str | None = None


@dataclass(frozen=True)
class SamplingSpec:
    N: int
    seed: int = 7
    cap_factor: float = 100.0
    mode: str = "hitting"
    initial: str = "lebesgue"
    method: str = "auto"
    burn_in: int = 8


@dataclass(frozen=True)
class Tolerances:
    ks: float
    atom: float | None = None
    robustness: float | None = None
    inducing: float | None = None


@dataclass(frozen=True)
class Checks:
    robustness_law: tuple | None = None
    inducing_set: tuple | None = None
    reach_only_via: bool = True
    divergence: bool = False
    tail_ratio_decreasing: bool = False
    theta_exact: float | None = None
    theta_min_final: float | None = None
    mean_within_se: float | None = None


@dataclass(frozen=True)
class OutputSpec:
    ecdf_points: int = 200
    write_ecdf: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    map: MapSpec
    target: TargetSpec
    measure: MeasureSpec
    normalization: NormalizationSpec
    law: LimitLaw
    sampling: SamplingSpec
    tolerances: Tolerances
    checks: Checks = Checks()
    output: OutputSpec = OutputSpec()
    description: str = ""

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return self.replace(sampling=dataclasses.replace(self.sampling, seed=int(seed)))

    def quick(self, n_factor: int = 10, tol_factor: float = 3.0, n_min: int = 5000) -> "ScenarioConfig":
        """Smaller samples and proportionally looser tolerances for smoke runs."""
        s = dataclasses.replace(self.sampling, N=max(self.sampling.N // n_factor, n_min))
        t = Tolerances(*(None if v is None else v * tol_factor for v in dataclasses.astuple(self.tolerances)))
        return self.replace(sampling=s, tolerances=t)

    def to_dict(self) -> dict:
        return config_to_dict(self)


_SECTIONS = {
    "map": MapSpec, "target": TargetSpec, "measure": MeasureSpec,
    "normalization": NormalizationSpec, "sampling": SamplingSpec,
    "tolerances": Tolerances, "checks": Checks, "output": OutputSpec,
}
_TOP = {"name", "description", "law", *_SECTIONS}
_REQUIRED = {"name", "map", "target", "measure", "normalization", "law", "sampling", "tolerances"}


def _section(name, cls, raw, problems):
    if not isinstance(raw, dict):
        problems[name] = "must be a table"
        return None
    names = {f.name for f in dataclasses.fields(cls)}
    required = {f.name for f in dataclasses.fields(cls)
                if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING}
    for k in sorted(set(raw) - names):
        problems[f"{name}.{k}"] = "unknown key"
    for k in sorted(required - set(raw)):
        problems[f"{name}.{k}"] = "missing"
    if any(k.startswith(name + ".") for k in problems):
        return None
    kw = dict(raw)
    for k in ("schedule", "robustness_law", "inducing_set"):
        if k in kw and isinstance(kw[k], list):
            kw[k] = tuple(kw[k])
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        problems[name] = str(exc)
        return None


def _positive(problems, key, value, allow_none=True):
    if value is None and allow_none:
        return
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        problems[key] = f"must be a positive number, got {value!r}"


def config_from_dict(d: dict) -> ScenarioConfig:
    problems: dict[str, str] = {}
    for k in sorted(set(d) - _TOP):
        problems[k] = "unknown key"
    for k in sorted(_REQUIRED - set(d)):
        problems[k] = "missing"
    parts = {}
    for name, cls in _SECTIONS.items():
        if name in d:
            parts[name] = _section(name, cls, d[name], problems)
    law = None
    if "law" in d:
        raw = d["law"]
        if not isinstance(raw, dict) or set(raw) - {"kind", "theta"} or "kind" not in raw:
            problems["law"] = "must be a table with 'kind' and optional 'theta'"
        else:
            try:
                law = LimitLaw(raw["kind"], float(raw.get("theta", 1.0)))
            except (ValueError, TypeError) as exc:
                problems["law.kind" if raw.get("kind") not in KINDS else "law.theta"] = str(exc)
    if "name" in d and (not isinstance(d["name"], str) or not d["name"]):
        problems["name"] = "must be a nonempty string"

    m, t, me, nz, s, tol, ch = (parts.get(k) for k in
                                ("map", "target", "measure", "normalization", "sampling", "tolerances", "checks"))
    if m is not None and m.family not in FAMILIES:
        problems["map.family"] = f"unknown family {m.family!r}; known: {', '.join(FAMILIES)}"
    if m is not None and not isinstance(m.params, dict):
        problems["map.params"] = "must be a table"
    if t is not None:
        if t.rule not in TARGET_RULES:
            problems["target.rule"] = f"unknown rule {t.rule!r}; known: {', '.join(TARGET_RULES)}"
        if not isinstance(t.schedule, tuple) or not t.schedule:
            problems["target.schedule"] = "must be a nonempty list"
        elif t.rule == "dyadic" and not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1
                                            for k in t.schedule):
            problems["target.schedule"] = "dyadic schedule needs integers k >= 1"
        elif t.rule == "interval" and not all(isinstance(e, (int, float)) and 0 < e < 1 for e in t.schedule):
            problems["target.schedule"] = "interval schedule needs lengths in (0, 1)"
    if me is not None:
        if me.method not in MEASURE_METHODS:
            problems["measure.method"] = f"unknown method {me.method!r}; known: {', '.join(MEASURE_METHODS)}"
        if not isinstance(me.bins, int) or me.bins < 16:
            problems["measure.bins"] = "must be an integer >= 16"
    if nz is not None:
        if nz.rule not in NORMALIZATIONS:
            problems["normalization.rule"] = f"unknown rule {nz.rule!r}; known: {', '.join(NORMALIZATIONS)}"
        elif nz.rule == "lambda_scaled":
            if nz.constant != "density_over_slope":
                _positive(problems, "normalization.constant", nz.constant, allow_none=False)
        elif nz.constant is not None:
            problems["normalization.constant"] = f"only used with rule 'lambda_scaled'"
    if s is not None:
        if not isinstance(s.N, int) or s.N < 1:
            problems["sampling.N"] = "must be a positive integer"
        if not isinstance(s.seed, int) or s.seed < 0:
            problems["sampling.seed"] = "must be a nonnegative integer"
        _positive(problems, "sampling.cap_factor", s.cap_factor, allow_none=False)
        if s.mode not in MODES:
            problems["sampling.mode"] = f"unknown mode {s.mode!r}; known: {', '.join(MODES)}"
        if s.initial not in INITIAL_LAWS:
            problems["sampling.initial"] = f"unknown initial law {s.initial!r}; known: {', '.join(INITIAL_LAWS)}"
        if s.method not in SAMPLING_METHODS:
            problems["sampling.method"] = f"unknown method {s.method!r}; known: {', '.join(SAMPLING_METHODS)}"
        if not isinstance(s.burn_in, int) or s.burn_in < 1:
            problems["sampling.burn_in"] = "must be an integer >= 1"
    if tol is not None:
        _positive(problems, "tolerances.ks", tol.ks, allow_none=False)
        for k in ("atom", "robustness", "inducing"):
            _positive(problems, f"tolerances.{k}", getattr(tol, k))
        if s is not None and s.mode == "return" and tol.atom is None:
            problems["tolerances.atom"] = "required in return mode"
    if ch is not None:
        for k in ("robustness_law", "inducing_set"):
            v = getattr(ch, k)
            if v is not None and not (len(v) == 2 and all(isinstance(x, (int, float)) for x in v)
                                      and 0 <= v[0] < v[1] <= 1):
                problems[f"checks.{k}"] = "must be [lo, hi] with 0 <= lo < hi <= 1"
        if ch.robustness_law is not None and tol is not None and tol.robustness is None:
            problems["tolerances.robustness"] = "required when checks.robustness_law is set"
        if ch.inducing_set is not None and tol is not None and tol.inducing is None:
            problems["tolerances.inducing"] = "required when checks.inducing_set is set"
        if ch.mean_within_se is not None:
            _positive(problems, "checks.mean_within_se", ch.mean_within_se)
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        name=d["name"], description=d.get("description", ""), law=law,
        checks=parts.get("checks") or Checks(), output=parts.get("output") or OutputSpec(),
        **{k: parts[k] for k in ("map", "target", "measure", "normalization", "sampling", "tolerances")},
    )


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {"name": cfg.name}
    if cfg.description:
        d["description"] = cfg.description
    for name in _SECTIONS:
        d[name] = dataclasses.asdict(getattr(cfg, name))
    d["law"] = cfg.law.to_dict()
    return _clean(d)


def parse_config(text: str) -> ScenarioConfig:
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError({"<document>": f"TOML syntax error: {exc}"}) from exc
    return config_from_dict(d)


def serialize_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def bundled_config_dir() -> Path:
    return Path(__file__).parent / "configs"


SUITE_SCENARIOS = (
    "folklore-fixed-point",
    "folklore-return",
    "ladder-unexceptional",
    "neutral-p025",
    "neutral-p050",
    "neutral-p075",
)


def bundled_config(name: str) -> ScenarioConfig:
    path = bundled_config_dir() / f"{name}.toml"
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario {name!r}")
    return load_config(path)
