"""YAML run configuration with field-level validation.

Every section is a small dataclass; unknown keys and bad values raise
:class:`ConfigError` naming the dotted path of the field.  ``to_dict`` and
``from_dict`` are inverse to each other, so a dumped config parses back equal.
"""

from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .distributions import DistributionSpec, Exponential, distribution_from_dict
from .errors import ConfigError
from .model import ModelParams

FORMATS = ("csv", "jsonl")


def _num(value, where, integer=False, positive=False, nonneg=False):
    if isinstance(value, bool):
        raise ConfigError(f"must be a number, got {value!r}", where)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"must be a number, got {value!r}", where) from None
    if integer:
        if not math.isfinite(out) or out != int(out):
            raise ConfigError(f"must be an integer, got {value!r}", where)
        out = int(out)
    if positive and not out > 0:
        raise ConfigError(f"must be positive, got {value!r}", where)
    if nonneg and not out >= 0:
        raise ConfigError(f"must be nonnegative, got {value!r}", where)
    return out


def _num_list(value, where, integer=False, nonneg=False, positive=False):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("must be a nonempty list", where)
    return tuple(_num(v, f"{where}[{i}]", integer=integer, nonneg=nonneg, positive=positive)
                 for i, v in enumerate(value))


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping", where)
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}; allowed: {sorted(allowed)}", f"{where}.{unknown[0]}")


def _choice(value, options, where):
    if value not in options:
        raise ConfigError(f"must be one of {list(options)}, got {value!r}", where)
    return value


@dataclass(frozen=True)
class SimulateSection:
    reps: int = 10_000
    max_shocks: int = 10_000_000
    method: str = "skip"
    with_time: bool = True
    output: str = "summary"

    @classmethod
    def from_dict(cls, d, where="simulate"):
        _check_keys(d, {f.name for f in dataclasses.fields(cls)}, where)
        out = cls(**d)
        _num(out.reps, f"{where}.reps", integer=True, positive=True)
        _num(out.max_shocks, f"{where}.max_shocks", integer=True, positive=True)
        _choice(out.method, ("skip", "step"), f"{where}.method")
        _choice(out.output, ("summary", "realizations", "histogram"), f"{where}.output")
        if not isinstance(out.with_time, bool):
            raise ConfigError("must be true or false", f"{where}.with_time")
        return dataclasses.replace(out, reps=int(out.reps), max_shocks=int(out.max_shocks))


EXACT_TABLES = ("pmf_nu", "survival_nu", "nplus_nminus", "joint_pmf", "joint_survival")


@dataclass(frozen=True)
class ExactSection:
    m_max: int = 20
    k_max: int = 5
    l_max: int = 5
    tables: tuple = ("pmf_nu", "survival_nu", "nplus_nminus")

    @classmethod
    def from_dict(cls, d, where="exact"):
        _check_keys(d, {f.name for f in dataclasses.fields(cls)}, where)
        d = dict(d)
        for name in ("m_max", "k_max", "l_max"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", integer=True, nonneg=True)
        if "tables" in d:
            if not isinstance(d["tables"], (list, tuple)) or not d["tables"]:
                raise ConfigError("must be a nonempty list", f"{where}.tables")
            for i, t in enumerate(d["tables"]):
                _choice(t, EXACT_TABLES, f"{where}.tables[{i}]")
            d["tables"] = tuple(d["tables"])
        out = cls(**d)
        if out.m_max < 1:
            raise ConfigError("must be >= 1", f"{where}.m_max")
        return out


@dataclass(frozen=True)
class LimitSection:
    g: float = 0.5
    a: object = 0.5
    mu: float = 1.0
    k_max: int = 10
    l_max: int = 10
    z_grid: tuple = (0.1, 0.5, 1.0, 2.0, 5.0)
    quad_tol: float = 1e-9
    tail_k_max: int = 3
    tail_l_max: int = 3

    @classmethod
    def from_dict(cls, d, where="limit"):
        _check_keys(d, {f.name for f in dataclasses.fields(cls)}, where)
        d = dict(d)
        if "g" in d:
            d["g"] = _num(d["g"], f"{where}.g")
            if not 0 <= d["g"] <= 1:
                raise ConfigError(f"must lie in [0, 1], got {d['g']}", f"{where}.g")
        if "a" in d:
            a = d["a"]
            if isinstance(a, (list, tuple)):
                rows = []
                for i, row in enumerate(a):
                    rows.append(_num_list(row, f"{where}.a[{i}]", nonneg=True))
                if len({len(r) for r in rows}) != 1:
                    raise ConfigError("table rows must have equal length", f"{where}.a")
                d["a"] = tuple(rows)
                flat = [v for r in rows for v in r]
            else:
                d["a"] = _num(a, f"{where}.a")
                flat = [d["a"]]
            if any(not 0 <= v <= 1 for v in flat):
                raise ConfigError("entries must lie in [0, 1]", f"{where}.a")
        if "mu" in d:
            d["mu"] = _num(d["mu"], f"{where}.mu", positive=True)
        for name in ("k_max", "l_max", "tail_k_max", "tail_l_max"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", integer=True, nonneg=True)
        if "z_grid" in d:
            d["z_grid"] = _num_list(d["z_grid"], f"{where}.z_grid", nonneg=True)
        if "quad_tol" in d:
            d["quad_tol"] = _num(d["quad_tol"], f"{where}.quad_tol", positive=True)
        return cls(**d)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["a"] = [list(r) for r in self.a] if isinstance(self.a, tuple) else self.a
        out["z_grid"] = list(self.z_grid)
        return out


@dataclass(frozen=True)
class UrnSection:
    kind: str = "three"
    theta: int = 2
    delta: int = 1
    init: tuple = (1, 1, 1)
    depleting_u: bool = False
    n: int = 8
    reps: int = 100_000
    moments: tuple = (1, 2)
    exact: bool = True

    @classmethod
    def from_dict(cls, d, where="urn"):
        _check_keys(d, {f.name for f in dataclasses.fields(cls)}, where)
        d = dict(d)
        if "kind" in d:
            _choice(d["kind"], ("three", "four"), f"{where}.kind")
        for name in ("theta", "delta"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", integer=True, nonneg=True)
        for name in ("n", "reps"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", integer=True, positive=(name == "reps"), nonneg=True)
        if "init" in d:
            d["init"] = _num_list(d["init"], f"{where}.init", integer=True, nonneg=True)
        if "moments" in d:
            d["moments"] = _num_list(d["moments"], f"{where}.moments", integer=True, positive=True)
        for name in ("depleting_u", "exact"):
            if name in d and not isinstance(d[name], bool):
                raise ConfigError("must be true or false", f"{where}.{name}")
        out = cls(**d)
        if not out.theta > out.delta:
            raise ConfigError(f"need theta > delta, got theta={out.theta}, delta={out.delta}", f"{where}.delta")
        want = 3 if out.kind == "three" else 4
        if len(out.init) != want:
            raise ConfigError(f"{out.kind}-color urn needs {want} initial counts, got {len(out.init)}", f"{where}.init")
        if sum(out.init) == 0:
            raise ConfigError("initial urn is empty", f"{where}.init")
        return out

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["init"] = list(self.init)
        out["moments"] = list(self.moments)
        return out


VERIFY_SUITES = ("enumeration", "simple_model", "discrete_mc", "limit_identities", "scaled_nu",
                 "scaled_time", "convergence", "urn_dp_mc", "urn_moments")


@dataclass(frozen=True)
class VerifySection:
    suites: tuple = VERIFY_SUITES
    reps: int = 1_000_000
    urn_reps: int = 1_000_000
    urn_moment_reps: int = 20_000
    z_threshold: float = 4.0
    tv_bound: float = 0.005
    ks_bound_nu: float = 0.01
    ks_bound_t: float = 0.015
    m_max: int = 12

    @classmethod
    def from_dict(cls, d, where="verify"):
        _check_keys(d, {f.name for f in dataclasses.fields(cls)}, where)
        d = dict(d)
        if "suites" in d:
            if not isinstance(d["suites"], (list, tuple)) or not d["suites"]:
                raise ConfigError("must be a nonempty list", f"{where}.suites")
            for i, s in enumerate(d["suites"]):
                _choice(s, VERIFY_SUITES, f"{where}.suites[{i}]")
            d["suites"] = tuple(d["suites"])
        for name in ("reps", "urn_reps", "urn_moment_reps", "m_max"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", integer=True, positive=True)
        for name in ("z_threshold", "tv_bound", "ks_bound_nu", "ks_bound_t"):
            if name in d:
                d[name] = _num(d[name], f"{where}.{name}", positive=True)
        return cls(**d)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["suites"] = list(self.suites)
        return out


@dataclass(frozen=True)
class OutputSection:
    path: Optional[str] = None
    format: str = "csv"

    @classmethod
    def from_dict(cls, d, where="output"):
        _check_keys(d, {"path", "format"}, where)
        out = cls(**d)
        _choice(out.format, FORMATS, f"{where}.format")
        if out.path is not None and not isinstance(out.path, str):
            raise ConfigError("must be a string", f"{where}.path")
        return out


def _section_to_dict(sec):
    if hasattr(sec, "to_dict"):
        return sec.to_dict()
    out = dataclasses.asdict(sec)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}


@dataclass(frozen=True)
class RunConfig:
    model: Optional[ModelParams] = None
    f: Optional[DistributionSpec] = None
    g: DistributionSpec = field(default_factory=lambda: Exponential(1.0))
    seed: int = 0
    threads: Optional[int] = None
    simulate: SimulateSection = field(default_factory=SimulateSection)
    exact: ExactSection = field(default_factory=ExactSection)
    limit: LimitSection = field(default_factory=LimitSection)
    urn: UrnSection = field(default_factory=UrnSection)
    verify: VerifySection = field(default_factory=VerifySection)
    output: OutputSection = field(default_factory=OutputSection)

    _SECTIONS = {
        "simulate": SimulateSection, "exact": ExactSection, "limit": LimitSection,
        "urn": UrnSection, "verify": VerifySection, "output": OutputSection,
    }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if d is None:
            d = {}
        _check_keys(d, {"model", "distributions", "seed", "threads", *cls._SECTIONS}, "config")
        kwargs = {}
        if d.get("model") is not None:
            kwargs["model"] = ModelParams.from_config(d["model"], "model")
        dists = d.get("distributions") or {}
        _check_keys(dists, {"f", "g"}, "distributions")
        if "f" in dists:
            kwargs["f"] = distribution_from_dict(dists["f"], "distributions.f")
        if "g" in dists:
            kwargs["g"] = distribution_from_dict(dists["g"], "distributions.g")
        if "seed" in d:
            kwargs["seed"] = _num(d["seed"], "seed", integer=True, nonneg=True)
        if d.get("threads") is not None:
            kwargs["threads"] = _num(d["threads"], "threads", integer=True, positive=True)
        for name, sec in cls._SECTIONS.items():
            if d.get(name) is not None:
                kwargs[name] = sec.from_dict(d[name], name)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "threads": self.threads}
        if self.model is not None:
            out["model"] = self.model.to_config()
        dists = {"g": self.g.to_dict()}
        if self.f is not None:
            dists["f"] = self.f.to_dict()
        out["distributions"] = dists
        for name in self._SECTIONS:
            out[name] = _section_to_dict(getattr(self, name))
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def require_model(self):
        if self.model is None:
            raise ConfigError("required section is missing", "model")
        if self.f is None:
            raise ConfigError("required field is missing", "distributions.f")
        return self.model, self.f, self.g


def parse_yaml(text: str) -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", "config") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "config")
    return data


def load_config(path: str, overrides=()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = parse_yaml(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "config") from None
    return RunConfig.from_dict(apply_overrides(data, overrides))


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars or lists."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value", "--set")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key", "--set")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"cannot parse value {raw!r}", key) from None
        node = data
        for p in parts[:-1]:
            if node.get(p) is None:
                node[p] = {}
            if not isinstance(node[p], dict):
                raise ConfigError("cannot set a sub-key of a scalar", ".".join(parts))
            node = node[p]
        node[parts[-1]] = value
    return data
