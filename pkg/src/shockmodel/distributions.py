"""Parametric laws for shock magnitudes (F) and inter-arrival times (G).

Every law exposes ``cdf``, ``sf`` and ``quantile`` with the usual right-continuous
conventions, plus ``tail(x) = P(X >= x)``.  The shock model classifies shocks with
half-open intervals ``[gamma, beta)`` and ``[beta, threshold)``, so the exact
formulas need the left limit of the survival function; for continuous families
``tail`` and ``sf`` coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


class DistributionSpec:
    """Base class; subclasses are frozen dataclasses."""

    family: str = ""
    continuous: bool = True

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def tail(self, x):
        return self.sf(x)

    def logtail(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.tail(x))

    def quantile(self, p):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))

    def sample_sums(self, rng: np.random.Generator, counts, max_draws: int = 50_000_000):
        """Sums of ``counts[i]`` independent draws, for each ``i``."""
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        if total > max_draws:
            raise ValueError(
                f"summing {total} {self.family} draws exceeds max_draws={max_draws}; "
                "use an exponential inter-arrival law for very long histories"
            )
        out = np.zeros(counts.shape, dtype=float)
        nz = counts > 0
        if total:
            draws = self.sample(rng, total)
            starts = np.concatenate(([0], np.cumsum(counts[nz])[:-1]))
            out[nz] = np.add.reduceat(draws, starts)
        return out

    @property
    def upper_endpoint(self) -> float:
        return math.inf

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"family": self.family}
        for name, spec in self.__dataclass_fields__.items():
            if not spec.init:
                continue
            v = getattr(self, name)
            d[name] = list(v) if isinstance(v, tuple) else v
        return d


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"must be a positive finite number, got {value!r}", name)


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        _check_positive("rate", self.rate)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)[()]

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, np.exp(-self.rate * np.maximum(x, 0.0)), 1.0)[()]

    def logtail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -self.rate * x, 0.0)[()]

    def quantile(self, p):
        return -np.log1p(-np.asarray(p, dtype=float)) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def sample_sums(self, rng, counts, max_draws=None):
        counts = np.asarray(counts, dtype=np.int64)
        out = np.zeros(counts.shape, dtype=float)
        nz = counts > 0
        out[nz] = rng.gamma(counts[nz].astype(float), 1.0 / self.rate)
        return out

    @property
    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Pareto(DistributionSpec):
    """Pareto type I: ``P(X > x) = (scale / x) ** shape`` for ``x >= scale``."""

    scale: float = 1.0
    shape: float = 1.0
    family = "pareto"

    def __post_init__(self):
        _check_positive("scale", self.scale)
        _check_positive("shape", self.shape)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, self.scale)
        return np.where(x > self.scale, -np.expm1(self.shape * np.log(self.scale / safe)), 0.0)[()]

    def sf(self, x):
        return np.exp(self.logtail(x))

    def logtail(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, self.scale)
        return np.where(x > self.scale, self.shape * np.log(self.scale / safe), 0.0)[()]

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale * np.exp(-np.log1p(-p) / self.shape)

    @property
    def mean(self):
        return self.shape * self.scale / (self.shape - 1) if self.shape > 1 else math.inf


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    lo: float = 0.0
    hi: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ConfigError(f"need finite lo < hi, got ({self.lo}, {self.hi})", "lo")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)[()]

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((self.hi - x) / (self.hi - self.lo), 0.0, 1.0)[()]

    def quantile(self, p):
        return self.lo + np.asarray(p, dtype=float) * (self.hi - self.lo)

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    @property
    def upper_endpoint(self):
        return self.hi

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Weibull(DistributionSpec):
    scale: float = 1.0
    shape: float = 1.0
    family = "weibull"

    def __post_init__(self):
        _check_positive("scale", self.scale)
        _check_positive("shape", self.shape)

    def _z(self, x):
        return np.maximum(np.asarray(x, dtype=float), 0.0) / self.scale

    def cdf(self, x):
        return (-np.expm1(-self._z(x) ** self.shape))[()]

    def sf(self, x):
        return np.exp(-self._z(x) ** self.shape)[()]

    def logtail(self, x):
        return (-self._z(x) ** self.shape)[()]

    def quantile(self, p):
        return self.scale * (-np.log1p(-np.asarray(p, dtype=float))) ** (1.0 / self.shape)

    @property
    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


@dataclass(frozen=True)
class DiscreteFinite(DistributionSpec):
    """Finitely many atoms ``values[i]`` with masses ``probs[i]``."""

    values: tuple = ()
    probs: tuple = ()
    family = "discrete"
    continuous = False
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.ndim != 1 or values.size == 0 or values.shape != probs.shape:
            raise ConfigError("values and probs must be equal-length non-empty lists", "probs")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigError(f"probabilities must be nonnegative and sum to 1, got sum {probs.sum()!r}", "probs")
        if np.any(np.diff(values) <= 0):
            order = np.argsort(values)
            values, probs = values[order], probs[order]
            if np.any(np.diff(values) == 0):
                raise ConfigError("atoms must be distinct", "values")
        object.__setattr__(self, "values", tuple(values.tolist()))
        object.__setattr__(self, "probs", tuple(probs.tolist()))
        object.__setattr__(self, "_cum", np.cumsum(probs))

    @property
    def atoms(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def masses(self) -> np.ndarray:
        return np.asarray(self.probs)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x, side="right")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)[()]

    def sf(self, x):
        # summed from the top so small tails keep full precision
        x = np.asarray(x, dtype=float)
        above = self.masses[::-1].cumsum()[::-1]
        idx = np.searchsorted(self.atoms, x, side="right")
        return np.where(idx < len(self.values), above[np.minimum(idx, len(self.values) - 1)], 0.0)[()]

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        above = self.masses[::-1].cumsum()[::-1]
        idx = np.searchsorted(self.atoms, x, side="left")
        return np.where(idx < len(self.values), above[np.minimum(idx, len(self.values) - 1)], 0.0)[()]

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self._cum, p, side="left")
        return self.atoms[np.minimum(idx, len(self.values) - 1)][()]

    def sample(self, rng, size=None):
        return self.quantile(rng.random(size))

    @property
    def upper_endpoint(self):
        return self.values[-1]

    @property
    def mean(self):
        return float(np.dot(self.atoms, self.masses))

    def to_dict(self):
        return {"family": self.family, "values": list(self.values), "probs": list(self.probs)}


_FAMILIES = {
    "exponential": Exponential,
    "pareto": Pareto,
    "uniform": Uniform,
    "weibull": Weibull,
    "discrete": DiscreteFinite,
}


def distribution_from_dict(spec: dict, where: str = "distribution") -> DistributionSpec:
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("expected a mapping with a 'family' key", f"{where}.family")
    family = str(spec["family"]).lower()
    cls = _FAMILIES.get(family)
    if cls is None:
        raise ConfigError(f"unknown family {family!r}; choose from {sorted(_FAMILIES)}", f"{where}.family")
    kwargs = {k: v for k, v in spec.items() if k != "family"}
    allowed = {"values", "probs"} if cls is DiscreteFinite else set(cls.__dataclass_fields__)
    unknown = set(kwargs) - allowed
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {family}", f"{where}.{sorted(unknown)[0]}")
    if cls is DiscreteFinite:
        kwargs = {k: tuple(float(x) for x in v) for k, v in kwargs.items()}
    else:
        kwargs = {k: float(v) for k, v in kwargs.items()}
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(exc.reason, f"{where}.{exc.field}" if exc.field else where) from None
