"""Shock-model parameterization, shock classification and single-history simulation.

A shock ``x`` arriving while ``k`` strengthening and ``l`` weakening shocks have
been recorded is classified against the boundaries ``gamma <= beta`` and the
current critical threshold ``alpha_{k,l}``:

* ``x < gamma``: no impact;
* ``gamma <= x < beta``: strengthening, unless a shock ``>= beta`` has already
  occurred, in which case it is inert;
* ``beta <= x < alpha_{k,l}``: weakening (harmful but not fatal);
* ``x >= alpha_{k,l}``: fatal.

The threshold is ``max(min(alpha + b_k, upper) - c_l, lower)``: the upper load
limit caps the strengthened level and the lower load limit (at least ``beta``)
floors the weakened one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .distributions import DistributionSpec
from .errors import ConfigError, IncrementRangeError


# ---------------------------------------------------------------------------
# increment sequences b_k and c_l
# ---------------------------------------------------------------------------


class Increments:
    """Nondecreasing sequence ``s_0 = 0 <= s_1 <= ...`` indexable by int or int array."""

    def __getitem__(self, k):
        k = np.asarray(k)
        if np.any(k < 0):
            raise IncrementRangeError("increment index must be nonnegative")
        return self._values(k)

    def _values(self, k):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteIncrements(Increments):
    """Explicit list; indexing past its end is an error, never an extrapolation."""

    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if not v or v[0] != 0.0:
            raise ConfigError("increment sequence must start with 0", "b/c")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ConfigError("increment sequence must be nondecreasing", "b/c")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def _values(self, k):
        if np.any(k >= len(self.values)):
            raise IncrementRangeError(
                f"index {int(np.max(k))} beyond finite increment sequence of length {len(self.values)}"
            )
        return np.asarray(self.values)[k][()]

    def to_config(self):
        return list(self.values)


@dataclass(frozen=True)
class AffineIncrements(Increments):
    """``s_k = min(k * step, cap)``."""

    step: float
    cap: float = math.inf

    def __post_init__(self):
        if not self.step >= 0 or not self.cap >= 0:
            raise ConfigError("affine increments need step >= 0 and cap >= 0", "step")

    def _values(self, k):
        return np.minimum(np.asarray(k, dtype=float) * self.step, self.cap)[()]

    def to_config(self):
        return {"rule": "affine", "step": self.step, "cap": self.cap}


@dataclass(frozen=True)
class GeometricIncrements(Increments):
    """``s_k = limit * (1 - ratio**k)``: increments approaching ``limit`` geometrically."""

    limit: float
    ratio: float

    def __post_init__(self):
        if not self.limit >= 0 or not 0 <= self.ratio < 1:
            raise ConfigError("geometric increments need limit >= 0 and 0 <= ratio < 1", "ratio")

    def _values(self, k):
        return (self.limit * -np.expm1(np.asarray(k, dtype=float) * math.log(self.ratio))
                if self.ratio > 0 else self.limit * (np.asarray(k) > 0))[()]

    def to_config(self):
        return {"rule": "geometric", "limit": self.limit, "ratio": self.ratio}


ZERO = AffineIncrements(0.0)


def increments_from_config(spec, where="b") -> Increments:
    if isinstance(spec, Increments):
        return spec
    if spec is None:
        return ZERO
    if isinstance(spec, (list, tuple)):
        try:
            return FiniteIncrements(tuple(spec))
        except ConfigError as exc:
            raise ConfigError(exc.reason, where) from None
    if isinstance(spec, dict):
        rule = spec.get("rule")
        kwargs = {k: float(v) for k, v in spec.items() if k != "rule"}
        try:
            if rule == "affine":
                return AffineIncrements(**kwargs)
            if rule == "geometric":
                return GeometricIncrements(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc), where) from None
        except ConfigError as exc:
            raise ConfigError(exc.reason, where) from None
        raise ConfigError(f"unknown increment rule {rule!r} (use 'affine' or 'geometric')", f"{where}.rule")
    raise ConfigError("increments must be a list or a rule mapping", where)


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    gamma: float
    b: Increments = ZERO
    c: Increments = ZERO
    alpha_star_upper: float = math.inf
    alpha_star_lower: Optional[float] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"must be a finite number, got {v!r}", name) from None
            if not math.isfinite(v):
                raise ConfigError(f"must be a finite number, got {v!r}", name)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "b", increments_from_config(self.b, "b"))
        object.__setattr__(self, "c", increments_from_config(self.c, "c"))
        if not self.gamma <= self.beta:
            raise ConfigError(f"need gamma <= beta, got gamma={self.gamma}, beta={self.beta}", "gamma")
        if not self.beta < self.alpha:
            raise ConfigError(f"need beta < alpha, got beta={self.beta}, alpha={self.alpha}", "beta")
        lower = self.beta if self.alpha_star_lower is None else float(self.alpha_star_lower)
        if lower < self.beta:
            raise ConfigError(f"lower load limit must be >= beta={self.beta}, got {lower}", "alpha_star_lower")
        if lower > self.alpha:
            raise ConfigError(f"lower load limit must be <= alpha={self.alpha}, got {lower}", "alpha_star_lower")
        if not self.alpha_star_upper >= self.alpha:
            raise ConfigError(f"upper load limit must be >= alpha={self.alpha}", "alpha_star_upper")
        object.__setattr__(self, "alpha_star_lower", lower)

    def thresholds(self, k, l):
        """Vectorized critical threshold ``alpha_{k,l}`` after cap clipping."""
        raised = np.minimum(self.alpha + self.b[k], self.alpha_star_upper)
        return np.maximum(raised - self.c[l], self.alpha_star_lower)[()]

    def to_config(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "b": self.b.to_config(),
            "c": self.c.to_config(),
            "alpha_star_upper": self.alpha_star_upper,
            "alpha_star_lower": self.alpha_star_lower,
        }

    @classmethod
    def from_config(cls, d: dict, where: str = "model") -> "ModelParams":
        if not isinstance(d, dict):
            raise ConfigError("expected a mapping", where)
        known = {"alpha", "beta", "gamma", "b", "c", "alpha_star_upper", "alpha_star_lower"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown key(s) {sorted(unknown)}", f"{where}.{sorted(unknown)[0]}")
        for name in ("alpha", "beta", "gamma"):
            if name not in d:
                raise ConfigError("required field is missing", f"{where}.{name}")
        kwargs = dict(d)
        for name in ("alpha", "beta", "gamma", "alpha_star_upper", "alpha_star_lower"):
            if kwargs.get(name) is not None:
                try:
                    kwargs[name] = float(kwargs[name])
                except (TypeError, ValueError):
                    raise ConfigError(f"must be a number, got {kwargs[name]!r}", f"{where}.{name}") from None
        try:
            return cls(**kwargs)
        except ConfigError as exc:
            raise ConfigError(exc.reason, f"{where}.{exc.field}") from None


def threshold_at(params: ModelParams, k: int, l: int) -> float:
    """Critical threshold after ``k`` strengthening and ``l`` weakening shocks."""
    return float(params.thresholds(k, l))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


class ShockEffect(enum.IntEnum):
    NO_IMPACT = 0
    STRENGTHEN = 1
    WEAKEN = 2
    FATAL = 3


def classify_shock(x: float, n_plus: int, n_minus: int, w_seen: bool, params: ModelParams) -> ShockEffect:
    if x < params.gamma:
        return ShockEffect.NO_IMPACT
    if x < params.beta:
        return ShockEffect.NO_IMPACT if w_seen else ShockEffect.STRENGTHEN
    if x < threshold_at(params, n_plus, n_minus):
        return ShockEffect.WEAKEN
    return ShockEffect.FATAL


def classify_array(x, n_plus, n_minus, w_seen, params: ModelParams):
    """Vectorized :func:`classify_shock`; returns an int8 array of ShockEffect codes."""
    x = np.asarray(x, dtype=float)
    thr = params.thresholds(n_plus, n_minus)
    out = np.zeros(x.shape, dtype=np.int8)
    mid = (x >= params.gamma) & (x < params.beta)
    out[mid & ~np.asarray(w_seen, dtype=bool)] = ShockEffect.STRENGTHEN
    out[(x >= params.beta) & (x < thr)] = ShockEffect.WEAKEN
    out[x >= thr] = ShockEffect.FATAL
    return out


# ---------------------------------------------------------------------------
# realizations
# ---------------------------------------------------------------------------


class TraceEntry(NamedTuple):
    x: float
    y: float
    effect: ShockEffect
    threshold: float


@dataclass(frozen=True)
class ShockRealization:
    nu: int
    w: Optional[int]
    n_plus: int
    n_minus: int
    t_nu: float
    trace: Optional[list] = field(default=None, compare=False)


@dataclass(frozen=True)
class Censored:
    """No fatal shock within ``max_shocks``; counts are those reached at censoring."""

    max_shocks: int
    w: Optional[int] = None
    n_plus: int = 0
    n_minus: int = 0


class TraceStats(NamedTuple):
    nu: Optional[int]
    w: Optional[int]
    n_plus: int
    n_minus: int


def stats_from_trace(xs: Sequence[float], params: ModelParams) -> TraceStats:
    """Replay shock magnitudes and return ``(nu, W, N+, N-)``.

    Replay stops at the first fatal shock.  ``nu`` (resp. ``W``) is None when no
    fatal (resp. no shock ``>= beta``) occurs in ``xs``.
    """
    n_plus = n_minus = 0
    w = None
    for i, x in enumerate(xs, start=1):
        effect = classify_shock(x, n_plus, n_minus, w is not None, params)
        if x >= params.beta and w is None:
            w = i
        if effect is ShockEffect.STRENGTHEN:
            n_plus += 1
        elif effect is ShockEffect.WEAKEN:
            n_minus += 1
        elif effect is ShockEffect.FATAL:
            return TraceStats(i, w, n_plus, n_minus)
    return TraceStats(None, w, n_plus, n_minus)


def simulate_realization(
    params: ModelParams,
    f: DistributionSpec,
    g: DistributionSpec,
    rng: np.random.Generator,
    max_shocks: int = 10_000_000,
    keep_trace: bool = False,
    chunk: int = 1024,
):
    """Simulate one shock history shock by shock until the first fatal shock.

    Returns a :class:`ShockRealization`, or :class:`Censored` when no fatal shock
    occurs within ``max_shocks``.
    """
    if max_shocks < 1:
        raise ConfigError("max_shocks must be >= 1", "max_shocks")
    n_plus = n_minus = 0
    w = None
    t = 0.0
    trace = [] if keep_trace else None
    i = 0
    while i < max_shocks:
        size = min(chunk, max_shocks - i)
        xs = f.sample(rng, size)
        ys = g.sample(rng, size)
        for x, y in zip(xs.tolist(), ys.tolist()):
            i += 1
            t += y
            thr = threshold_at(params, n_plus, n_minus)
            effect = classify_shock(x, n_plus, n_minus, w is not None, params)
            if keep_trace:
                trace.append(TraceEntry(x, y, effect, thr))
            if x >= params.beta and w is None:
                w = i
            if effect is ShockEffect.STRENGTHEN:
                n_plus += 1
            elif effect is ShockEffect.WEAKEN:
                n_minus += 1
            elif effect is ShockEffect.FATAL:
                return ShockRealization(i, w, n_plus, n_minus, t, trace)
    return Censored(max_shocks, w, n_plus, n_minus)
