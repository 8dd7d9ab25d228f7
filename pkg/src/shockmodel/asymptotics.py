"""Limit laws as the thresholds approach the upper endpoint of F.

The regime is described by ``g = lim sf(beta)/sf(gamma)`` and
``a(k, l) = lim sf(alpha_{k,l})/sf(beta)``.  This module evaluates the limit
pmf of ``(N+(nu), N-(nu))``, its joint tail with ``nu * sf(beta)``, the limit
survival ``1 - H(z)`` of ``nu * sf(beta)`` when ``a`` does not depend on ``k``,
and the matching law of the failure time.  :func:`regime_at` tabulates the
finite-``t`` ratios for convergence studies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln

from .distributions import DistributionSpec
from .errors import DegenerateModelError, QuadratureError
from .exact import SurvivalTriple
from .model import Increments, ModelParams, ZERO
from .specfun import gamma_p, gamma_q

ARule = Union[float, Callable[[int, int], float], "np.ndarray", list]


def _as_rule2(a) -> Callable[[int, int], float]:
    if callable(a):
        return a
    if np.ndim(a) == 0:
        value = float(a)
        return lambda k, l: value
    table = np.asarray(a, dtype=float)
    if table.ndim != 2:
        raise ValueError("a table must be two-dimensional, indexed [k, l]")

    def lookup(k, l):
        if not (0 <= k < table.shape[0] and 0 <= l < table.shape[1]):
            raise IndexError(f"a({k}, {l}) outside the supplied {table.shape} table")
        return float(table[k, l])

    return lookup


def _as_rule1(a) -> Callable[[int], float]:
    if callable(a):
        return a
    if np.ndim(a) == 0:
        value = float(a)
        return lambda h: value
    seq = np.asarray(a, dtype=float)

    def lookup(h):
        if not 0 <= h < seq.size:
            raise IndexError(f"a_{h} outside the supplied sequence of length {seq.size}")
        return float(seq[h])

    return lookup


@dataclass(frozen=True)
class LimitParams:
    """``g``, the rule ``a(k, l)`` and the mean inter-arrival time ``mu``."""

    g: float
    a: ARule = 0.5
    mu: float = 1.0
    a_at: Callable[[int, int], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.g <= 1.0:
            raise ValueError(f"g must lie in [0, 1], got {self.g}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        object.__setattr__(self, "a_at", _as_rule2(self.a))

    @property
    def interesting(self) -> bool:
        a00 = self.a_at(0, 0)
        return 0 < self.g < 1 and 0 < a00 < 1


def _log(x):
    return math.log(x) if x > 0 else -math.inf


def _log_weak(lp: LimitParams, k: int, l: int) -> float:
    total = 0.0
    for h in range(l):
        total += _log(1.0 - lp.a_at(k, h))
    return total


def limit_pmf(k: int, l: int, lp: LimitParams) -> float:
    """Limit of ``P{N+(nu) = k, N-(nu) = l}``: ``g (1-g)^k prod_{h<l}(1 - a(k,h)) a(k,l)``."""
    if k < 0 or l < 0:
        raise ValueError("need k, l >= 0")
    logp = _log(lp.g) + (k * _log(1.0 - lp.g) if k else 0.0) + _log_weak(lp, k, l) + _log(lp.a_at(k, l))
    return math.exp(logp)


def limit_tail_l0(z: float, k: int, lp: LimitParams) -> float:
    """Limit of ``P{nu >= z / sf(beta), N+(nu) = k, N-(nu) = 0}``.

    Equals ``Gamma(k+1, z/g) / k! * g (1-g)^k a(k, 0)``.
    """
    if lp.g <= 0:
        raise DegenerateModelError("limit_tail_l0 needs g > 0")
    if z < 0 or k < 0:
        raise ValueError("need z >= 0 and k >= 0")
    return gamma_q(k + 1, z / lp.g) * limit_pmf(k, 0, lp)


def _quad(func, lo, hi, epsabs, what):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info, *msg = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=0.0, limit=200, full_output=1)
    if err > epsabs:
        raise QuadratureError(f"{what}: achieved error {err:.3e} > requested {epsabs:.3e}", achieved=err)
    return value


def limit_tail(z: float, k: int, l: int, lp: LimitParams, quad_tol: float = 1e-9) -> float:
    """Limit of ``P{nu >= z / sf(beta), N+(nu) = k, N-(nu) = l}`` for ``l >= 1``.

    The double integral is written as ``E[exp(-c U Y); U > z]`` with
    ``U ~ Gamma(k+l+1)``, ``Y ~ Beta(k+1, l)`` and ``c = 1/g - 1`` (the
    ``1/(k!(l-1)!)`` factor is exactly the product of the two normalizers), and
    both integrals are evaluated by adaptive Gauss-Kronrod quadrature.  The
    outer range is cut at ``U`` where the Gamma tail falls below a tenth of the
    tolerance.
    """
    if not 0 < lp.g <= 1:
        raise DegenerateModelError(f"limit_tail needs g in (0, 1], got {lp.g}")
    if l < 1:
        raise ValueError("limit_tail needs l >= 1; use limit_tail_l0 for l = 0")
    if z < 0 or k < 0:
        raise ValueError("need z >= 0 and k >= 0")
    g = lp.g
    log_factor = (k * (_log(1.0 - g) - math.log(g)) if k else 0.0) + _log_weak(lp, k, l) + _log(lp.a_at(k, l))
    if log_factor == -math.inf:
        return 0.0
    factor = math.exp(log_factor)
    tol = quad_tol / max(factor, 1.0)
    shape = k + l + 1
    c = 1.0 / g - 1.0
    log_beta_norm = betaln(k + 1, l)
    log_gamma_norm = math.lgamma(shape)

    upper = max(z, float(shape))
    while gamma_q(shape, upper) > tol / 10:
        upper *= 1.5
    if z >= upper:
        return 0.0

    if c == 0.0:
        inner = None
    else:
        def inner(u):
            def integrand(y):
                if y <= 0.0 or y >= 1.0:
                    return 0.0 if (y <= 0.0 and k) or (y >= 1.0 and l > 1) else math.exp(-log_beta_norm - c * u * y)
                return math.exp(k * math.log(y) + (l - 1) * math.log1p(-y) - log_beta_norm - c * u * y)
            return _quad(integrand, 0.0, 1.0, tol / 4, "inner integral")

    def outer(u):
        if u <= 0.0:
            return 0.0
        dens = math.exp((shape - 1) * math.log(u) - u - log_gamma_norm)
        return dens if inner is None else dens * inner(u)

    # split at the Gamma mode so the adaptive rule sees the peak
    mode = float(shape - 1)
    pieces = [z, upper] if not z < mode < upper else [z, mode, upper]
    value = sum(_quad(outer, lo, hi, tol / 4 / (len(pieces) - 1), "outer integral")
                for lo, hi in zip(pieces, pieces[1:]))
    return factor * value


def _poisson_cutoff(z_max: float, tol: float) -> int:
    if z_max <= 0:
        return 0
    L = int(z_max)
    while gamma_p(L + 1, z_max) >= tol:
        L += max(1, L // 8)
    return L


def limit_survival_H(z, a_seq, tol: float = 1e-12, chunk: int = 50_000):
    """``1 - H(z) = sum_l z^l e^-z / l! prod_{h<l}(1 - a_h)``.

    The series is cut at the first ``L`` whose Poisson tail ``P{Pois(z) > L}``
    is below ``tol``.  ``z`` may be an array.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("z must be nonnegative")
    rule = _as_rule1(a_seq)
    z_max = float(z_arr.max()) if z_arr.size else 0.0
    L = _poisson_cutoff(z_max, tol)
    log_weak = np.zeros(L + 1)
    for l in range(1, L + 1):
        a_h = rule(l - 1)
        if not 0.0 <= a_h <= 1.0:
            raise ValueError(f"a_{l - 1}={a_h} outside [0, 1]")
        log_weak[l] = log_weak[l - 1] + _log(1.0 - a_h)
    ls = np.arange(L + 1)
    log_fact = gammaln(ls + 1)
    flat = z_arr.ravel()
    out = np.empty(flat.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, flat.size, chunk):
            zz = flat[s:s + chunk, None]
            log_z = np.where(ls == 0, 0.0, ls * np.log(zz))
            terms = np.exp(log_z - zz - log_fact + log_weak)
            out[s:s + chunk] = np.nan_to_num(terms, nan=0.0).sum(axis=1)
    return np.minimum(out, 1.0).reshape(z_arr.shape)[()]


def limit_survival_T(z, a_seq, mu: float, tol: float = 1e-12):
    """Limit survival of ``T_nu * sf(beta)``: ``1 - H(z / mu)``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return limit_survival_H(np.asarray(z, dtype=float) / mu, a_seq, tol)


# ---------------------------------------------------------------------------
# threshold schedules and finite-t regimes
# ---------------------------------------------------------------------------


def _const(v):
    return lambda t: v


@dataclass(frozen=True)
class Schedule:
    """Thresholds as functions of the regime parameter ``t``."""

    alpha: Callable[[float], float]
    beta: Callable[[float], float]
    gamma: Callable[[float], float]
    b: Callable[[float], Increments] = _const(ZERO)
    c: Callable[[float], Increments] = _const(ZERO)
    alpha_star_upper: Callable[[float], float] = _const(math.inf)
    alpha_star_lower: Callable[[float], float] = _const(None)
    name: str = "schedule"

    def params_at(self, t: float) -> ModelParams:
        return ModelParams(
            alpha=self.alpha(t), beta=self.beta(t), gamma=self.gamma(t),
            b=self.b(t), c=self.c(t),
            alpha_star_upper=self.alpha_star_upper(t), alpha_star_lower=self.alpha_star_lower(t),
        )


def exponential_schedule(g: float = 0.5, a: float = 0.5, b: Increments = ZERO, c: Increments = ZERO,
                         gamma_offset: Callable[[float], float] = _const(0.0), name: str = "exponential"):
    """Schedule for a unit-rate exponential F with ``sf(beta(t)) = 1/t``.

    ``gamma`` sits ``log(1/g)`` below ``beta`` (minus ``gamma_offset(t)``) and
    ``alpha`` sits ``log(1/a)`` above it, so by memorylessness the ratios are
    exactly ``g`` and ``a * exp(c_l - b_k)`` when the offset is zero.
    """
    return Schedule(
        alpha=lambda t: math.log(t) + math.log(1.0 / a),
        beta=lambda t: math.log(t),
        gamma=lambda t: math.log(t) - math.log(1.0 / g) - gamma_offset(t),
        b=_const(b), c=_const(c), name=name,
    )


@dataclass
class Regime:
    t: float
    g_t: float
    a_table: np.ndarray
    diagnostics: dict

    def limit_params(self, mu: float = 1.0) -> LimitParams:
        return LimitParams(self.g_t, self.a_table, mu)

    def survival_triple(self) -> SurvivalTriple:
        """Survival values implied by the ratios, for the exact formulas (grid only)."""
        s_beta = self.diagnostics["sf_beta"]
        s_gamma = math.exp(self.diagnostics["log_sf_gamma"])
        table = self.a_table

        def s_alpha(k, l):
            if not (0 <= k < table.shape[0] and 0 <= l < table.shape[1]):
                raise IndexError(f"threshold ({k}, {l}) outside the tabulated regime grid {table.shape}")
            return float(table[k, l]) * s_beta

        return SurvivalTriple(s_gamma, s_beta, s_alpha)


def regime_at(f: DistributionSpec, schedule: Schedule, t: float, k_max: int = 20, l_max: int = 20) -> Regime:
    """Finite-``t`` ratios ``sf(beta)/sf(gamma)`` and ``sf(alpha_{k,l})/sf(beta)`` (log-space)."""
    params = schedule.params_at(t)
    log_g = float(f.logtail(params.gamma))
    log_b = float(f.logtail(params.beta))
    if log_g == -math.inf:
        raise DegenerateModelError(f"sf(gamma(t)) = 0 at t={t}")
    if log_b == -math.inf:
        raise DegenerateModelError(f"sf(beta(t)) = 0 at t={t}")
    ks, ls = np.meshgrid(np.arange(k_max + 1), np.arange(l_max + 1), indexing="ij")
    thr = params.thresholds(ks, ls)
    a_table = np.exp(np.asarray(f.logtail(thr), dtype=float) - log_b)
    g_t = math.exp(log_b - log_g)
    diagnostics = {
        "log_sf_gamma": log_g,
        "log_sf_beta": log_b,
        "sf_beta": math.exp(log_b),
        "interesting": bool(0 < g_t < 1 and 0 < a_table[0, 0] < 1),
    }
    return Regime(t, g_t, a_table, diagnostics)
