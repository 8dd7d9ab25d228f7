"""Exact finite-sample laws of the failure index and the shock counts.

All functions consume a :class:`SurvivalTriple` rather than a distribution, so
arbitrary survival values (including those of a discrete law) can be fed in.
Survival here means ``P(X >= x)``, which matches the half-open classification
intervals; ``F(x) = 1 - survival`` is the mass strictly below ``x``.

Products of many probabilities are accumulated in log space and binomial
coefficients come from ``lgamma``, so ``m`` in the tens of thousands does not
underflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .distributions import DistributionSpec
from .errors import ConfigError, DegenerateModelError
from .model import ModelParams


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _logpow(base: float, n: int) -> float:
    # 0**0 == 1
    if n == 0:
        return 0.0
    return n * _log(base)


def _logbinom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@dataclass(frozen=True)
class SurvivalTriple:
    """Survival probabilities at ``gamma``, ``beta`` and at every clipped threshold.

    ``s_alpha(k, l)`` must not exceed ``s_beta``; it is checked whenever it is
    evaluated.
    """

    s_gamma: float
    s_beta: float
    s_alpha: Callable[[int, int], float]

    def __post_init__(self):
        if not (0.0 <= self.s_beta <= self.s_gamma <= 1.0):
            raise ConfigError(
                f"need 0 <= s_beta <= s_gamma <= 1, got s_gamma={self.s_gamma}, s_beta={self.s_beta}",
                "survival",
            )
        object.__setattr__(self, "s_alpha", lru_cache(maxsize=None)(self.s_alpha))

    @property
    def f_gamma(self) -> float:
        return 1.0 - self.s_gamma

    @property
    def f_beta(self) -> float:
        return 1.0 - self.s_beta

    def alpha(self, k: int, l: int) -> float:
        v = float(self.s_alpha(int(k), int(l)))
        if not (0.0 <= v <= self.s_beta * (1 + 1e-15)):
            raise ConfigError(f"s_alpha({k}, {l})={v} outside [0, s_beta={self.s_beta}]", "survival")
        return min(v, self.s_beta)

    def validate(self, k_max: int, l_max: int) -> None:
        """Check the monotonicity invariants on the grid ``[0, k_max] x [0, l_max]``."""
        tab = np.array([[self.alpha(k, l) for l in range(l_max + 1)] for k in range(k_max + 1)])
        if np.any(np.diff(tab, axis=0) > 1e-15):
            raise ConfigError("s_alpha must be nonincreasing in k", "survival")
        if np.any(np.diff(tab, axis=1) < -1e-15):
            raise ConfigError("s_alpha must be nondecreasing in l", "survival")

    @classmethod
    def from_model(cls, params: ModelParams, f: DistributionSpec) -> "SurvivalTriple":
        def s_alpha(k, l):
            return float(f.tail(params.thresholds(k, l)))

        return cls(float(f.tail(params.gamma)), float(f.tail(params.beta)), s_alpha)

    @classmethod
    def from_table(cls, s_gamma, s_beta, table: dict) -> "SurvivalTriple":
        """Survival values given explicitly for a finite set of ``(k, l)``."""
        table = dict(table)

        def s_alpha(k, l):
            try:
                return table[(k, l)]
            except KeyError:
                raise IndexError(f"no survival value for threshold ({k}, {l})") from None

        return cls(s_gamma, s_beta, s_alpha)


def _log_weak_product(st: SurvivalTriple, k: int, l: int) -> float:
    """``sum_{h=1}^{l} log(s_beta - s_alpha(k, h-1))``."""
    total = 0.0
    for h in range(l):
        total += _log(st.s_beta - st.alpha(k, h))
        if total == -math.inf:
            break
    return total


def _log_prefix(st: SurvivalTriple, n: int, k: int) -> float:
    """log P(first ``n`` shocks all below beta, exactly ``k`` of them in [gamma, beta))."""
    return (_logbinom(n, k) + _logpow(st.f_gamma, n - k)
            + _logpow(st.s_gamma - st.s_beta, k))


def _check_indices(**kw):
    for name, v in kw.items():
        if int(v) != v:
            raise ConfigError(f"must be an integer, got {v!r}", name)


def joint_survival(m: int, k: int, l: int, j: int, st: SurvivalTriple) -> float:
    """``P{nu > m, N+(m) = k, N-(m+1) = l, W = j}``.

    For ``l >= 1`` the support is ``k < j`` and ``m >= j + l - 1``.  For ``l = 0``
    no shock among the first ``m`` reaches beta, so the probability vanishes
    unless ``j > m``.
    """
    _check_indices(m=m, k=k, l=l, j=j)
    if m < 1 or k < 0 or l < 0 or j < 1:
        raise ConfigError("need m >= 1, k >= 0, l >= 0, j >= 1", "m")
    if l == 0:
        if j <= m or k > m - 1:
            return 0.0
        logp = (_log_prefix(st, m - 1, k) + _logpow(st.f_beta, j - m) + _log(st.s_beta))
        return math.exp(logp)
    if k >= j or m < j + l - 1:
        return 0.0
    logp = (_log_prefix(st, j - 1, k)
            + _logbinom(m - j, l - 1) + _logpow(st.f_beta, m - j - l + 1)
            + _log_weak_product(st, k, l))
    return math.exp(logp)


def joint_pmf(m: int, k: int, l: int, j: int, st: SurvivalTriple) -> float:
    """``P{nu = m, N+(m) = k, N-(m) = l, W = j}``; support ``k < j``, ``m >= j + l``
    (for ``l = 0`` the fatal shock is the first one reaching beta, so ``j = m``)."""
    _check_indices(m=m, k=k, l=l, j=j)
    if m < 1 or k < 0 or l < 0 or j < 1:
        raise ConfigError("need m >= 1, k >= 0, l >= 0, j >= 1", "m")
    if k >= j:
        return 0.0
    if l == 0:
        if j != m:
            return 0.0
        return math.exp(_log_prefix(st, m - 1, k) + _log(st.alpha(k, 0)))
    if m < j + l:
        return 0.0
    logp = (_log_prefix(st, j - 1, k)
            + _logbinom(m - j - 1, l - 1) + _logpow(st.f_beta, m - j - l)
            + _log_weak_product(st, k, l) + _log(st.alpha(k, l)))
    return math.exp(logp)


def pmf_nplus_nminus(k: int, l: int, st: SurvivalTriple) -> float:
    """``P{N+(nu) = k, N-(nu) = l}`` in closed form (geometric-type products)."""
    _check_indices(k=k, l=l)
    if k < 0 or l < 0:
        raise ConfigError("need k, l >= 0", "k")
    if st.s_gamma <= 0.0:
        raise DegenerateModelError("survival at gamma is 0: no shock can ever matter")
    if st.s_beta <= 0.0:
        return 0.0
    logp = _logpow(1.0 - st.s_beta / st.s_gamma, k)
    for h in range(l):
        logp += _log(1.0 - st.alpha(k, h) / st.s_beta)
    logp += _log(st.alpha(k, l) / st.s_gamma)
    return math.exp(logp)


def nplus_nminus_table(st: SurvivalTriple, tol: float = 1e-12, k_cap: int = 100_000, l_cap: int = 100_000):
    """Table of ``pmf_nplus_nminus`` truncated where the remaining mass is below ``tol``.

    ``P{N+(nu) >= K} = (1 - s_beta/s_gamma)**K`` exactly; for each ``k`` the
    weakening tail beyond ``L`` is at most ``prod_{h<L}(1 - s_alpha(k,h)/s_beta)``
    because ``s_alpha`` is nondecreasing in ``l``.  Each truncation takes half of
    ``tol``.  Returns ``(dict {(k, l): p}, tail_bound)``.
    """
    if st.s_gamma <= 0.0:
        raise DegenerateModelError("survival at gamma is 0: no shock can ever matter")
    if st.s_beta <= 0.0:
        return {}, 1.0
    q = 1.0 - st.s_beta / st.s_gamma
    K = 0
    while q ** K >= tol / 2 and K < k_cap:
        K += 1
    table = {}
    bound = q ** K
    for k in range(K):
        weight = q ** k
        remaining = 1.0
        for l in range(l_cap):
            table[(k, l)] = pmf_nplus_nminus(k, l, st)
            if st.s_beta <= 0:
                break
            remaining *= 1.0 - st.alpha(k, l) / st.s_beta
            if weight * remaining < tol / 2 / K:
                break
        bound += weight * remaining
    return table, bound


def survival_nu(m: int, st: SurvivalTriple) -> float:
    """``P{nu > m}``: all of the first ``m`` shocks below beta, or at least one
    weakening shock and no fatal one.  Cost is O(m**3)."""
    _check_indices(m=m)
    if m < 0:
        raise ConfigError("need m >= 0", "m")
    if m == 0:
        return 1.0
    total = math.exp(_logpow(st.f_beta, m))
    if st.s_beta <= 0.0:
        return total
    lf_gamma = _log(st.f_gamma)
    lf_beta = _log(st.f_beta)
    l_delta = _log(st.s_gamma - st.s_beta)
    j = np.arange(1, m + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        total += _survival_weakened(m, st, j, lf_gamma, lf_beta, l_delta)
    return min(total, 1.0)


def _survival_weakened(m, st, j, lf_gamma, lf_beta, l_delta):
    total = 0.0
    for k in range(m):
        jk = j[j >= k + 1]
        # log P(first j-1 shocks below beta with k strengthening)
        a = (gammaln(jk) - math.lgamma(k + 1) - gammaln(jk - k)
             + np.where(jk - 1 - k > 0, (jk - 1 - k) * lf_gamma, 0.0)
             + (k * l_delta if k else 0.0))
        if not np.any(np.isfinite(a)):
            continue
        log_weak = 0.0
        for l in range(1, m - k + 1):
            log_weak += _log(st.s_beta - st.alpha(k, l - 1))
            if log_weak == -math.inf:
                break
            sel = jk <= m - l + 1
            if not np.any(sel):
                break
            r = m - jk[sel]
            bl = (gammaln(r + 1) - math.lgamma(l) - gammaln(r - l + 2)
                  + np.where(r - l + 1 > 0, (r - l + 1) * lf_beta, 0.0))
            total += float(np.exp(a[sel] + bl + log_weak).sum())
    return total


def pmf_nu(m: int, st: SurvivalTriple) -> float:
    """``P{nu = m}`` as a difference of survivals; tiny negative rounding is clamped."""
    _check_indices(m=m)
    if m < 1:
        raise ConfigError("need m >= 1", "m")
    p = survival_nu(m - 1, st) - survival_nu(m, st)
    if p < 0:
        if p < -1e-12:
            warnings.warn(f"pmf_nu({m}) = {p:.3e} < 0 beyond rounding", RuntimeWarning, stacklevel=2)
        p = 0.0
    return p


def survival_nu_table(m_max: int, st: SurvivalTriple) -> np.ndarray:
    """``[P{nu > m} for m in 0..m_max]``."""
    return np.array([survival_nu(m, st) for m in range(m_max + 1)])
