"""Cross-checks between exact formulas, simulation and limit laws.

Every comparison produces a :class:`ComparisonReport` whose serialized form
depends only on the inputs and the seed.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from . import exact
from .asymptotics import LimitParams, Schedule, limit_pmf, limit_survival_H, regime_at
from .distributions import DistributionSpec
from .errors import ConfigError, InternalConsistencyError
from .exact import SurvivalTriple
from .model import ModelParams
from .simulate import simulate_batch

Z_THRESHOLD = 4.0
TV_BOUND = 0.005
KS_BOUND = 0.015
POOL_BELOW = 1e-3
MIN_REPS = 10_000


@dataclass
class Cell:
    label: str
    analytic: float
    empirical: float
    stderr: float
    z: float


@dataclass
class ComparisonReport:
    name: str
    cells: list
    tv: float
    max_abs_z: float
    passed: bool
    seed: int
    n: int
    z_threshold: float = Z_THRESHOLD
    tv_bound: float = TV_BOUND
    censored: int = 0
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        head = (f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: n={self.n} seed={self.seed} "
                f"TV={self.tv:.6g} (bound {self.tv_bound:g}) max|z|={self.max_abs_z:.4g} "
                f"(threshold {self.z_threshold:g}) censored={self.censored}")
        lines = [head]
        lines += [f"    note: {n}" for n in self.notes]
        for key in sorted(self.extra):
            lines.append(f"    {key}: {self.extra[key]}")
        for c in self.cells:
            lines.append(f"    {c.label:>24s}  analytic={c.analytic:.8g}  empirical={c.empirical:.8g}  "
                         f"se={c.stderr:.3g}  z={c.z:+.3f}")
        return "\n".join(lines)


def _check_prob(label, p):
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise InternalConsistencyError(f"analytic value for {label} is {p}, outside [0, 1]")


def binomial_cells(analytic: dict, counts: dict, n: int, pool_below: float = POOL_BELOW):
    """z-scored cells for a categorical comparison.

    ``analytic`` maps labels to probabilities and ``counts`` maps the same labels
    to observed counts out of ``n``.  Labels with analytic mass below
    ``pool_below`` are merged into one pooled cell before scoring.  Returns
    ``(cells, tv)``, where the total variation distance is taken over the
    unpooled labels.
    """
    labels = list(analytic)
    for lab in labels:
        _check_prob(lab, analytic[lab])
    tv = 0.5 * sum(abs(analytic[lab] - counts.get(lab, 0) / n) for lab in labels)
    extra = sum(c for lab, c in counts.items() if lab not in analytic)
    tv += 0.5 * extra / n
    cells = []
    pooled_p, pooled_c = 0.0, extra
    for lab in labels:
        p = analytic[lab]
        if p < pool_below:
            pooled_p += p
            pooled_c += counts.get(lab, 0)
            continue
        cells.append(_cell(str(lab), p, counts.get(lab, 0), n))
    if pooled_p > 0 or pooled_c > 0:
        cells.append(_cell("pooled", min(pooled_p, 1.0), pooled_c, n))
    return cells, tv


def _cell(label, p, count, n):
    emp = count / n
    se = math.sqrt(p * (1 - p) / n)
    if se > 0:
        z = (emp - p) / se
    else:
        z = 0.0 if emp == p else math.inf
    return Cell(label, float(p), float(emp), float(se), float(z))


def _finish(name, cells, tv, n, seed, z_threshold, tv_bound, censored=0, notes=(), extra=None):
    max_z = max((abs(c.z) for c in cells), default=0.0)
    passed = bool(max_z <= z_threshold and tv <= tv_bound)
    return ComparisonReport(name, cells, float(tv), float(max_z), passed, int(seed), int(n),
                            float(z_threshold), float(tv_bound), int(censored), list(notes), dict(extra or {}))


def compare_exact_vs_mc(params: ModelParams, f: DistributionSpec, g: DistributionSpec, reps: int, seed: int,
                        target: str = "nu", m_max: int | None = None, grid=None,
                        z_threshold: float = Z_THRESHOLD, tv_bound: float = TV_BOUND,
                        method: str = "skip", max_shocks: int = 10_000_000, workers=None,
                        name: str | None = None) -> ComparisonReport:
    """Simulate and compare against the exact laws.

    ``target`` selects the statistic: ``"nu"`` (cells ``nu = 1..m_max`` plus the
    tail ``nu > m_max``), ``"nplus_nminus"`` (the ``(N+(nu), N-(nu))`` law,
    truncated at mass 1e-12) or ``"joint"`` (the ``(m, k, l, j)`` cells in
    ``grid`` plus everything else).
    """
    if reps < MIN_REPS:
        raise ConfigError(f"need at least {MIN_REPS} replicates, got {reps}", "reps")
    name = name or f"exact-vs-mc:{target}"
    batch = simulate_batch(params, f, g, seed, reps, max_shocks=max_shocks, method=method,
                           workers=workers, with_time=False)
    if batch.n_censored == reps:
        return ComparisonReport(name, [], math.nan, math.nan, False, int(seed), int(reps),
                                z_threshold, tv_bound, reps, ["all runs censored: no fatal shock within max_shocks"])
    st = SurvivalTriple.from_model(params, f)
    notes = []
    if target == "nu":
        if m_max is None:
            m_max = 1
            while exact.survival_nu(m_max, st) > 1e-6 and m_max < 2000:
                m_max *= 2
        analytic = {f"nu={m}": exact.pmf_nu(m, st) for m in range(1, m_max + 1)}
        analytic[f"nu>{m_max}"] = exact.survival_nu(m_max, st)
        vals, cnts = batch.histogram("nu")
        counts = {}
        for v, c in zip(vals, cnts):
            key = f"nu={v}" if v <= m_max else f"nu>{m_max}"
            counts[key] = counts.get(key, 0) + int(c)
        counts[f"nu>{m_max}"] = counts.get(f"nu>{m_max}", 0) + batch.n_censored
        n_total = reps
    elif target == "nplus_nminus":
        table, bound = exact.nplus_nminus_table(st)
        analytic = {f"k={k},l={l}": p for (k, l), p in table.items()}
        counts = {f"k={k},l={l}": c for (k, l), c in batch.joint_counts("n_plus", "n_minus").items()}
        n_total = reps - batch.n_censored
        notes.append(f"truncation mass bound {bound:.3g}")
    elif target == "joint":
        if not grid:
            raise ConfigError("joint comparison needs a grid of (m, k, l, j) cells", "grid")
        analytic = {}
        for m, k, l, j in grid:
            analytic[f"m={m},k={k},l={l},j={j}"] = exact.joint_pmf(m, k, l, j, st)
        rest = 1.0 - sum(analytic.values())
        observed = batch.joint_counts("nu", "n_plus", "n_minus", "w")
        counts = {f"m={m},k={k},l={l},j={j}": c for (m, k, l, j), c in observed.items()
                  if f"m={m},k={k},l={l},j={j}" in analytic}
        analytic["other"] = max(rest, 0.0)
        counts["other"] = reps - sum(counts.values())
        n_total = reps
    else:
        raise ConfigError(f"unknown target {target!r}", "target")
    if batch.n_censored:
        notes.append(f"{batch.n_censored} censored runs")
    cells, tv = binomial_cells(analytic, counts, n_total)
    return _finish(name, cells, tv, n_total, seed, z_threshold, tv_bound, batch.n_censored, notes)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov against a continuous limit
# ---------------------------------------------------------------------------


def ks_statistic(sample, survival) -> float:
    """``sup |F_n - F|`` for a sample against a continuous law given by its survival function.

    Ties are handled by comparing ``F`` with both one-sided limits of the
    empirical cdf at every distinct value.
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ConfigError("empty sample", "sample")
    values, counts = np.unique(x, return_counts=True)
    right = np.cumsum(counts) / x.size
    left = right - counts / x.size
    cdf = 1.0 - np.asarray(survival(values), dtype=float)
    return float(max(np.max(np.abs(right - cdf)), np.max(np.abs(left - cdf))))


@dataclass
class KSReport:
    name: str
    statistic: float
    bound: float
    passed: bool
    n: int
    seed: int
    censored: int = 0
    grid: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: n={self.n} seed={self.seed} "
                 f"KS={self.statistic:.6g} (bound {self.bound:g}) censored={self.censored}"]
        for z, emp, lim in self.grid:
            lines.append(f"    z={z:<8g} empirical={emp:.6f} limit={lim:.6f}")
        return "\n".join(lines)


def scaled_survival_check(params: ModelParams, f: DistributionSpec, g: DistributionSpec, reps: int, seed: int,
                          a_seq, which: str = "nu", mu: float = 1.0, bound: float = KS_BOUND,
                          z_grid=(0.1, 0.5, 1.0, 2.0, 5.0), workers=None, name: str | None = None) -> KSReport:
    """KS distance between ``nu * sf(beta)`` (or ``T_nu * sf(beta)``) and the limit ``1 - H(z / mu)``."""
    if which not in ("nu", "t"):
        raise ConfigError(f"which must be 'nu' or 't', got {which!r}", "which")
    batch = simulate_batch(params, f, g, seed, reps, workers=workers, with_time=(which == "t"))
    s_beta = float(f.tail(params.beta))
    done = ~batch.censored
    data = (batch.nu[done] if which == "nu" else batch.t_nu[done]) * s_beta
    scale = 1.0 if which == "nu" else mu

    def survival(z):
        return limit_survival_H(np.asarray(z) / scale, a_seq)

    stat = ks_statistic(data, survival)
    grid = [(float(z), float(np.mean(data > z)), float(survival(z))) for z in z_grid]
    name = name or f"scaled-survival:{which}"
    return KSReport(name, stat, float(bound), bool(stat <= bound and batch.n_censored == 0), int(done.sum()),
                    int(seed), batch.n_censored, grid)


# ---------------------------------------------------------------------------
# finite-t convergence
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    t: float
    g_t: float
    sup_distance: float
    ks: float | None = None


@dataclass
class ConvergenceTable:
    name: str
    rows: list
    monotone_decrease: bool
    strictly_decreasing: bool

    @property
    def final_distance(self) -> float:
        return self.rows[-1].sup_distance

    def to_dict(self) -> dict:
        return asdict(self)


def convergence_study(schedule: Schedule, f: DistributionSpec, t_grid, limit: LimitParams,
                      k_max: int = 19, l_max: int = 19, reps: int = 0, seed: int = 0, a_seq=None,
                      g: DistributionSpec | None = None, workers=None) -> ConvergenceTable:
    """Sup-norm distance between the finite-``t`` exact ``(k, l)`` pmf and the limit pmf.

    The exact pmf at each ``t`` is built from :func:`regime_at` ratios.  With
    ``reps > 0`` the KS distance of simulated ``nu * sf(beta)`` to
    ``1 - H`` (sequence ``a_seq``) is added.  Monotone decrease is reported,
    not enforced.
    """
    rows = []
    for t in t_grid:
        regime = regime_at(f, schedule, t, k_max, l_max)
        st = regime.survival_triple()
        dist = 0.0
        for k in range(k_max + 1):
            for l in range(l_max + 1):
                p = exact.pmf_nplus_nminus(k, l, st)
                _check_prob((k, l), p)
                dist = max(dist, abs(p - limit_pmf(k, l, limit)))
        ks = None
        if reps:
            from .distributions import Exponential
            rep = scaled_survival_check(schedule.params_at(t), f, g or Exponential(1.0), reps, seed,
                                        a_seq if a_seq is not None else limit.a_at(0, 0), workers=workers)
            ks = rep.statistic
        rows.append(ConvergenceRow(float(t), float(regime.g_t), float(dist), ks))
    d = [r.sup_distance for r in rows]
    mono = all(b <= a for a, b in zip(d, d[1:]))
    strict = all(b < a for a, b in zip(d, d[1:]))
    return ConvergenceTable(schedule.name, rows, mono, strict)


# ---------------------------------------------------------------------------
# enumeration oracle
# ---------------------------------------------------------------------------


@dataclass
class OracleReport:
    name: str
    max_error: dict
    cells: dict
    routes: dict
    tolerance: float
    passed: bool
    absorption_residual: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: tolerance {self.tolerance:g}, "
                 f"absorption residual {self.absorption_residual:.3g}"]
        for op in sorted(self.max_error):
            lines.append(f"    {op:>18s}: max|formula - enumeration| = {self.max_error[op]:.3e} "
                         f"over {self.cells[op]} cells")
        lines.append("    routes: " + ", ".join(f"m={m}:{r}" for m, r in sorted(self.routes.items())))
        return "\n".join(lines)


def enumeration_check(f, params: ModelParams, m_max: int = 12, tolerance: float = 1e-12,
                      name: str = "enumeration") -> OracleReport:
    """Compare every exact formula with sums over all shock sequences of length ``<= m_max``.

    Lengths whose sequence count fits :data:`enumeration.MAX_SEQUENCES` are
    summed sequence by sequence; longer ones use the merged-path enumeration,
    which adds the same path probabilities after grouping identical states.
    The ``(N+(nu), N-(nu))`` law is checked against the absorbing enumeration.
    """
    from . import enumeration as en

    st = SurvivalTriple.from_model(params, f)
    err = {"joint_pmf": 0.0, "joint_survival": 0.0, "survival_nu": 0.0, "pmf_nplus_nminus": 0.0}
    cells = dict.fromkeys(err, 0)
    routes = {}

    def record(op, formula, oracle):
        err[op] = max(err[op], abs(formula - oracle))
        cells[op] += 1

    n_atoms = len(f.values)
    for n in range(1, m_max + 1):
        brute = n_atoms ** n <= en.MAX_SEQUENCES
        routes[n] = "sequences" if brute else "merged"
        if brute:
            tab = en.enumerate_sequences(f, params, n)
            kb, lb = tab.plus_after[n - 1], tab.minus_after[n - 1]
            la = tab.minus_after[n]
            pmf_or, surv_or = defaultdict(float), defaultdict(float)
            keys = np.stack([tab.nu, kb, lb, la, tab.w], axis=1)
            uniq, inv = np.unique(keys, axis=0, return_inverse=True)
            mass = np.bincount(inv.ravel(), weights=tab.prob)
            for (nu, k, l_before, l_after, w), p in zip(uniq.tolist(), mass):
                if nu == n:
                    pmf_or[(k, l_before, w)] += p
                elif nu == 0:
                    surv_or[(k, l_after, w)] += p
            alive = tab.total(tab.nu == 0)
            l0 = {}
            for m in range(1, n):
                sel = tab.w == n
                ks, cnt = np.unique(tab.plus_after[m - 1][sel], return_inverse=True)
                l0[m] = dict(zip(ks.tolist(), np.bincount(cnt.ravel(), weights=tab.prob[sel]).tolist()))
        else:
            dist = en.state_distribution(f, params, n, record_at=n - 1)
            pmf_or, surv_or = defaultdict(float), defaultdict(float)
            alive = 0.0
            for (k, l, w, nu, kr, lr), p in dist.items():
                if nu == n:
                    pmf_or[(kr, lr, w)] += p
                elif nu == 0:
                    surv_or[(kr, l, w)] += p
                    alive += p
            l0 = {}
            for m in range(1, n):
                acc = defaultdict(float)
                for (k, l, w, nu, kr, lr), p in en.state_distribution(f, params, n, record_at=m - 1).items():
                    if w == n:
                        acc[kr] += p
                l0[m] = dict(acc)
        for k in range(n + 1):
            for l in range(n + 1):
                for j in range(1, n + 2):
                    record("joint_pmf", exact.joint_pmf(n, k, l, j, st), pmf_or.get((k, l, j), 0.0))
                    if l >= 1:
                        record("joint_survival", exact.joint_survival(n, k, l, j, st), surv_or.get((k, l, j), 0.0))
        for m in range(1, n):
            for k in range(m + 1):
                record("joint_survival", exact.joint_survival(m, k, 0, n, st), l0[m].get(k, 0.0))
        record("survival_nu", exact.survival_nu(n, st), alive)

    absorbed, residual = en.absorption_distribution(f, params)
    keys = set(absorbed) | {(k, l) for k in range(m_max + 1) for l in range(m_max + 1)}
    for k, l in sorted(keys):
        record("pmf_nplus_nminus", exact.pmf_nplus_nminus(k, l, st), absorbed.get((k, l), 0.0))
    worst = max(err.values())
    passed = bool(worst <= tolerance and residual <= tolerance)
    return OracleReport(name, err, cells, routes, tolerance, passed, residual)
