"""The verification suites run by ``shockmodel verify``.

Each suite checks one family of results by two independent routes and returns
a :class:`SuiteResult`.  Seeds are derived from the master seed and the suite
name only, so any subset of suites reproduces the same numbers.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import exact
from .asymptotics import LimitParams, exponential_schedule, limit_pmf, limit_survival_H, limit_tail
from .config import VerifySection
from .distributions import DiscreteFinite, Exponential
from .exact import SurvivalTriple
from .harness import (binomial_cells, compare_exact_vs_mc, convergence_study, enumeration_check,
                      scaled_survival_check, _finish)
from .model import AffineIncrements, GeometricIncrements, ModelParams
from .urn import (ReinforcementMatrix, UrnState, exact_factorial_moment, exact_urn_distribution,
                  expected_counts, factorial_moment_3, factorial_moment_4, simulate_urn_batch)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: list = field(default_factory=list)
    text: str = ""

    def add(self, metric: str, value: float, bound: float, ok: bool, relation: str = "<="):
        self.metrics.append({"suite": self.name, "metric": metric, "value": float(value),
                             "bound": float(bound), "relation": relation, "passed": bool(ok)})

    def finalize(self):
        self.passed = all(m["passed"] for m in self.metrics)
        return self


def derived_seed(seed: int, label: str) -> int:
    ss = np.random.SeedSequence([int(seed), zlib.crc32(label.encode())])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# discrete shock laws used as enumeration fixtures
ORACLE_LAWS = {
    "uniform5": (DiscreteFinite((1, 2, 3, 4, 5), (0.2,) * 5),
                 ModelParams(alpha=5, beta=4, gamma=3, b=AffineIncrements(1.0), c=AffineIncrements(0.5))),
    "three-atom": (DiscreteFinite((0.5, 2, 3.5), (0.5, 0.3, 0.2)),
                   ModelParams(alpha=3, beta=2, gamma=1, b=AffineIncrements(0.75, 2.0), c=AffineIncrements(0.6))),
    "six-atom": (DiscreteFinite((1, 2, 3, 4, 5, 6), (0.3, 0.2, 0.15, 0.15, 0.1, 0.1)),
                 ModelParams(alpha=5, beta=3.5, gamma=2, b=GeometricIncrements(2.0, 0.5), c=AffineIncrements(1.0),
                             alpha_star_upper=6.5)),
    "four-atom": (DiscreteFinite((0, 1.5, 2.5, 4), (0.4, 0.3, 0.2, 0.1)),
                  ModelParams(alpha=3, beta=2.5, gamma=1, b=AffineIncrements(1.0, 2.0), c=AffineIncrements(0.7))),
}


def suite_enumeration(cfg: VerifySection, seed: int) -> SuiteResult:
    res = SuiteResult("enumeration", False)
    texts = []
    for name, (f, params) in ORACLE_LAWS.items():
        rep = enumeration_check(f, params, cfg.m_max, name=f"enumeration:{name}")
        texts.append(rep.to_text())
        for op, e in sorted(rep.max_error.items()):
            res.add(f"{name}:{op}", e, rep.tolerance, e <= rep.tolerance)
        res.add(f"{name}:absorption_residual", rep.absorption_residual, rep.tolerance,
                rep.absorption_residual <= rep.tolerance)
    res.text = "\n".join(texts)
    return res.finalize()


def simple_model(sf_alpha: float = 0.1):
    """Unit exponential shocks with ``gamma = beta`` and ``b = c = 0``."""
    return ModelParams(alpha=-math.log(sf_alpha), beta=0.5 * -math.log(sf_alpha), gamma=0.5 * -math.log(sf_alpha))


def suite_simple_model(cfg: VerifySection, seed: int, sf_alpha: float = 0.1, m_check: int = 200) -> SuiteResult:
    res = SuiteResult("simple_model", False)
    f = Exponential(1.0)
    params = simple_model(sf_alpha)
    st = SurvivalTriple.from_model(params, f)
    p_fatal = float(f.tail(params.alpha))
    worst = max(abs(exact.pmf_nu(m, st) - (1 - p_fatal) ** (m - 1) * p_fatal) for m in range(1, m_check + 1))
    res.add("pmf_nu_vs_geometric", worst, 1e-12, worst <= 1e-12)
    rep = compare_exact_vs_mc(params, f, f, cfg.reps, derived_seed(seed, "simple_model"), target="nu",
                              z_threshold=cfg.z_threshold, tv_bound=cfg.tv_bound, name="simple-model:nu")
    res.add("tv", rep.tv, cfg.tv_bound, rep.tv <= cfg.tv_bound)
    res.add("max_abs_z", rep.max_abs_z, cfg.z_threshold, rep.max_abs_z <= cfg.z_threshold)
    res.text = rep.to_text()
    return res.finalize()


def suite_discrete_mc(cfg: VerifySection, seed: int) -> SuiteResult:
    res = SuiteResult("discrete_mc", False)
    f, params = ORACLE_LAWS["uniform5"]
    texts = []
    for target in ("nplus_nminus", "nu"):
        rep = compare_exact_vs_mc(params, f, Exponential(1.0), cfg.reps, derived_seed(seed, f"discrete:{target}"),
                                  target=target, m_max=40 if target == "nu" else None,
                                  z_threshold=cfg.z_threshold, tv_bound=cfg.tv_bound,
                                  name=f"discrete-mc:{target}")
        res.add(f"{target}:max_abs_z", rep.max_abs_z, cfg.z_threshold, rep.max_abs_z <= cfg.z_threshold)
        res.add(f"{target}:tv", rep.tv, cfg.tv_bound, rep.tv <= cfg.tv_bound)
        texts.append(rep.to_text())
    res.text = "\n".join(texts)
    return res.finalize()


def suite_limit_identities(cfg: VerifySection, seed: int, quad_tol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("limit_identities", False)
    lp = LimitParams(0.5, 0.5)
    total = math.fsum(limit_pmf(k, l, lp) for k in range(60) for l in range(60))
    res.add("pmf_sum_60x60", abs(total - 1.0), 1e-9, abs(total - 1.0) <= 1e-9)
    worst = 0.0
    for k in range(11):
        for l in range(1, 11):
            worst = max(worst, abs(limit_tail(0.0, k, l, lp, quad_tol) - limit_pmf(k, l, lp)))
    res.add("tail_at_zero_vs_pmf", worst, 1e-8, worst <= 1e-8)
    z = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    h_err = float(np.max(np.abs(limit_survival_H(z, 0.5) - np.exp(-0.5 * z))))
    res.add("H_vs_exp", h_err, 1e-10, h_err <= 1e-10)
    res.text = (f"sum of limit pmf over 60x60 = {total!r}\n"
                f"max |limit_tail(0,k,l) - limit_pmf(k,l)| over k<=10, 1<=l<=10 = {worst:.3e}\n"
                f"max |1 - H(z) - exp(-z/2)| on {z.tolist()} = {h_err:.3e}")
    return res.finalize()


T_REGIME = 1e4


def suite_scaled_nu(cfg: VerifySection, seed: int) -> SuiteResult:
    res = SuiteResult("scaled_nu", False)
    f = Exponential(1.0)
    params = exponential_schedule(0.5, 0.5).params_at(T_REGIME)
    rep = scaled_survival_check(params, f, f, cfg.reps, derived_seed(seed, "scaled_nu"), 0.5,
                                which="nu", bound=cfg.ks_bound_nu, name="scaled-nu")
    res.add("ks", rep.statistic, cfg.ks_bound_nu, rep.passed)
    res.text = rep.to_text()
    return res.finalize()


def suite_scaled_time(cfg: VerifySection, seed: int, mus=(0.5, 1.0, 2.0)) -> SuiteResult:
    res = SuiteResult("scaled_time", False)
    f = Exponential(1.0)
    params = exponential_schedule(0.5, 0.5).params_at(T_REGIME)
    texts = []
    for mu in mus:
        rep = scaled_survival_check(params, f, Exponential(1.0 / mu), cfg.reps, derived_seed(seed, f"scaled_time:{mu}"),
                                    0.5, which="t", mu=mu, bound=cfg.ks_bound_t, name=f"scaled-time mu={mu:g}")
        res.add(f"ks_mu={mu:g}", rep.statistic, cfg.ks_bound_t, rep.passed)
        texts.append(rep.to_text())
    res.text = "\n".join(texts)
    return res.finalize()


def drift_schedule():
    """Unit exponential schedule whose strengthening ratio approaches 1/2 like ``exp(-10/t)``."""
    return exponential_schedule(0.5, 0.5, gamma_offset=lambda t: 10.0 / t, name="exponential-drift")


def suite_convergence(cfg: VerifySection, seed: int, t_grid=(1e2, 1e3, 1e4)) -> SuiteResult:
    res = SuiteResult("convergence", False)
    f = Exponential(1.0)
    limit = LimitParams(0.5, 0.5)
    texts = []
    for sched in (exponential_schedule(0.5, 0.5), drift_schedule()):
        table = convergence_study(sched, f, t_grid, limit)
        res.add(f"{sched.name}:final_sup_distance", table.final_distance, 0.02, table.final_distance < 0.02)
        mono_ok = table.strictly_decreasing if sched.name.endswith("drift") else table.monotone_decrease
        res.add(f"{sched.name}:decreasing", float(mono_ok), 1.0, mono_ok, relation="==")
        texts.append(f"{sched.name}: " + ", ".join(f"t={r.t:g} g_t={r.g_t:.6f} sup={r.sup_distance:.3e}"
                                                   for r in table.rows))
    res.text = "\n".join(texts)
    return res.finalize()


URN_EXAMPLES = {
    "three": (ReinforcementMatrix.three_color(2, 1), UrnState((1, 1, 1))),
    "four": (ReinforcementMatrix.four_color(2, 1), UrnState((1, 1, 1, 1))),
}


def suite_urn_dp_mc(cfg: VerifySection, seed: int, n: int = 8) -> SuiteResult:
    res = SuiteResult("urn_dp_mc", False)
    texts = []
    for name, (rm, init) in URN_EXAMPLES.items():
        dist = exact_urn_distribution(init, rm, n)
        batch = simulate_urn_batch(init, rm, n, cfg.urn_reps, derived_seed(seed, f"urn_dp_mc:{name}"))
        freq = batch.state_frequencies()
        analytic = {str(k): p for k, p in sorted(dist.items())}
        counts = {str(k): c for k, c in freq.items()}
        cells, tv = binomial_cells(analytic, counts, batch.reps)
        rep = _finish(f"urn-dp-vs-mc:{name}", cells, tv, batch.reps, batch.seed, cfg.z_threshold, 1.0)
        res.add(f"{name}:max_abs_z", rep.max_abs_z, cfg.z_threshold, rep.max_abs_z <= cfg.z_threshold)
        res.add(f"{name}:dp_mass_error", abs(sum(dist.values()) - 1.0), 1e-12, abs(sum(dist.values()) - 1.0) <= 1e-12)
        res.add(f"{name}:balance_violations", batch.balance_violations, 0, batch.balance_violations == 0)
        if "u" in rm.colors:
            j = rm.index("u")
            bad = int(np.sum((batch.count_min[:, j] != init.counts[j]) | (batch.count_max[:, j] != init.counts[j])))
            res.add(f"{name}:u_count_changed", bad, 0, bad == 0)
        texts.append(rep.to_text())
    res.text = "\n".join(texts)
    return res.finalize()


def _x_leading(name, n, init, rm):
    if name == "three":
        a0, b0, c0 = init.counts
        return factorial_moment_3("x", 1, n, a0, b0, c0, rm.theta, int(rm.additions[1, 1]))
    a0, d0, b0, c0 = init.counts
    return factorial_moment_4("x", 1, n, a0, d0, b0, c0, rm.theta, int(rm.additions[2, 2]))


def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def suite_urn_moments(cfg: VerifySection, seed: int, n_big: int = 10_000) -> SuiteResult:
    res = SuiteResult("urn_moments", False)
    texts = []
    grid = (100, 1000, n_big)
    for name, (rm, init) in URN_EXAMPLES.items():
        delta = int(rm.additions[rm.index("y"), rm.index("y")])
        xi = rm.index("x")
        dp_ratios = []
        for n in (8, 16, 32):
            dist = exact_urn_distribution(init, rm, n)
            dp_ratios.append(exact_factorial_moment(dist, xi, 1) / _x_leading(name, n, init, rm))
        batch = simulate_urn_batch(init, rm, n_big, cfg.urn_moment_reps, derived_seed(seed, f"urn_moments:{name}"),
                                   checkpoints=grid[:-1])
        mean_x, se_x = batch.factorial_moment("x", 1)
        ratio = mean_x / _x_leading(name, n_big, init, rm)
        res.add(f"{name}:x_ratio_sim_n={n_big}", abs(ratio - 1.0), 0.05, abs(ratio - 1.0) <= 0.05)
        res.add(f"{name}:x_ratio_dp_n=32", abs(dp_ratios[-1] - 1.0), 0.05, abs(dp_ratios[-1] - 1.0) <= 0.05)
        y_means = [batch.factorial_moment("y", 1, n)[0] for n in grid]
        slope = loglog_slope(grid, y_means)
        target = delta / rm.theta
        res.add(f"{name}:y_exponent_sim", abs(slope - target), 0.05, abs(slope - target) <= 0.05)
        exact_y = expected_counts(init, rm, n_big)[list(grid), rm.index("y")]
        slope_exact = loglog_slope(grid, exact_y)
        res.add(f"{name}:y_exponent_exact", abs(slope_exact - target), 0.05, abs(slope_exact - target) <= 0.05)
        texts.append(f"{name}: E[X_n]/leading at n=8,16,32 (DP) = "
                     + ", ".join(f"{r:.6f}" for r in dp_ratios)
                     + f"; n={n_big} (sim, {batch.reps} reps) = {ratio:.6f} (se {se_x / _x_leading(name, n_big, init, rm):.2g})"
                     + f"; y exponent sim {slope:.4f}, exact {slope_exact:.4f}, target {target:g}")
    res.text = "\n".join(texts)
    return res.finalize()


SUITES = {
    "enumeration": suite_enumeration,
    "simple_model": suite_simple_model,
    "discrete_mc": suite_discrete_mc,
    "limit_identities": suite_limit_identities,
    "scaled_nu": suite_scaled_nu,
    "scaled_time": suite_scaled_time,
    "convergence": suite_convergence,
    "urn_dp_mc": suite_urn_dp_mc,
    "urn_moments": suite_urn_moments,
}


def run_verification(cfg: VerifySection, seed: int):
    return [SUITES[name](cfg, seed) for name in cfg.suites]
