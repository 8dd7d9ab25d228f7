"""Acceptance criteria, each at its stated tolerance and full replicate count.

Run with ``pytest tests/test_acceptance.py -v``; a summary with one PASS/FAIL
line per criterion is printed at the end of the session.
"""

import io
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from shockmodel.cli import main
from shockmodel.config import VerifySection
from shockmodel import verify

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEED = 20261015
CFG = VerifySection()  # full sizes: 10**6 replicates


def report(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def metrics(result):
    return {m["metric"]: m["value"] for m in result.metrics}


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_criterion_1_enumeration_oracle():
    assert CFG.m_max == 12 and len(verify.ORACLE_LAWS) >= 3
    assert all(len(f.values) <= 6 for f, _ in verify.ORACLE_LAWS.values())
    res, secs = timed(verify.suite_enumeration, CFG, SEED)
    m = metrics(res)
    errors = {k: v for k, v in m.items() if not k.endswith("absorption_residual")}
    worst = max(errors.values())
    ops = {k.split(":")[1] for k in errors}
    ok = worst <= 1e-12 and secs < 120 and ops >= {"joint_pmf", "joint_survival", "pmf_nplus_nminus", "survival_nu"}
    report(1, "enumeration oracle", ok,
           f"{len(verify.ORACLE_LAWS)} laws, m<=12, max error {worst:.2e} (<=1e-12), {secs:.1f}s (<120s)")


def test_criterion_2_simple_model():
    res = verify.suite_simple_model(CFG, verify.derived_seed(SEED, "root"))
    m = metrics(res)
    ok = m["pmf_nu_vs_geometric"] <= 1e-12 and m["tv"] < 0.005
    report(2, "simple-model reduction", ok,
           f"identity error {m['pmf_nu_vs_geometric']:.2e} (<=1e-12), TV {m['tv']:.5f} (<0.005) at 1e6 reps")


def test_criterion_3_limit_pmf_consistency():
    res = verify.suite_limit_identities(CFG, SEED)
    m = metrics(res)
    ok = m["pmf_sum_60x60"] <= 1e-9 and m["tail_at_zero_vs_pmf"] <= 1e-8
    report(3, "limit pmf and tail at zero", ok,
           f"|sum-1| {m['pmf_sum_60x60']:.2e} (<=1e-9), tail(0) vs pmf {m['tail_at_zero_vs_pmf']:.2e} (<=1e-8)")


def test_criterion_4_scaled_failure_count():
    assert CFG.reps == 10 ** 6 and verify.T_REGIME == 1e4
    ident = metrics(verify.suite_limit_identities(CFG, SEED))["H_vs_exp"]
    res, secs = timed(verify.suite_scaled_nu, CFG, SEED)
    ks = metrics(res)["ks"]
    ok = ident <= 1e-10 and ks <= 0.01 and secs < 300
    report(4, "scaled failure count", ok,
           f"|1-H - e^(-az)| {ident:.2e} (<=1e-10), KS {ks:.5f} (<=0.01), {secs:.1f}s (<300s)")


def test_criterion_5_scaled_failure_time():
    res = verify.suite_scaled_time(CFG, SEED)
    m = metrics(res)
    worst = max(m.values())
    ok = len(m) == 3 and worst <= 0.015
    report(5, "scaled failure time", ok,
           "KS " + ", ".join(f"{k.split('=')[1]}: {v:.5f}" for k, v in sorted(m.items())) + " (<=0.015)")


def test_criterion_6_finite_t_convergence():
    res = verify.suite_convergence(CFG, SEED)
    m = metrics(res)
    final = m["exponential:final_sup_distance"]
    ok = final < 0.02 and m["exponential:decreasing"] == 1.0 and m["exponential-drift:decreasing"] == 1.0 \
        and m["exponential-drift:final_sup_distance"] < 0.02
    report(6, "finite-t convergence", ok,
           f"exponential schedule sup {final:.2e} (<0.02, nonincreasing); drift schedule sup "
           f"{m['exponential-drift:final_sup_distance']:.2e} (strictly decreasing)")


def test_criterion_7_urn_dp_vs_simulation():
    assert CFG.urn_reps == 10 ** 6
    res = verify.suite_urn_dp_mc(CFG, SEED)
    m = metrics(res)
    z = max(m["three:max_abs_z"], m["four:max_abs_z"])
    violations = int(m["three:balance_violations"] + m["four:balance_violations"])
    ok = z <= 4 and violations == 0 and m["four:u_count_changed"] == 0
    report(7, "urn DP vs simulation", ok,
           f"max|z| {z:.2f} (<=4), balance violations {violations}, u-count changes {int(m['four:u_count_changed'])}")


def test_criterion_8_urn_moment_asymptotics():
    res = verify.suite_urn_moments(CFG, SEED)
    m = metrics(res)
    x_dev = max(m["three:x_ratio_sim_n=10000"], m["four:x_ratio_sim_n=10000"])
    y_dev = max(m["three:y_exponent_sim"], m["four:y_exponent_sim"])
    ok = x_dev <= 0.05 and y_dev <= 0.05
    report(8, "urn moment asymptotics", ok,
           f"max |E[X_n]/leading - 1| at n=1e4 {x_dev:.4f} (<=0.05), max |slope - delta/theta| {y_dev:.4f} (<=0.05)")


def test_criterion_9_verify_is_deterministic(tmp_path):
    outputs, stdouts, secs = [], [], []
    for i in range(2):
        path = tmp_path / f"verify{i}.jsonl"
        buf = io.StringIO()
        t0 = time.perf_counter()
        code = main(["verify", "--seed", str(SEED), "--out", str(path)], stdout=buf)
        secs.append(time.perf_counter() - t0)
        assert code == 0, buf.getvalue()
        outputs.append(path.read_bytes())
        stdouts.append(buf.getvalue().encode())
    ok = outputs[0] == outputs[1] and stdouts[0] == stdouts[1] and max(secs) < 900
    report(9, "deterministic verification", ok,
           f"reports byte-identical: {outputs[0] == outputs[1] and stdouts[0] == stdouts[1]}, "
           f"{len(outputs[0].splitlines())} records, full suite {max(secs):.0f}s (<900s)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
