"""``shockmodel`` command-line front end.

Usage::

    shockmodel <simulate|exact|limit|urn|verify> [--config PATH] [--seed N]
               [--out PATH] [--format csv|jsonl] [--threads N] [--set key=value]...

Exit status is 0 on success, 1 when a verification check fails and 2 on any
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import exact
from .asymptotics import LimitParams, limit_pmf, limit_survival_H, limit_survival_T, limit_tail, limit_tail_l0
from .config import RunConfig, apply_overrides, parse_yaml
from .errors import ConfigError, DegenerateModelError, IncrementRangeError, StateBudgetExceeded
from .exact import SurvivalTriple
from .simulate import THREADS_ENV, simulate_batch
from .urn import (ReinforcementMatrix, UrnState, exact_factorial_moment, exact_urn_distribution,
                  factorial_moment_3, factorial_moment_4, first_failure_curve, simulate_urn_batch)
from .verify import run_verification

COMMANDS = ("simulate", "exact", "limit", "urn", "verify")

SCHEMAS = {
    "simulate_summary": ("statistic", "n", "mean", "stderr"),
    "simulate_histogram": ("statistic", "value", "count"),
    "simulate_realizations": ("rep", "nu", "w", "n_plus", "n_minus", "t_nu", "censored"),
    "exact": ("table", "m", "k", "l", "j", "value"),
    "limit": ("quantity", "k", "l", "z", "value"),
    "urn": ("section", "n", "state", "color", "l", "value", "stderr"),
    "verify": ("suite", "metric", "value", "relation", "bound", "passed"),
}


def default_verify_config_text() -> str:
    return resources.files("shockmodel").joinpath("data/verify_default.yaml").read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(records, schema, fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(schema)
        for rec in records:
            writer.writerow([_fmt(rec.get(col)) for col in schema])
    else:
        for rec in records:
            buf.write(json.dumps({col: _json_value(rec.get(col)) for col in schema}) + "\n")
    return buf.getvalue()


def emit(records, schema, cfg: RunConfig, stdout):
    text = render(records, schema, cfg.output.format)
    if cfg.output.path:
        with open(cfg.output.path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, stdout=sys.stdout) -> int:
    params, f, g = cfg.require_model()
    sim = cfg.simulate
    batch = simulate_batch(params, f, g, cfg.seed, sim.reps, sim.max_shocks, sim.method,
                           workers=cfg.threads, with_time=sim.with_time)
    done = ~batch.censored
    records = []
    if sim.output == "summary":
        for name in ("nu", "w", "n_plus", "n_minus", "t_nu"):
            if name == "t_nu" and not sim.with_time:
                continue
            data = getattr(batch, name)[done].astype(float)
            if name == "w":
                data = data[data > 0]
            n = data.size
            mean = float(data.mean()) if n else math.nan
            se = float(data.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
            records.append({"statistic": name, "n": n, "mean": mean, "stderr": se})
        records.append({"statistic": "censored", "n": batch.n_censored, "mean": batch.n_censored / batch.n_reps})
        schema = SCHEMAS["simulate_summary"]
    elif sim.output == "histogram":
        for name in ("nu", "w", "n_plus", "n_minus"):
            values, counts = batch.histogram(name)
            records += [{"statistic": name, "value": int(v), "count": int(c)} for v, c in zip(values, counts)]
        records.append({"statistic": "censored", "value": None, "count": batch.n_censored})
        schema = SCHEMAS["simulate_histogram"]
    else:
        for i in range(batch.n_reps):
            cens = bool(batch.censored[i])
            records.append({"rep": i, "nu": None if cens else int(batch.nu[i]),
                            "w": int(batch.w[i]) or None, "n_plus": int(batch.n_plus[i]),
                            "n_minus": int(batch.n_minus[i]),
                            "t_nu": None if cens or not sim.with_time else float(batch.t_nu[i]), "censored": cens})
        schema = SCHEMAS["simulate_realizations"]
    emit(records, schema, cfg, stdout)
    return 0


def cmd_exact(cfg: RunConfig, stdout=sys.stdout) -> int:
    params, f, _ = cfg.require_model()
    st = SurvivalTriple.from_model(params, f)
    ex = cfg.exact
    records = []
    for table in ex.tables:
        if table == "pmf_nu":
            records += [{"table": table, "m": m, "value": exact.pmf_nu(m, st)} for m in range(1, ex.m_max + 1)]
        elif table == "survival_nu":
            records += [{"table": table, "m": m, "value": exact.survival_nu(m, st)} for m in range(ex.m_max + 1)]
        elif table == "nplus_nminus":
            records += [{"table": table, "k": k, "l": l, "value": exact.pmf_nplus_nminus(k, l, st)}
                        for k in range(ex.k_max + 1) for l in range(ex.l_max + 1)]
        else:
            func = exact.joint_pmf if table == "joint_pmf" else exact.joint_survival
            for m in range(1, ex.m_max + 1):
                for k in range(ex.k_max + 1):
                    for l in range(ex.l_max + 1):
                        for j in range(1, m + 2):
                            records.append({"table": table, "m": m, "k": k, "l": l, "j": j,
                                            "value": func(m, k, l, j, st)})
    emit(records, SCHEMAS["exact"], cfg, stdout)
    return 0


def cmd_limit(cfg: RunConfig, stdout=sys.stdout) -> int:
    lim = cfg.limit
    a = np.asarray(lim.a, dtype=float) if isinstance(lim.a, tuple) else lim.a
    lp = LimitParams(lim.g, a, lim.mu)
    a_seq = a[0] if isinstance(a, np.ndarray) else a
    records = [{"quantity": "limit_pmf", "k": k, "l": l, "value": limit_pmf(k, l, lp)}
               for k in range(lim.k_max + 1) for l in range(lim.l_max + 1)]
    for z in lim.z_grid:
        for k in range(lim.tail_k_max + 1):
            for l in range(lim.tail_l_max + 1):
                value = (limit_tail_l0(z, k, lp) if l == 0 else limit_tail(z, k, l, lp, lim.quad_tol))
                records.append({"quantity": "limit_tail", "k": k, "l": l, "z": z, "value": value})
    for z in lim.z_grid:
        records.append({"quantity": "survival_H", "z": z, "value": float(limit_survival_H(z, a_seq))})
        records.append({"quantity": "survival_T", "z": z, "value": float(limit_survival_T(z, a_seq, lim.mu))})
    emit(records, SCHEMAS["limit"], cfg, stdout)
    return 0


def _urn_from_config(u):
    if u.kind == "three":
        return ReinforcementMatrix.three_color(u.theta, u.delta), UrnState(u.init)
    return ReinforcementMatrix.four_color(u.theta, u.delta, u.depleting_u), UrnState(u.init)


def _leading(u, color, l, n):
    if u.kind == "three":
        a0, b0, c0 = u.init
        return factorial_moment_3(color, l, n, a0, b0, c0, u.theta, u.delta)
    a0, d0, b0, c0 = u.init
    return factorial_moment_4(color, l, n, a0, d0, b0, c0, u.theta, u.delta)


def cmd_urn(cfg: RunConfig, stdout=sys.stdout) -> int:
    u = cfg.urn
    rm, init = _urn_from_config(u)
    records = []
    if u.exact:
        dist = exact_urn_distribution(init, rm, u.n)
        for state, p in sorted(dist.items()):
            records.append({"section": "exact_state", "n": u.n, "state": "|".join(map(str, state)), "value": p})
        for color in rm.colors:
            for l in u.moments:
                records.append({"section": "exact_moment", "n": u.n, "color": color, "l": l,
                                "value": exact_factorial_moment(dist, rm.index(color), l)})
        curve = first_failure_curve(init, rm, u.n)
        records += [{"section": "first_failure", "n": i + 1, "color": "w", "value": p} for i, p in enumerate(curve)]
    batch = simulate_urn_batch(init, rm, u.n, u.reps, cfg.seed)
    for color in rm.colors:
        for l in u.moments:
            mean, se = batch.factorial_moment(color, l)
            records.append({"section": "sim_moment", "n": u.n, "color": color, "l": l, "value": mean, "stderr": se})
    for color in rm.colors:
        for l in u.moments:
            try:
                value = _leading(u, color, l, u.n)
            except DegenerateModelError:
                value = math.nan
            records.append({"section": "leading_term", "n": u.n, "color": color, "l": l, "value": value})
    records.append({"section": "balance_violations", "n": u.n, "value": batch.balance_violations})
    emit(records, SCHEMAS["urn"], cfg, stdout)
    return 0


def cmd_verify(cfg: RunConfig, stdout=sys.stdout) -> int:
    results = run_verification(cfg.verify, cfg.seed)
    records = [m for r in results for m in r.metrics]
    for r in results:
        stdout.write(f"== {r.name}: {'PASS' if r.passed else 'FAIL'}\n{r.text}\n")
    emit(records, SCHEMAS["verify"], cfg, stdout)
    ok = all(r.passed for r in results)
    stdout.write(f"verification {'passed' if ok else 'FAILED'}: "
                 f"{sum(r.passed for r in results)}/{len(results)} suites\n")
    return 0 if ok else 1


HANDLERS = {"simulate": cmd_simulate, "exact": cmd_exact, "limit": cmd_limit, "urn": cmd_urn, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shockmodel", description="Extreme shock models with a moving threshold.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML configuration file (verify defaults to the shipped config)")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--out", help="output path (overrides output.path; stdout when absent)")
    parser.add_argument("--format", choices=("csv", "jsonl"), help="output format (overrides output.format)")
    parser.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set model.beta=4 (repeatable)")
    return parser


def resolve_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = parse_yaml(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", "--config") from None
    elif args.command == "verify":
        data = parse_yaml(default_verify_config_text())
    else:
        raise ConfigError(f"the {args.command} command needs a configuration file", "--config")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"output.path={json.dumps(args.out)}")
    if args.format is not None:
        overrides.append(f"output.format={args.format}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    return RunConfig.from_dict(apply_overrides(data, overrides))


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve_config(args)
        if cfg.threads is not None:
            os.environ[THREADS_ENV] = str(cfg.threads)
        return HANDLERS[args.command](cfg, stdout)
    except ConfigError as exc:
        stderr.write(f"shockmodel: configuration error: {exc}\n")
        return 2
    except (IncrementRangeError, DegenerateModelError, StateBudgetExceeded) as exc:
        stderr.write(f"shockmodel: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
