import csv
import io
import json
from pathlib import Path

import pytest
import yaml

from shockmodel.cli import SCHEMAS, main, render
from shockmodel.config import RunConfig, apply_overrides, load_config, parse_yaml
from shockmodel.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", ["simple_model.yaml", "example_model.yaml", "limit.yaml", "urn.yaml", "verify.yaml"])
def test_shipped_configs_round_trip(name):
    cfg = load_config(str(CONFIGS / name))
    again = RunConfig.from_dict(yaml.safe_load(cfg.dump()))
    assert again.to_dict() == cfg.to_dict()
    assert again.dump() == cfg.dump()


def test_overrides():
    data = apply_overrides({"model": {"alpha": 3}}, ["model.beta=2", "model.b={rule: affine, step: 0.5}", "seed=9"])
    assert data == {"model": {"alpha": 3, "beta": 2, "b": {"rule": "affine", "step": 0.5}}, "seed": 9}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="simulate.repz"):
        RunConfig.from_dict({"simulate": {"repz": 3}})


def test_exact_simple_model_csv():
    code, out, _ = run("exact", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "exact.m_max=3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == list(SCHEMAS["exact"])
    pmf = [float(r["value"]) for r in rows if r["table"] == "pmf_nu"]
    assert pmf == pytest.approx([0.1, 0.09, 0.081], rel=1e-12)


def test_csv_uses_twelve_significant_digits():
    text = render([{"statistic": "nu", "n": 3, "mean": 1 / 3, "stderr": float("nan")}],
                  SCHEMAS["simulate_summary"], "csv")
    assert text.splitlines()[1] == "nu,3,0.333333333333,nan"


def test_jsonl_has_schema_keys():
    code, out, _ = run("limit", "--config", str(CONFIGS / "limit.yaml"), "--format", "jsonl",
                       "--set", "limit.k_max=1", "--set", "limit.l_max=1")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert recs and all(list(r) == list(SCHEMAS["limit"]) for r in recs)


def test_simulate_outputs_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, _, _ = run("simulate", "--config", str(CONFIGS / "simple_model.yaml"), "--seed", "5",
                         "--set", "simulate.reps=2000", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    code, _, _ = run("simulate", "--config", str(CONFIGS / "simple_model.yaml"), "--seed", "6",
                     "--set", "simulate.reps=2000", "--out", str(tmp_path / "c.csv"))
    assert (tmp_path / "c.csv").read_bytes() != paths[0].read_bytes()


def test_simulate_realizations_and_histogram():
    base = ("simulate", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "simulate.reps=50")
    code, out, _ = run(*base, "--set", "simulate.output=realizations")
    assert code == 0 and len(out.splitlines()) == 51
    code, out, _ = run(*base, "--set", "simulate.output=histogram")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert sum(int(r["count"]) for r in rows if r["statistic"] == "nu") == 50


def test_urn_command():
    code, out, _ = run("urn", "--config", str(CONFIGS / "urn.yaml"), "--set", "urn.reps=2000")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    sections = {r["section"] for r in rows}
    assert sections >= {"exact_moment", "sim_moment", "exact_state", "first_failure", "leading_term"}
    states = [float(r["value"]) for r in rows if r["section"] == "exact_state"]
    assert sum(states) == pytest.approx(1.0)
    assert [r["value"] for r in rows if r["section"] == "balance_violations"] == ["0"]


@pytest.mark.parametrize("argv,needle", [
    (("exact",), "--config"),
    (("exact", "--config", "/nonexistent.yaml"), "--config"),
    (("exact", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "model.beta=null"), "model.beta"),
    (("exact", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "model.gamma=5"), "model.gamma"),
    (("simulate", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "simulate.reps=0"), "simulate.reps"),
    (("simulate", "--config", str(CONFIGS / "simple_model.yaml"), "--set", "simulate.method=fast"),
     "simulate.method"),
])
def test_config_errors_exit_two(argv, needle):
    code, _, err = run(*argv)
    assert code == 2
    assert needle in err


def test_missing_required_field_exits_two(tmp_path):
    data = parse_yaml((CONFIGS / "simple_model.yaml").read_text())
    del data["model"]["beta"]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(data))
    code, _, err = run("exact", "--config", str(path))
    assert code == 2 and "model.beta" in err


def test_finite_increment_overrun_exits_two():
    code, _, err = run("simulate", "--config", str(CONFIGS / "simple_model.yaml"),
                       "--set", "model.beta=1.5", "--set", "model.gamma=0.5",
                       "--set", "model.b=[0, 0.1]", "--set", "simulate.reps=2000")
    assert code == 2 and "IncrementRangeError" in err


def test_bad_command_exits_two():
    assert run("fly")[0] == 2
