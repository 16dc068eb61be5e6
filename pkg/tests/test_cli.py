import json

import numpy as np
import pytest
import yaml

from helpers import bumped_flux
from selfsim.cli import build_profile, main, parse_problem_spec, profile_to_document, run_pipeline
from selfsim.errors import SchemaError
from selfsim.flux_models import register_factory
from selfsim.scalar_oracle import oleinik_solve

SHOCK = {"flux": "burgers",
         "profile": {"breakpoints": [0.0],
                     "segments": [{"kind": "constant", "state": [1.0]}, {"kind": "constant", "state": [-1.0]}]}}

QUARTIC = {"flux": "quartic",
           "profile": {"breakpoints": [-1.0, 1.0],
                       "segments": [{"kind": "constant", "state": [-1.0]},
                                    {"kind": "mapped", "map": "power", "exponent": 1 / 3},
                                    {"kind": "constant", "state": [1.0]}]}}


def _with(doc, **extra):
    out = json.loads(json.dumps(doc))
    out.update(extra)
    return out


def _write(tmp_path, doc, name="spec.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_parse_examples():
    spec = parse_problem_spec(SHOCK)
    assert spec.flux_name == "burgers" and spec.solve_scalar is None
    with pytest.raises(SchemaError):
        parse_problem_spec(_with(SHOCK, solve_scalar=[-1, 1]))
    spec = parse_problem_spec({"flux": "oscillatory", "solve_scalar": [-1, 1]})
    assert tuple(spec.solve_scalar) == (-1.0, 1.0)


def test_parse_rejects_unknown_keys():
    with pytest.raises(SchemaError) as err:
        parse_problem_spec(_with(SHOCK, config={"classify": {"dx": 0.1}}))
    assert "config.classify" in str(err.value)
    with pytest.raises(SchemaError):
        parse_problem_spec({"flux": "nope", "solve_scalar": [0, 1]})
    with pytest.raises(SchemaError):
        parse_problem_spec({"flux": "burgers"})


def test_parse_text_and_path(tmp_path):
    path = _write(tmp_path, SHOCK)
    assert parse_problem_spec(path).flux_name == "burgers"
    assert parse_problem_spec(yaml.safe_dump(SHOCK)).flux_name == "burgers"


def test_pipeline_quartic(tmp_path):
    res = run_pipeline(parse_problem_spec(_with(QUARTIC, outputs={"dir": str(tmp_path)})))
    assert res.exit_code == 0
    assert len(res.report.waves) == 3
    names = sorted(p.name for p in tmp_path.iterdir())
    assert {"report.txt", "intervals.csv", "dafermos.csv"} <= set(names)
    assert sum(n.startswith("wave_") for n in names) == 3


def test_wrong_speed_exit_3(tmp_path):
    doc = json.loads(json.dumps(SHOCK))
    doc["profile"]["breakpoints"] = [0.1]
    assert main(["analyze", "--spec", _write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 3


def test_schema_error_exit_64(tmp_path):
    assert main(["analyze", "--spec", _write(tmp_path, _with(SHOCK, solve_scalar=[1, -1]))]) == 64


def test_oscillatory_oracle_exit_2(tmp_path):
    doc = {"flux": "oscillatory", "solve_scalar": [-1.0, 1.0], "outputs": {"dir": str(tmp_path)}}
    assert run_pipeline(parse_problem_spec(doc), write=False).exit_code == 2


def test_accumulating_plugin_exit_2(tmp_path):
    register_factory("bumped", lambda levels=6, amp=0.5: bumped_flux(levels, amp))
    doc = {"flux": {"name": "bumped", "params": {"levels": 6}}, "solve_scalar": [-0.25, 1.0]}
    rc = main(["solve-scalar", "--spec", _write(tmp_path, doc), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "accumulating discontinuities near" in (tmp_path / "o" / "report.txt").read_text()


def test_determinism(tmp_path):
    for k in range(2):
        assert main(["analyze", "--spec", _write(tmp_path, SHOCK), "--out", str(tmp_path / f"run{k}")]) == 0
    for name in ("intervals.csv", "dafermos.csv", "report.txt"):
        assert (tmp_path / "run0" / name).read_bytes() == (tmp_path / "run1" / name).read_bytes()
    waves = sorted(p.name for p in (tmp_path / "run0").glob("wave_*.csv"))
    assert waves and all((tmp_path / "run0" / w).read_bytes() == (tmp_path / "run1" / w).read_bytes()
                         for w in waves)


def test_oracle_round_trip(tmp_path):
    out = tmp_path / "solve"
    assert main(["solve-scalar", "--flux", "quartic", "--solve-scalar", "-1", "1", "--out", str(out)]) == 0
    doc = yaml.safe_load((out / "solution.yaml").read_text())
    doc["outputs"] = {"dir": str(tmp_path / "again")}
    assert main(["analyze", "--spec", _write(tmp_path, doc, "solution.yaml")]) == 0
    spec = parse_problem_spec(doc)
    rebuilt = build_profile(spec.model(), spec.profile)
    direct = oleinik_solve(spec.model(), -1.0, 1.0)
    xs = np.linspace(-2, 2, 401)
    np.testing.assert_allclose(rebuilt.values(xs), direct.values(xs), atol=1e-12)
    assert profile_to_document(rebuilt) == profile_to_document(direct)


def test_problem_file_wins_over_flags(tmp_path, capsys):
    path = _write(tmp_path, _with(SHOCK, seed=3))
    assert main(["verify", "--spec", path, "--seed", "5", "--out", str(tmp_path / "v")]) == 0
    assert "ignored" in capsys.readouterr().err


def test_rarefaction_and_chart_commands(tmp_path):
    doc = {"flux": {"name": "shallow_water", "params": {"g": 1.0}},
           "rarefaction": {"u_star": [1.0, 0.0], "family": 2, "xi_interval": [1.0, 1.2]},
           "chart": {"u_star": [1.0, 0.0], "family": 2}}
    path = _write(tmp_path, doc)
    assert main(["rarefaction", "--spec", path, "--out", str(tmp_path / "r")]) == 0
    assert main(["chart", "--spec", path, "--out", str(tmp_path / "c")]) == 0
    rows = np.loadtxt(tmp_path / "c" / "chart.csv", delimiter=",", skiprows=1)
    assert rows.shape[1] == 4
