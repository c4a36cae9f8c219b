import json
import subprocess
import sys
from pathlib import Path

import pytest

from hardyhalf import cli
from hardyhalf.experiments import (
    REGISTRY,
    ConfigError,
    ExperimentReport,
    Row,
    emit_csv,
    emit_json,
    make_config,
    richardson_limit,
    run,
)

GOLDEN = Path(__file__).parent / "golden"

CRITERIA = ["mobius-invariance", "cayley-identities", "plaplacian-sign", "weak-form", "vp-bound", "critical-hardy",
            "improved-hardy", "limit-p-to-N", "fp-properties", "tm-scan", "no-weight-rn", "asym-counterexample",
            "bliss-limit", "transplant-isometries", "determinism"]


def test_registry_covers_every_criterion():
    assert list(REGISTRY) == CRITERIA
    for exp in REGISTRY.values():
        assert exp.claim and exp.tolerance


def test_config_merging_and_validation():
    cfg = make_config({"experiment": "vp-bound", "options": {"points": 10}}, seed=5)
    assert cfg.seed == 5 and cfg.options["points"] == 10
    assert cfg.params_grid["Np"] == [[3, 2.0], [4, 2.5], [5, 3.0]]
    with pytest.raises(ConfigError):
        make_config({"experiment": "no-such-thing"})
    with pytest.raises(ConfigError):
        make_config({"experiment": "vp-bound", "params_grid": {"Np": []}})
    with pytest.raises(ConfigError):
        make_config({"experiment": "vp-bound", "params_grid": {"Np": [[3, 4.0]]}})
    with pytest.raises(ConfigError):
        make_config({"experiment": "vp-bound", "colour": "red"})
    with pytest.raises(ConfigError):
        make_config({"experiment": "vp-bound", "quadrature": {"nonsense": 1}})


def test_empty_report_gives_header_only_csv():
    rep = ExperimentReport("vp-bound", {}, [], True, float("-inf"))
    assert emit_csv(rep) == "experiment,row_index,margin,converged\n"


def test_csv_columns_and_formatting():
    rows = [Row({"b": 1, "a": 0.1}, {"z": True}, -1.0), Row({"a": 2.5}, {"y": None, "z": False}, 0.5, False)]
    rep = ExperimentReport("x", {}, rows, False, 0.5)
    lines = emit_csv(rep).splitlines()
    assert lines[0] == "experiment,row_index,a,b,y,z,margin,converged"
    assert lines[1] == "x,0,0.10000000000000001,1,,true,-1,true"
    assert lines[2] == "x,1,2.5,,,false,0.5,false"


def test_json_round_trip():
    cfg = make_config({"experiment": "vp-bound", "options": {"points": 50}})
    rep = run(cfg, progress=False)
    data = json.loads(emit_json(rep))
    assert data["experiment"] == "vp-bound"
    assert data["summary"]["pass"] is True
    assert data["summary"]["runtime_seconds"] is None
    assert [r["margin"] for r in data["rows"]] == [r.margin for r in rep.rows]
    assert data["rows"][0]["outputs"]["min_Vp"] == rep.rows[0].outputs["min_Vp"]


def test_golden_vp_bound_seed_42():
    rep = run(make_config({"experiment": "vp-bound", "seed": 42}), progress=False)
    assert emit_csv(rep) == (GOLDEN / "vp_bound_seed42.csv").read_text()
    assert emit_json(rep) == (GOLDEN / "vp_bound_seed42.json").read_text()


def test_parallel_run_matches_serial():
    cfg = make_config({"experiment": "cayley-identities", "options": {"points": 100}})
    a = run(cfg, jobs=1, progress=False)
    b = run(cfg, jobs=3, progress=False)
    assert emit_csv(a) == emit_csv(b) and emit_json(a) == emit_json(b)


def test_richardson_limit_of_quadratic():
    f = lambda e: 2.0 + 3.0 * e - 5.0 * e * e
    eps = [0.4, 0.2, 0.1, 0.05]
    assert richardson_limit(eps, [f(e) for e in eps]) == pytest.approx(2.0, rel=1e-12)


def test_cli_list_and_show(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in CRITERIA)
    assert cli.main(["show", "vp-bound"]) == 0
    assert "tolerance" in capsys.readouterr().out
    assert cli.main(["show", "nope"]) == 2


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "--experiment", "vp-bound", "--quiet"]) == 0
    assert cli.main(["run", "--experiment", "unknown", "--quiet"]) == 2
    # a violation exits with 1
    assert cli.main(["run", "--experiment", "bliss-limit", "--quiet", "--out", str(tmp_path / "b")]) == 1
    assert (tmp_path / "b.csv").exists() and (tmp_path / "b.json").exists()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "vp-bound", "params_grid": {"Np": [[2, 3.0]]}}))
    assert cli.main(["run", "--config", str(cfg), "--quiet"]) == 2
    cfg.write_text("{not json")
    assert cli.main(["run", "--config", str(cfg), "--quiet"]) == 2


def test_cli_unconverged_rows_exit_two(tmp_path):
    # a single adaptive step cannot meet a 1e-15 tolerance
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "weak-form", "params_grid": {"Np": [[3, 2.0]]}, "options": {"bumps": 1},
                               "quadrature": {"rel_tol": 1e-15, "abs_tol": 1e-300, "max_depth": 4}}))
    assert cli.main(["run", "--config", str(cfg), "--quiet"]) == 2
    assert cli.main(["run", "--config", str(cfg), "--quiet", "--allow-unconverged"]) in (0, 1)


def test_tol_scale_flag():
    # the spot-value row has margin |err| - 1e-12 * scale; a larger scale makes it more negative
    a = run(make_config({"experiment": "vp-bound", "options": {"points": 50}}), progress=False)
    b = run(make_config({"experiment": "vp-bound", "options": {"points": 50}}, tol_scale=10.0), progress=False)
    assert b.rows[1].margin < a.rows[1].margin


def test_stdout_is_only_the_report():
    res = subprocess.run([sys.executable, "-m", "hardyhalf", "run", "--experiment", "vp-bound", "--seed", "42",
                          "--out", "-", "--format", "csv"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout == (GOLDEN / "vp_bound_seed42.csv").read_text()
    assert "[vp-bound]" in res.stderr
