from __future__ import annotations

import json

import numpy as np
import pytest

from hjselect import cli, reports
from hjselect.profiles import riemann_profile
from hjselect.flux import quadratic_flux
from hjselect.front_tracking import build_single_shock_solution


@pytest.fixture(scope="module")
def run_dirs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    a, b = base / "a", base / "b"
    assert cli.main(["counterexample", "--out", str(a)]) == 0
    assert cli.main(["counterexample", "--out", str(b), "--figures", "false"]) == 0
    return a, b


def test_counterexample_artifacts(run_dirs):
    a, _ = run_dirs
    for name in ("shocks.csv", "constants.json", "certificate.json", "characteristics.svg",
                 "gap.csv", "regularity.json", "manifest.json", "gap.png", "flux.png"):
        assert (a / name).exists(), name
    assert (a / "shocks.csv").read_text().splitlines()[0] == "label,t,z,v_minus,v_plus,speed"
    cert = json.loads((a / "certificate.json").read_text())
    assert cert["witness_k"] == 0.0
    assert cert["margin"] == pytest.approx(0.151, abs=0.002)
    consts = json.loads((a / "constants.json").read_text())
    assert consts["exact"]["t0"] == "4/11"
    svg = (a / "characteristics.svg").read_text()
    for label in ("Γ_A", "Γ_B", "Γ_C"):
        assert label in svg
    manifest = reports.ExperimentManifest.from_json((a / "manifest.json").read_text())
    assert manifest.status == "ok" and manifest.subcommand == "counterexample"


def test_determinism(run_dirs):
    a, b = run_dirs
    for name in ("constants.json", "certificate.json", "shocks.csv", "gap.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_quadratic_control_exit_code(tmp_path):
    out = tmp_path / "q"
    assert cli.main(["counterexample", "--flux", "quadratic", "--out", str(out)]) == 3
    assert json.loads((out / "certificate.json").read_text())["status"] == "no_violation_found"


def test_config_errors(tmp_path):
    assert cli.main(["flow", "--epsilon", "0", "--out", str(tmp_path / "f")]) == 1
    assert cli.main(["counterexample", "--t-end", "50", "--out", str(tmp_path / "c")]) == 1
    assert cli.main(["nonsense"]) == 1
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"schema_version": 1, "bogus": 3}))
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 1
    assert not (tmp_path / "s").exists()
    assert cli.main(["report", "--input", str(tmp_path / "missing"), "--out", str(tmp_path / "r")]) == 4


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema_version": 1, "cells": 200, "t_max": 0.5, "figures": False}))
    out = tmp_path / "s"
    assert cli.main(["solve", "--config", str(cfg), "--cells", "300", "--out", str(out)]) == 0
    params = json.loads((out / "manifest.json").read_text())["parameters"]
    assert params["cells"] == 300 and params["t_max"] == 0.5


def test_solve_verify_report_chain(tmp_path):
    s = tmp_path / "s"
    assert cli.main(["solve", "--flux", "quadratic", "--ic", "riemann", "--cells", "400",
                     "--figures", "false", "--out", str(s)]) == 0
    manifest = json.loads((s / "manifest.json").read_text())
    grid = next(p for p in manifest["artifact_paths"] if p.endswith(".json") and p != "manifest.json")
    v = tmp_path / "v"
    assert cli.main(["verify", "--input", str(s / grid), "--flux", "quadratic", "--out", str(v)]) == 0
    assert "lipschitz" in json.loads((v / "report.json").read_text())
    r = tmp_path / "r"
    assert cli.main(["report", "--input", str(s), "--format", "csv", "--out", str(r)]) == 0
    assert (r / "summary.csv").exists()


def test_flow_linear(tmp_path):
    out = tmp_path / "fl"
    assert cli.main(["flow", "--field", "linear", "--starts=-1:1:5", "--t-max", "0.5",
                     "--figures", "false", "--out", str(out)]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert (out / "ensemble.csv").read_text().splitlines()[0] == "member,t,x,J"
    assert all(d["det_bound_ok"] and d["det_bound_margin"] == 0.0 for d in diag["per_epsilon"].values())


def test_svg_without_shocks():
    sol = build_single_shock_solution(quadratic_flux(), riemann_profile(0.0, 1.0), 1.0)
    svg = reports.characteristics_svg(sol, (-2, 2), 1.0)
    assert svg.startswith("<svg") and 'class="shock"' not in svg


def test_json_helpers():
    text = reports.dump_json({"b": np.float64(1.5), "a": [np.int64(2), float("nan")]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [2, None], "b": 1.5}
    assert reports.config_hash({"x": 1}) == reports.config_hash({"x": 1})
    assert reports.rows_csv(["a", "b"], [(1, 2.5)]).splitlines() == ["a,b", "1,2.5"]
