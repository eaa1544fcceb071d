"""Command line driver: ``hjselect {counterexample,solve,flow,verify,report}``.

Parameters come from built-in defaults, then a flat JSON config file
(``--config``), then explicit flags.  Every run writes into a temporary
directory that replaces ``--out`` only when the run completes.

Exit codes: 0 success, 1 configuration, 2 numerical failure, 3 no entropy
violation found, 4 input/output.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import reports
from .entropy import entropy_certificate
from .errors import ConfigError, HJSelectError, NoViolationFound, NumericalError
from .flow import linear_field, flow_diagnostics, integrate_flow
from .flux import PiecewiseCubicFlux, flux_by_name, paper_argmax, theta_slice, theta_slice_analysis
from .front_tracking import (
    build_counterexample,
    paper_constants,
    rh_residual,
)
from .profiles import (
    PiecewiseLinearProfile,
    build_initial_profile,
    compression_profile,
    riemann_profile,
)
from .regularity import grid_from_function, regularity_report
from .studies import convex_control_solution, flow_study, hj_pair, l1_gap
from .viscosity import CorrespondenceAnchor, GridSolution, cl_to_hj, godunov_solve

log = logging.getLogger("hjselect")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NO_VIOLATION, EXIT_IO = 0, 1, 2, 3, 4

DEFAULTS: dict[str, dict] = {
    "counterexample": {
        "mode": "paper", "dt": 1e-3, "t_end": None, "flux": "paper",
        "cells_per_unit": 50, "shock_stride": 10, "figures": True,
    },
    "solve": {
        "flux": "quadratic", "ic": "riemann", "L": None, "t_max": 1.0, "cells": 1000,
        "cfl": 0.45, "domain": None, "frames": 11, "csv_stride": 1, "figures": True,
    },
    "flow": {
        "field": "counterexample", "epsilon": [0.2, 0.1, 0.05], "starts": "-4:4:33",
        "t_max": 0.5, "dt": None, "k": 0.7, "figures": True,
    },
    "verify": {"input": None, "flux": "paper", "shock_radius": None},
    "report": {"input": None, "format": "json"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat JSON config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for sampled probes")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="hjselect", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("counterexample", parents=[common], help="build and certify the non-entropy solution")
    c.add_argument("--mode", choices=("paper", "detect"))
    c.add_argument("--dt", type=float)
    c.add_argument("--t-end", dest="t_end", type=float)
    c.add_argument("--flux", choices=("paper", "quadratic"))
    c.add_argument("--cells-per-unit", dest="cells_per_unit", type=int)
    c.add_argument("--shock-stride", dest="shock_stride", type=int)
    c.add_argument("--figures", type=_bool)

    s = sub.add_parser("solve", parents=[common], help="Godunov reference solution")
    s.add_argument("--flux", help="paper, quadratic or a flux JSON file")
    s.add_argument("--ic", help="riemann, compression, paper or a profile JSON file")
    s.add_argument("--L", dest="L", type=float, help="plateau length for --ic paper")
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--cells", type=int)
    s.add_argument("--cfl", type=float)
    s.add_argument("--domain", type=_float_list, help="x_min,x_max")
    s.add_argument("--frames", type=int)
    s.add_argument("--csv-stride", dest="csv_stride", type=int)
    s.add_argument("--figures", type=_bool)

    f = sub.add_parser("flow", parents=[common], help="mollified characteristic flows and diagnostics")
    f.add_argument("--field", choices=("counterexample", "linear"))
    f.add_argument("--epsilon", type=_float_list)
    f.add_argument("--starts", help="lo:hi:n, random:lo:hi:n or a comma list")
    f.add_argument("--t-max", dest="t_max", type=float)
    f.add_argument("--dt", type=float)
    f.add_argument("--k", type=float, help="rate of the linear field b = -k x")
    f.add_argument("--figures", type=_bool)

    v = sub.add_parser("verify", parents=[common], help="regularity report for a grid JSON")
    v.add_argument("--input", help="GridSolution JSON")
    v.add_argument("--flux", help="paper, quadratic or a flux JSON file")
    v.add_argument("--shock-radius", dest="shock_radius", type=float)

    r = sub.add_parser("report", parents=[common], help="re-emit artifacts of an earlier run")
    r.add_argument("--input", help="run directory containing manifest.json")
    r.add_argument("--format", choices=("csv", "json", "svg"))
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags; unknown config keys are rejected."""
    params = dict(DEFAULTS[args.command])
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {cfg_path} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a flat JSON object")
        version = cfg.pop("schema_version", reports.SCHEMA_VERSION)
        if version != reports.SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        cfg.pop("subcommand", None)
        for key in ("out", "seed"):
            if key in cfg and not hasattr(args, key):
                setattr(args, key, cfg.pop(key))
            cfg.pop(key, None)
        unknown = set(cfg) - set(params)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        params.update(cfg)
    for key in params:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


def _flux_from(name: str) -> tuple[PiecewiseCubicFlux, str]:
    if name in ("paper", "quadratic"):
        return flux_by_name(name), name
    with open(name) as fh:
        return PiecewiseCubicFlux.from_json(fh.read()), Path(name).stem


def _positive(params: dict, *keys: str):
    for k in keys:
        v = params.get(k)
        if v is None or not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise ConfigError(f"{k} must be a positive number, got {v!r}")


def _write(tmp: Path, name: str, text: str, paths: list[str]):
    (tmp / name).write_text(text)
    paths.append(name)


def _apply_threads():
    raw = os.environ.get("HJSELECT_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"HJSELECT_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("HJSELECT_THREADS must be at least 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# -- subcommands -------------------------------------------------------------------


def run_counterexample_cmd(params: dict, tmp: Path) -> reports.ExperimentManifest:
    _positive(params, "dt", "cells_per_unit", "shock_stride")
    if params["t_end"] is not None:
        _positive(params, "t_end")
    if params["dt"] > 1e-3:
        raise ConfigError("dt must not exceed 1e-3")
    paths: list[str] = []
    manifest = reports.ExperimentManifest("counterexample", dict(params))

    if params["flux"] == "quadratic":
        sol = convex_control_solution(t_end=params["t_end"] or 4.0, dt=params["dt"])
        _write(tmp, "shocks.csv", reports.shocks_csv(sol, params["shock_stride"]), paths)
        _write(tmp, "constants.json", reports.constants_json(sol, {"rh_residual": rh_residual(sol)}), paths)
        try:
            entropy_certificate(sol)
        except NoViolationFound as exc:
            _write(tmp, "certificate.json",
                   reports.dump_json({"status": "no_violation_found", "message": str(exc)}), paths)
            manifest.status = "no_violation_found"
            manifest.derived_constants = dict(sol.derived_constants)
            manifest.artifact_paths = paths
            return manifest
        raise NumericalError("convex control produced an entropy violation")

    sol = build_counterexample(dt=params["dt"], mode=params["mode"], t_end=params["t_end"])
    d = sol.derived_constants
    if d["t3"] is None or d["t3"] > sol.t_end:
        raise ConfigError(f"t_end={sol.t_end} ends before the right state reaches the maximizer of H")
    cert = entropy_certificate(sol)
    rh = rh_residual(sol)
    L, t3, t1 = d["L"], d["t3"], d["t1"]

    # Godunov reference and the HJ gap f - u
    domain = (-4.0, L + 1.0 + 0.6 * sol.t_end + 4.0)
    times = sorted({round(t1, 12), round(cert.onset_time, 12), round(t3, 12)})
    f, u, u_grid, v_grid = hj_pair(sol, domain, max(times), params["cells_per_unit"], times)
    window = (-3.0, L - 1.0)
    gaps = {repr(t): l1_gap(sol, v_grid, t, *window) for t in times}
    xs = u_grid.x[(u_grid.x > domain[0] + 1.0) & (u_grid.x < domain[1] - 1.0)]
    gap_curves = {t: f(t, xs) - u(t, xs) for t in times}

    # regularity of f in a box around the surviving shock at t3
    z_c = float(sol.shock("C").position(t3))
    h = 0.01
    box_times = t3 + h * np.arange(5)
    if box_times[-1] > sol.t_end:
        box_times = t3 - h * np.arange(5)[::-1]
    grid = grid_from_function(f, box_times, z_c - 4.0, h, int(round(8.0 / h)) + 1)
    reg = regularity_report(grid, sol.flux,
                            lambda t: [float(s.position(t)) for s in sol.alive_shocks(t)])

    extra = {"rh_residual": rh, "t_end": sol.t_end, "conventions": {
        "t3": "state reading: first time the right state of shock C equals the maximizer of H on [1/2, 3/2]",
        "launch": ("shocks A, B start at (t0, -x0), (t0, x0); characteristics already cross from t_c, "
                   "so the solution is not evaluated on (t_c, t0)") if sol.mode == "paper"
                  else "shocks A, B start at the first characteristic crossing t_c",
    }}
    _write(tmp, "shocks.csv", reports.shocks_csv(sol, params["shock_stride"]), paths)
    _write(tmp, "constants.json", reports.constants_json(sol, extra), paths)
    _write(tmp, "certificate.json", reports.certificate_json(cert), paths)
    early = characteristics_window(sol)
    _write(tmp, "characteristics.svg", reports.characteristics_svg(sol, **early), paths)
    _write(tmp, "characteristics_full.svg",
           reports.characteristics_svg(sol, x_range=(-4.0, L + 6.0), t_max=sol.t_end), paths)
    _write(tmp, "regularity.json", reports.dump_json(reg.to_dict()), paths)
    _write(tmp, "gap.csv", reports.rows_csv(("t", "l1_gap_v"), [(float(t), g) for t, g in gaps.items()]), paths)
    if params["figures"]:
        reports.plot_gap(tmp / "gap.png", xs, gap_curves, title="tracked f minus Godunov-reference u")
        reports.plot_flux(tmp / "flux.png", sol.flux, argmax=paper_argmax(sol.flux))
        reports.plot_theta(tmp / "theta.png", theta_slice, theta_slice_analysis(1001))
        paths += ["gap.png", "flux.png", "theta.png"]
    manifest.derived_constants = {**d, "certificate_margin": cert.margin, "rh_residual": rh}
    manifest.artifact_paths = paths
    return manifest


def characteristics_window(sol) -> dict:
    d = sol.derived_constants
    return {"x_range": (-4.0, d["L"] + 2.0), "t_max": min(sol.t_end, 1.5 * d["t1"])}


def _initial_profile(params: dict) -> tuple[PiecewiseLinearProfile, str]:
    ic = params["ic"]
    if ic == "riemann":
        return riemann_profile(1.0, 0.0), "riemann"
    if ic == "compression":
        return compression_profile(), "compression"
    if ic == "paper":
        L = params["L"]
        if L is None:
            L = float(paper_constants()["a"]) * 79.0 / 11.0
        return build_initial_profile(L), "paper"
    with open(ic) as fh:
        return PiecewiseLinearProfile.from_dict(json.load(fh)), Path(ic).stem


def run_solve_cmd(params: dict, tmp: Path) -> reports.ExperimentManifest:
    _positive(params, "t_max", "cells", "cfl", "frames", "csv_stride")
    flux, flux_id = _flux_from(params["flux"])
    v0, ic_id = _initial_profile(params)
    domain = params["domain"]
    if domain is None:
        knots = v0._x
        reach = flux.max_abs_derivative(*v0.value_range) * params["t_max"] + 1.0
        domain = [float(knots[0]) - reach, float(knots[-1]) + reach]
    if len(domain) != 2 or not domain[0] < domain[1]:
        raise ConfigError(f"domain must be x_min,x_max with x_min < x_max, got {domain}")
    times = np.linspace(0.0, params["t_max"], params["frames"])[1:]
    g = godunov_solve(flux, v0, domain, params["t_max"], params["cells"], cfl=params["cfl"],
                      save_times=times, flux_id=flux_id)
    paths: list[str] = []
    _write(tmp, "solution.json", g.to_json(), paths)
    _write(tmp, "solution.csv", g.to_csv(stride=params["csv_stride"]), paths)
    if params["figures"]:
        reports.plot_frames(tmp / "frames.png", g.x, {float(t): g.values[n] for n, t in enumerate(g.times)})
        paths.append("frames.png")
    manifest = reports.ExperimentManifest("solve", {**params, "domain": list(domain), "ic_id": ic_id})
    manifest.derived_constants = {"dx": g.dx, "dt": g.dt, "mass_ledger_error": g.ledger_error}
    manifest.artifact_paths = paths
    return manifest


def _parse_starts(text, seed: int) -> np.ndarray:
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    parts = str(text).split(":")
    try:
        if parts[0] == "random" and len(parts) == 4:
            rng = np.random.default_rng(seed)
            return np.sort(rng.uniform(float(parts[1]), float(parts[2]), int(parts[3])))
        if len(parts) == 3:
            return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
        return np.asarray(_float_list(str(text)), dtype=float)
    except ValueError as exc:
        raise ConfigError(f"bad starts value {text!r}") from exc


def run_flow_cmd(params: dict, tmp: Path, seed: int) -> reports.ExperimentManifest:
    eps = [float(e) for e in params["epsilon"] or []]
    if not eps or any(not (e > 0 and math.isfinite(e)) for e in eps):
        raise ConfigError(f"epsilon must be a non-empty list of positive numbers, got {eps}")
    _positive(params, "t_max")
    if params["dt"] is not None:
        _positive(params, "dt")
    starts = _parse_starts(params["starts"], seed)
    if starts.size < 2:
        raise ConfigError("need at least two start points")
    paths: list[str] = []
    ens_rows, member_rows, res_rows = [], [], []
    diag_out: dict = {}
    ensembles: dict = {}
    kept = None
    if params["field"] == "linear":
        k = float(params["k"])
        field = linear_field(k)
        for e in eps:
            field.epsilon = e
            ens = integrate_flow(field, starts, params["t_max"], dt=params["dt"] or 1e-2)
            ensembles[e] = ens
            diag_out[repr(e)] = flow_diagnostics(ens, None, None, flux_by_name("quadratic"), k).to_dict()
        summary = {"field": "linear", "k": k}
    else:
        sol = build_counterexample(dt=1e-3, mode="detect", t_end=params["t_max"] + 0.1)
        study = flow_study(sol, eps, starts, params["t_max"], dt=params["dt"])
        ensembles = study.ensembles
        kept = study.kept
        for e in study.epsilons:
            diag_out[repr(e)] = study.diagnostics[e].to_dict()
            for m, x0 in enumerate(starts):
                res_rows.append((e, float(x0), float(study.residuals[e][m])))
        summary = study.summary()
        summary.pop("diagnostics")
    member = 0
    for e, ens in ensembles.items():
        for m in range(ens.n_members):
            member_rows.append((member, e, float(ens.starts[m]), bool(kept[m]) if kept is not None else True))
            for n, t in enumerate(ens.times):
                ens_rows.append((member, float(t), float(ens.trajectories[m, n]), float(ens.jacobian_dets[m, n])))
            member += 1
    _write(tmp, "ensemble.csv", reports.rows_csv(("member", "t", "x", "J"), ens_rows), paths)
    _write(tmp, "members.csv", reports.rows_csv(("member", "epsilon", "start", "kept"), member_rows), paths)
    _write(tmp, "residuals.csv", reports.rows_csv(("epsilon", "start", "residual"), res_rows), paths)
    _write(tmp, "diagnostics.json", reports.dump_json({"per_epsilon": diag_out, "summary": summary}), paths)
    if params["figures"]:
        reports.plot_trajectories(tmp / "trajectories.png", ensembles, kept)
        paths.append("trajectories.png")
    manifest = reports.ExperimentManifest("flow", {**params, "starts": starts.tolist(), "seed": seed})
    manifest.derived_constants = summary
    manifest.artifact_paths = paths
    return manifest


def run_verify_cmd(params: dict, tmp: Path) -> reports.ExperimentManifest:
    if not params["input"]:
        raise ConfigError("verify needs --input grid.json")
    flux, _ = _flux_from(params["flux"])
    with open(params["input"]) as fh:
        g = GridSolution.from_json(fh.read())
    if g.kind == "cell_average":
        anchor = CorrespondenceAnchor(g.x_min + 0.5 * g.dx, 0.0, float(g.values[0, 0]))
        g = cl_to_hj(g, anchor, flux)
    shocks = g.metadata.get("shocks")
    positions = None
    if shocks:
        positions = _shock_lookup(shocks)
    report = regularity_report(g, flux, positions, params["shock_radius"])
    paths: list[str] = []
    _write(tmp, "report.json", reports.dump_json(report.to_dict()), paths)
    manifest = reports.ExperimentManifest("verify", dict(params))
    manifest.derived_constants = report.to_dict()
    manifest.artifact_paths = paths
    return manifest


def _shock_lookup(shocks: dict) -> Callable[[float], list[float]]:
    """Shock positions from grid metadata {label: {"t": [...], "z": [...]}}."""

    def at(t: float) -> list[float]:
        out = []
        for s in shocks.values():
            ts = np.asarray(s["t"], dtype=float)
            if ts[0] <= t <= ts[-1]:
                out.append(float(np.interp(t, ts, np.asarray(s["z"], dtype=float))))
        return out

    return at


def run_report_cmd(params: dict, tmp: Path) -> reports.ExperimentManifest:
    if not params["input"]:
        raise ConfigError("report needs --input RUN_DIR")
    run = Path(params["input"])
    manifest = reports.ExperimentManifest.from_json((run / "manifest.json").read_text())
    paths: list[str] = []
    fmt = params["format"]
    constants = {}
    if (run / "constants.json").exists():
        constants = json.loads((run / "constants.json").read_text())
    if fmt == "json":
        _write(tmp, "summary.json", reports.dump_json({"manifest": json.loads(manifest.to_json()),
                                                       "constants": constants}), paths)
    elif fmt == "csv":
        flat = _flatten(manifest.derived_constants)
        _write(tmp, "summary.csv", reports.rows_csv(("key", "value"), sorted(flat.items())), paths)
    else:
        if manifest.subcommand != "counterexample" or manifest.parameters.get("flux") != "paper":
            raise ConfigError("svg reports need a paper-flux counterexample run")
        p = manifest.parameters
        sol = build_counterexample(dt=p["dt"], mode=p["mode"], t_end=p["t_end"])
        _write(tmp, "characteristics.svg",
               reports.characteristics_svg(sol, **characteristics_window(sol)), paths)
    out = reports.ExperimentManifest("report", dict(params))
    out.derived_constants = {"source_config_hash": manifest.config_hash}
    out.artifact_paths = paths
    return out


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


# -- entry point -------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        _apply_threads()
        params = resolve_config(args)
        seed = int(getattr(args, "seed", 0) or 0)
        out = getattr(args, "out", None) or f"hjselect-{args.command}"
        start = time.perf_counter()
        with reports.atomic_output_dir(out) as tmp:
            if args.command == "counterexample":
                manifest = run_counterexample_cmd(params, tmp)
            elif args.command == "solve":
                manifest = run_solve_cmd(params, tmp)
            elif args.command == "flow":
                manifest = run_flow_cmd(params, tmp, seed)
            elif args.command == "verify":
                manifest = run_verify_cmd(params, tmp)
            else:
                manifest = run_report_cmd(params, tmp)
            manifest.parameters.setdefault("seed", seed)
            manifest.wall_time_s = time.perf_counter() - start
            manifest.artifact_paths.append("manifest.json")
            (tmp / "manifest.json").write_text(manifest.to_json())
        print(f"{args.command}: wrote {out}")
        if manifest.status == "no_violation_found":
            print("no entropy violation found", file=sys.stderr)
            return EXIT_NO_VIOLATION
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoViolationFound as exc:
        print(f"no entropy violation found: {exc}", file=sys.stderr)
        return EXIT_NO_VIOLATION
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, HJSelectError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
