"""Batch front end: ``run``, ``verify`` and ``sweep`` commands.

Configs are JSON documents; outputs are deterministic CSV/JSON files plus
binary snapshots (see README for the schemas).  Exit codes:

* 0 -- success,
* 2 -- configuration error (bad document, unknown scenario/check, guarded
  t_end, unstable dt, too few sweep levels),
* 3 -- mid-run degeneration (partial outputs are kept, plus a marker file),
* 4 -- an exactness- or algebraic-tier check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import checks as checks_mod
from . import reporting
from .checks import EVOLUTION, resolve_check, run_evolution_checks, run_static_checks
from .convergence import convergence_study
from .fields import DegenerateEmbeddingError, DegenerateMetricError
from .flow import (FlowConfigError, FlowTrajectory, IntegratorConfig,
                   integrate_mcf, integrate_ricci_flow)
from .scenarios import EMBEDDING, Scenario, ScenarioError, make_scenario
from .verify import curvature_pack, masked_norms


class ConfigError(ValueError):
    pass


_CONFIG_ERRORS = (ConfigError, ScenarioError, FlowConfigError, ValueError,
                  KeyError, TypeError, OSError, json.JSONDecodeError)


def load_config(path: str, args) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config document must be an object")
    if getattr(args, "out", None):
        cfg["out"] = args.out
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "fd_order", None) is not None:
        cfg["fd_order"] = args.fd_order
    cfg.setdefault("seed", 0)
    cfg.setdefault("fd_order", 2)
    if "out" not in cfg:
        raise ConfigError("config needs an 'out' directory "
                          "(or pass --out on the command line)")
    if cfg["fd_order"] not in (2, 4):
        raise ConfigError("fd_order must be 2 or 4")
    if "scenario" not in cfg or "name" not in cfg["scenario"]:
        raise ConfigError("config needs scenario: {name, params}")
    return cfg


def build_scenario(cfg: dict) -> Scenario:
    sc_cfg = cfg["scenario"]
    params = dict(sc_cfg.get("params", {}))
    if sc_cfg["name"] == "random_metric_torus":
        params.setdefault("seed", cfg["seed"])
    counts = None
    if "grid" in cfg and "counts" in cfg["grid"]:
        counts = tuple(int(c) for c in cfg["grid"]["counts"])
    return make_scenario(sc_cfg["name"], params, counts=counts,
                         fd_order=cfg["fd_order"])


def integrator_config(cfg: dict) -> IntegratorConfig:
    icfg = dict(cfg.get("integrator", {}))
    dt = icfg.get("dt", "auto")
    return IntegratorConfig(
        scheme=icfg.get("scheme", "rk4"),
        dt=dt if dt == "auto" else float(dt),
        t_end=float(icfg.get("t_end", 0.1)),
        cfl_safety=float(icfg.get("cfl_safety", 0.5)),
        snapshot_stride=int(icfg.get("snapshot_stride", 1)),
    )


def _resolve_flow(cfg: dict, scenario: Scenario) -> str:
    flow = cfg.get("flow")
    if flow is None:
        flow = "mcf" if scenario.kind == EMBEDDING else "ricci"
    if flow not in ("mcf", "ricci"):
        raise ConfigError(f"unknown flow {flow!r}")
    return flow


def _resolved_config_doc(cfg: dict, scenario: Scenario,
                         traj: FlowTrajectory | None = None) -> dict:
    doc = json.loads(json.dumps(cfg, sort_keys=True))
    doc["scenario"] = scenario.identity()
    doc["grid"] = {"counts": list(scenario.grid.counts),
                   "spacing": list(scenario.grid.spacing),
                   "boundary": scenario.grid.boundary}
    if traj is not None:
        doc.setdefault("integrator", {})
        doc["integrator"]["resolved_dt"] = traj.dt
        doc["integrator"]["scheme"] = traj.config.scheme
        doc["integrator"]["t_end"] = traj.config.t_end
        doc["integrator"]["snapshot_stride"] = traj.config.snapshot_stride
        doc["flow"] = traj.flow
    return doc


# -- run ---------------------------------------------------------------------

def _series_rows(traj: FlowTrajectory) -> tuple[list[str], list[list]]:
    scenario = traj.scenario
    grid = scenario.grid
    sl = grid.report_slices()
    interior = grid.interior_slices()
    radius_keys: list[str] = []
    if scenario.radius_observables is not None:
        radius_keys = sorted(scenario.radius_observables(
            traj.states[0].kind, traj.states[0].data))
    header = ["t"] + radius_keys + ["R_min", "R_max", "R_mean", "min_eig_g"]
    if traj.flow == "mcf":
        header.append("mean_curvature_sup")
    rows = []
    for state in traj.states:
        pack_scalar = curvature_pack(state.metric()).scalar.data[sl]
        row: list = [state.t]
        if radius_keys:
            obs = scenario.radius_observables(state.kind, state.data)
            row += [obs[k] for k in radius_keys]
        row += [float(pack_scalar.min()), float(pack_scalar.max()),
                float(pack_scalar.mean()),
                state.metric().min_eigenvalue(interior)]
        if traj.flow == "mcf":
            row.append(float(np.max(np.abs(state.mean_curvature().data[sl]))))
        rows.append(row)
    return header, rows


def cmd_run(cfg: dict) -> int:
    scenario = build_scenario(cfg)
    flow = _resolve_flow(cfg, scenario)
    icfg = integrator_config(cfg)
    integrate = integrate_mcf if flow == "mcf" else integrate_ricci_flow
    traj = integrate(scenario, icfg)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    reporting.write_json(os.path.join(out, "config_resolved.json"),
                         _resolved_config_doc(cfg, scenario, traj))
    header, rows = _series_rows(traj)
    reporting.write_csv(os.path.join(out, "series.csv"), header, rows)
    for idx, state in enumerate(traj.states):
        sig = scenario.signature.diag if scenario.signature else None
        reporting.write_snapshot(
            os.path.join(out, f"snap_{idx:06d}.bin"),
            kind=state.kind, t=state.t, counts=scenario.grid.counts,
            data=state.data,
            signature=sig if state.kind == EMBEDDING else None)
    if traj.degenerated:
        reporting.write_json(os.path.join(out, "degenerated.marker"),
                             traj.degeneration_info)
        print(f"run degenerated at step {traj.degeneration_info['step']} "
              f"(t = {traj.degeneration_info['t']:.6g}); partial outputs in {out}")
        return 3
    print(f"run complete: {len(traj.states)} snapshots, dt = {traj.dt:.6g}, "
          f"outputs in {out}")
    return 0


# -- verify --------------------------------------------------------------

def _print_report(report) -> None:
    print(f"{'check':<16} {'tier':<10} {'L_inf':>12} {'L2':>12} "
          f"{'lhs_linf':>12} {'rhs_linf':>12} status")
    for name in sorted(report.entries):
        e = report.entries[name]
        def fmt(x):
            return f"{x:>12.4e}" if x is not None else f"{'-':>12}"
        if e.passed is None:
            status = "reported"
        else:
            status = "pass" if e.passed else "FAIL"
        print(f"{name:<16} {e.tier:<10} {fmt(e.linf)} {fmt(e.l2)} "
              f"{fmt(e.lhs_linf)} {fmt(e.rhs_linf)} {status}")


def cmd_verify(cfg: dict) -> int:
    scenario = build_scenario(cfg)
    check_names = [resolve_check(c).name for c in cfg.get("checks", [])]
    if not check_names:
        raise ConfigError("verify config needs a non-empty 'checks' list")
    overrides = cfg.get("thresholds")
    evolution = [c for c in check_names if resolve_check(c).kind == EVOLUTION]
    traj = None
    if evolution:
        flows = {resolve_check(c).flow for c in evolution}
        if len(flows) > 1:
            raise ConfigError(f"checks need different flows: {sorted(flows)}")
        flow = flows.pop()
        if cfg.get("flow") is not None and cfg["flow"] != flow:
            raise ConfigError(f"config flow {cfg['flow']!r} conflicts with "
                              f"checks needing {flow!r}")
        icfg = integrator_config(cfg)
        integrate = integrate_mcf if flow == "mcf" else integrate_ricci_flow
        traj = integrate(scenario, icfg)
        if traj.degenerated:
            raise ConfigError(
                f"trajectory degenerated mid-run: {traj.degeneration_info}")
        policy = cfg.get("check_snapshot", "middle")
        if policy == "middle":
            k = len(traj.states) // 2
        else:
            k = int(policy)
        k = max(1, min(k, len(traj.states) - 2))
        report = run_evolution_checks(traj, k, check_names, overrides)
    else:
        report = run_static_checks(scenario, check_names, overrides)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    doc = report.to_dict()
    doc["config"] = _resolved_config_doc(cfg, scenario, traj)
    reporting.write_json(os.path.join(out, "report.json"), doc)
    _print_report(report)
    failures = report.failures()
    if failures:
        print(f"FAILED checks: {', '.join(failures)}")
        return 4
    print(f"verify complete: {len(report.entries)} entries, report in {out}")
    return 0


# -- sweep ---------------------------------------------------------------

def cmd_sweep(cfg: dict) -> int:
    levels = cfg.get("levels")
    if not levels or "resolutions" not in levels:
        raise ConfigError("sweep config needs levels: {resolutions, dts}")
    resolutions = levels["resolutions"]
    if len(resolutions) < 3:
        raise ConfigError("a sweep needs at least 3 refinement levels")
    check_names = [resolve_check(c).name for c in cfg.get("checks", [])]
    if not check_names:
        raise ConfigError("sweep config needs a non-empty 'checks' list")
    params = dict(cfg["scenario"].get("params", {}))
    if cfg["scenario"]["name"] == "random_metric_torus":
        params.setdefault("seed", cfg["seed"])
    study = convergence_study(
        cfg["scenario"]["name"], params,
        resolutions, levels.get("dts", "auto"), check_names,
        fd_order=cfg["fd_order"],
        scheme=levels.get("scheme", "rk4"),
        t_end=float(levels.get("t_end", 0.02)),
        cfl_safety=float(levels.get("cfl_safety", 0.5)),
        overrides=cfg.get("thresholds"))
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    header = ["level", "counts", "h_max", "dt", "check", "tier",
              "residual_linf", "residual_l2", "lhs_linf", "rhs_linf",
              "order_step", "order_fit", "classification"]
    rows = []
    for lv in study.levels:
        for name in sorted(lv.entries):
            e = lv.entries[name]
            summ = study.summaries.get(name)
            order_step = summ.order_pairs[lv.level] if summ else None
            rows.append([lv.level, "x".join(str(c) for c in lv.counts),
                         lv.h_max, lv.dt, name, e.tier, e.linf, e.l2,
                         e.lhs_linf, e.rhs_linf, order_step,
                         summ.order_fit if summ else None,
                         summ.classification if summ else None])
    reporting.write_csv(os.path.join(out, "sweep.csv"), header, rows)
    doc = study.to_dict()
    doc["config"] = json.loads(json.dumps(cfg, sort_keys=True))
    reporting.write_json(os.path.join(out, "sweep.json"), doc)
    for name in sorted(study.summaries):
        s = study.summaries[name]
        print(f"{name:<16} {s.tier:<10} order_fit="
              f"{s.order_fit if s.order_fit is not None else float('nan'):.3f} "
              f"classification={s.classification}")
    bad = []
    for name, s in sorted(study.summaries.items()):
        if s.tier == "exactness" and s.classification != "identity":
            bad.append(name)
    for lv in study.levels:
        for name, e in sorted(lv.entries.items()):
            if e.tier == "algebraic" and e.passed is False:
                bad.append(f"{name}@level{lv.level}")
    if bad:
        print(f"FAILED checks: {', '.join(sorted(set(bad)))}")
        return 4
    print(f"sweep complete: {len(study.levels)} levels, outputs in {out}")
    return 0


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvflow",
        description="Geometric-flow runs, verification checks and "
                    "refinement sweeps driven by JSON configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [("run", "integrate a flow and write time series"),
                           ("verify", "evaluate verification checks"),
                           ("sweep", "run a refinement study")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to a JSON config document")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed (overrides config)")
        p.add_argument("--fd-order", dest="fd_order", type=int, choices=(2, 4),
                       help="finite-difference order (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    dispatch = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}
    try:
        cfg = load_config(args.config, args)
        return dispatch[args.command](cfg)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateMetricError, DegenerateEmbeddingError) as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
