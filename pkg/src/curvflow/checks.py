"""Named verification checks and their evaluators.

Each check has a stable wire name (used in configs and reports), a tier,
and an evaluation kind:

* ``static``    -- evaluated on a single state (no time derivative),
* ``evolution`` -- compares a snapshot-differenced time derivative against
  a closed-form rate along a trajectory,
* ``algebra``   -- pointwise identity between two closed-form expressions
  on one curvature pack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus, embedding as xg, verify
from .fields import MetricField, TensorField
from .flow import FlowState, FlowTrajectory, metric_evolution_rhs
from .scenarios import EMBEDDING, METRIC, Scenario
from .verify import (ALGEBRAIC_RTOL, CurvaturePack, ResidualEntry,
                     ResidualReport, curvature_pack, fd_time_derivative,
                     masked_norms, _exactness_tol)

STATIC = "static"
EVOLUTION = "evolution"
ALGEBRA = "algebra"


@dataclass(frozen=True)
class CheckDef:
    name: str
    tier: str               # exactness | algebraic | reported
    kind: str               # static | evolution | algebra
    flow: str | None = None  # required trajectory flow for evolution checks
    needs_embedding: bool = False
    description: str = ""


CHECKS: dict[str, CheckDef] = {c.name: c for c in [
    CheckDef("eq12", "exactness", STATIC, needs_embedding=True,
             description="induced metric vs the scenario's exact metric"),
    CheckDef("eq14", "exactness", STATIC, needs_embedding=True,
             description="tangency of the Gauss tensor"),
    CheckDef("gauss_equation", "exactness", STATIC, needs_embedding=True,
             description="extrinsic curvature route vs metric route"),
    CheckDef("ricci_identity", "exactness", STATIC,
             description="covariant-derivative commutator vs curvature"),
    CheckDef("bianchi", "exactness", STATIC,
             description="cyclic first derivative of the curvature tensor"),
    CheckDef("eq17", "exactness", EVOLUTION, flow="mcf", needs_embedding=True,
             description="metric rate vs Gauss-tensor driving term"),
    CheckDef("eq18", "exactness", EVOLUTION, flow="mcf", needs_embedding=True,
             description="extrinsic curvature rate vs mean-curvature Hessians"),
    CheckDef("eq20", "reported", EVOLUTION, flow="mcf", needs_embedding=True,
             description="curvature-tensor rate vs closed-form expression"),
    CheckDef("eq21", "reported", EVOLUTION, flow="mcf", needs_embedding=True,
             description="Ricci rate vs closed-form expression"),
    CheckDef("eq22", "reported", EVOLUTION, flow="mcf", needs_embedding=True,
             description="scalar-curvature rate vs closed-form expression"),
    CheckDef("eq10", "exactness", EVOLUTION, flow="ricci",
             description="scalar-curvature rate identity under Ricci flow"),
    CheckDef("eq23_vs_eq22", "algebraic", ALGEBRA,
             description="2-d reduction equals the general scalar-rate form"),
    CheckDef("eq24_vs_eq22", "algebraic", ALGEBRA,
             description="3-d reduction equals the general scalar-rate form"),
    CheckDef("eq25_vs_eq22", "algebraic", ALGEBRA,
             description="d>=4 reduction equals the general scalar-rate form"),
]}

ALIASES = {"eq23": "eq23_vs_eq22", "eq24": "eq24_vs_eq22",
           "eq25": "eq25_vs_eq22", "tangency": "eq14"}


def resolve_check(name: str) -> CheckDef:
    name = ALIASES.get(name, name)
    if name not in CHECKS:
        known = ", ".join(sorted(CHECKS) + sorted(ALIASES))
        raise ValueError(f"unknown check {name!r}; known checks: {known}")
    return CHECKS[name]


def _test_covector(grid) -> TensorField:
    """Deterministic smooth covector used by the commutator check.

    Integer wavenumbers keep it periodic on periodic axes; band axes accept
    any smooth function.
    """
    coords = grid.coord_arrays()
    d = grid.dim
    comps = []
    for j in range(d):
        nxt = coords[(j + 1) % d]
        comps.append(np.sin(coords[j] + 0.2 * (j + 1)) + 0.3 * np.cos(2.0 * nxt))
    return TensorField(grid, ("cov",), np.stack(comps, axis=-1))


# -- static checks -----------------------------------------------------------

def eval_static_check(name: str, state: FlowState,
                      overrides: dict | None = None) -> ResidualEntry:
    cd = resolve_check(name)
    grid = state.scenario.grid
    ov = (overrides or {}).get(cd.name)
    if cd.name == "eq12":
        if state.scenario.exact_metric is None:
            return ResidualEntry(cd.name, cd.tier, 0.0, 0.0, 0,
                                 meta={"skipped": "scenario has no exact metric"})
        exact = state.scenario.exact_metric(grid)
        got = state.metric().data
        linf, l2, nn = masked_norms(got - exact, grid)
        scale = float(np.max(np.abs(exact[grid.report_slices()])))
        entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                              lhs_linf=float(np.max(np.abs(got[grid.report_slices()]))),
                              rhs_linf=scale)
    elif cd.name == "eq14":
        e = state.embedding()
        gauss = state.gauss()
        res = xg.tangency_residual_field(e, gauss)
        linf, l2, nn = masked_norms(res.data, grid)
        dx = xg.embedding_tangents(e)
        scale = (float(np.max(np.abs(gauss.data[grid.report_slices()])))
                 * float(np.max(np.abs(dx[grid.report_slices()]))))
        entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                              meta={"scale": scale})
    elif cd.name == "gauss_equation":
        r_ext = xg.riemann_extrinsic(state.gauss(), state.scenario.signature)
        r_int = curvature_pack(state.metric()).riemann
        linf, l2, nn = masked_norms(r_ext.data - r_int.data, grid)
        lhs_linf, lhs_l2, _ = masked_norms(r_ext.data, grid)
        rhs_linf, rhs_l2, _ = masked_norms(r_int.data, grid)
        scale = max(lhs_linf, rhs_linf)
        entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                              lhs_linf=lhs_linf, lhs_l2=lhs_l2,
                              rhs_linf=rhs_linf, rhs_l2=rhs_l2)
        entry.meta["sides"] = "extrinsic (lhs) vs metric route (rhs)"
    elif cd.name == "ricci_identity":
        m = state.metric()
        v = _test_covector(grid)
        res = calculus.ricci_identity_residual_field(v, m)
        gamma = calculus.christoffel(m)
        dd = calculus.second_covariant_derivative(v, gamma)
        linf, l2, nn = masked_norms(res.data, grid)
        scale = float(np.max(np.abs(dd.data[grid.report_slices()])))
        entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                              meta={"scale": scale})
    elif cd.name == "bianchi":
        m = state.metric()
        pack = curvature_pack(m)
        dr = calculus.covariant_derivative(pack.riemann, pack.christoffel)
        res = (dr.data
               + np.einsum("...jkilm->...ijklm", dr.data)
               + np.einsum("...kijlm->...ijklm", dr.data))
        linf, l2, nn = masked_norms(res, grid)
        scale = float(np.max(np.abs(dr.data[grid.report_slices()])))
        entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                              meta={"scale": scale})
    else:
        raise ValueError(f"{cd.name} is not a static check")
    scale = entry.meta.get("scale")
    if scale is None:
        scale = max(entry.lhs_linf or 0.0, entry.rhs_linf or 0.0)
    entry.passed = entry.linf <= _exactness_tol(grid, max(scale, 1.0), 0.0, ov)
    return entry


# -- algebraic checks ---------------------------------------------------------

_ALGEBRA_RHS = {"eq23_vs_eq22": (verify.rhs_eq23, 2, 2),
                "eq24_vs_eq22": (verify.rhs_eq24, 3, 3),
                "eq25_vs_eq22": (verify.rhs_eq25, 4, None)}


def eval_algebra_check(name: str, pack: CurvaturePack,
                       overrides: dict | None = None) -> ResidualEntry:
    cd = resolve_check(name)
    fn, dmin, dmax = _ALGEBRA_RHS[cd.name]
    d = pack.dim
    if d < dmin or (dmax is not None and d > dmax):
        raise ValueError(f"check {cd.name} needs dimension "
                         f"{dmin}{'' if dmax == dmin else '+'} packs, got {d}")
    reduced = fn(pack).data
    general = verify.rhs_eq22(pack).data
    grid = pack.grid
    linf, l2, nn = masked_norms(reduced - general, grid)
    lhs_linf, lhs_l2, _ = masked_norms(reduced, grid)
    rhs_linf, rhs_l2, _ = masked_norms(general, grid)
    scale = max(lhs_linf, rhs_linf)
    rel = linf / scale if scale > 0 else 0.0
    rtol = ALGEBRAIC_RTOL
    ov = (overrides or {}).get(cd.name)
    if ov and "rtol" in ov:
        rtol = float(ov["rtol"])
    entry = ResidualEntry(cd.name, cd.tier, linf, l2, nn,
                          lhs_linf=lhs_linf, lhs_l2=lhs_l2,
                          rhs_linf=rhs_linf, rhs_l2=rhs_l2,
                          passed=bool(rel <= rtol or scale < 1e-14),
                          meta={"relative": rel})
    return entry


# -- evolution checks ---------------------------------------------------------

def _entry_from_sides(cd: CheckDef, lhs: np.ndarray, rhs: np.ndarray,
                      grid, window: float, ov: dict | None,
                      name: str | None = None) -> ResidualEntry:
    linf, l2, nn = masked_norms(lhs - rhs, grid)
    lhs_linf, lhs_l2, _ = masked_norms(lhs, grid)
    rhs_linf, rhs_l2, _ = masked_norms(rhs, grid)
    entry = ResidualEntry(name or cd.name, cd.tier, linf, l2, nn,
                          lhs_linf=lhs_linf, lhs_l2=lhs_l2,
                          rhs_linf=rhs_linf, rhs_l2=rhs_l2)
    if cd.tier == "exactness":
        scale = max(lhs_linf, rhs_linf, 1.0)
        entry.passed = linf <= _exactness_tol(grid, scale, window, ov)
    return entry


def eval_evolution_check(name: str, traj: FlowTrajectory, k: int,
                         overrides: dict | None = None) -> list[ResidualEntry]:
    cd = resolve_check(name)
    if cd.kind != EVOLUTION:
        raise ValueError(f"{cd.name} is not an evolution check")
    if cd.flow != traj.flow:
        raise ValueError(f"check {cd.name} needs a {cd.flow} trajectory, "
                         f"got {traj.flow}")
    state = traj.states[k]
    grid = traj.scenario.grid
    window = traj.snapshot_dt
    ov = (overrides or {}).get(cd.name)
    entries: list[ResidualEntry] = []

    if cd.name == "eq17":
        lhs = fd_time_derivative(traj, "metric", k)
        rhs = metric_evolution_rhs(state.embedding()).data
        entries.append(_entry_from_sides(cd, lhs, rhs, grid, window, ov))
    elif cd.name == "eq18":
        lhs = fd_time_derivative(traj, "riemann_extrinsic", k)
        rhs = verify.rhs_eq18(state).data
        entries.append(_entry_from_sides(cd, lhs, rhs, grid, window, ov))
    elif cd.name in ("eq20", "eq21"):
        pack = curvature_pack(state.metric())
        fn = verify.rhs_eq20 if cd.name == "eq20" else verify.rhs_eq21
        recipe = "riemann" if cd.name == "eq20" else "ricci"
        lhs = fd_time_derivative(traj, recipe, k)
        dtg_gauss = metric_evolution_rhs(state.embedding())
        rhs = fn(pack, dtg_gauss).data
        main = _entry_from_sides(cd, lhs, rhs, grid, window, ov)
        main.meta["metric_rate_source"] = "gauss"
        if cd.name == "eq20":
            main.meta["cross_contraction"] = \
                "R^m_k^n_i = g^{ma} g^{nb} R_akbi, contracted with R_mjnl"
        entries.append(main)
        # same check with the snapshot-differenced metric rate substituted
        dtg_fd = TensorField(grid, ("cov", "cov"),
                             fd_time_derivative(traj, "metric", k))
        alt = _entry_from_sides(cd, lhs, fn(pack, dtg_fd).data, grid, window,
                                ov, name=f"{cd.name}_fd_dtg")
        alt.meta["metric_rate_source"] = "snapshot_fd"
        entries.append(alt)
    elif cd.name == "eq22":
        pack = curvature_pack(state.metric())
        lhs = fd_time_derivative(traj, "scalar", k)
        rhs = verify.rhs_eq22(pack).data
        entries.append(_entry_from_sides(cd, lhs, rhs, grid, window, ov))
    elif cd.name == "eq10":
        pack = curvature_pack(state.metric())
        lhs = fd_time_derivative(traj, "scalar", k)
        rhs = verify.rhs_eq10(pack).data
        entries.append(_entry_from_sides(cd, lhs, rhs, grid, window, ov))
    else:
        raise ValueError(f"unhandled evolution check {cd.name}")
    return entries


def run_evolution_checks(traj: FlowTrajectory, k: int, which,
                         overrides: dict | None = None) -> ResidualReport:
    """Evaluate named checks at snapshot ``k`` of a trajectory.

    Static and algebra checks are evaluated on the snapshot state (the
    metric-oracle comparison always uses the initial snapshot, where the
    oracle lives); evolution checks difference the neighboring snapshots.
    """
    scenario = traj.scenario
    report = ResidualReport(scenario=scenario.identity(),
                            grid_counts=scenario.grid.counts,
                            fd_order=scenario.grid.fd_order,
                            dt=traj.dt,
                            t_check=traj.states[k].t)
    pack = None
    for raw in which:
        cd = resolve_check(raw)
        if cd.needs_embedding and scenario.kind != EMBEDDING:
            raise ValueError(f"check {cd.name} needs an embedding scenario")
        if cd.kind == EVOLUTION:
            for entry in eval_evolution_check(cd.name, traj, k, overrides):
                report.add(entry)
        elif cd.kind == STATIC:
            state = traj.states[0] if cd.name == "eq12" else traj.states[k]
            report.add(eval_static_check(cd.name, state, overrides))
        else:
            if pack is None:
                pack = curvature_pack(traj.states[k].metric())
            report.add(eval_algebra_check(cd.name, pack, overrides))
    return report


def initial_state(scenario: Scenario) -> FlowState:
    """A t=0 snapshot of a scenario, for static and algebra checks."""
    if scenario.kind == EMBEDDING:
        data = scenario.initial_embedding
        if scenario.fill_embedding is not None:
            data = scenario.fill_embedding(data)
        return FlowState(0.0, EMBEDDING, data.copy(), scenario)
    data = scenario.initial_metric
    if scenario.fill_metric is not None:
        data = scenario.fill_metric(data)
    return FlowState(0.0, METRIC, data.copy(), scenario)


def run_static_checks(scenario: Scenario, which,
                      overrides: dict | None = None) -> ResidualReport:
    """Evaluate static/algebra checks on a scenario's initial state."""
    state = initial_state(scenario)
    report = ResidualReport(scenario=scenario.identity(),
                            grid_counts=scenario.grid.counts,
                            fd_order=scenario.grid.fd_order)
    pack = None
    for raw in which:
        cd = resolve_check(raw)
        if cd.kind == EVOLUTION:
            raise ValueError(f"check {cd.name} needs a trajectory")
        if cd.needs_embedding and scenario.kind != EMBEDDING:
            raise ValueError(f"check {cd.name} needs an embedding scenario")
        if cd.kind == STATIC:
            report.add(eval_static_check(cd.name, state, overrides))
        else:
            if pack is None:
                pack = curvature_pack(state.metric())
            report.add(eval_algebra_check(cd.name, pack, overrides))
    return report
