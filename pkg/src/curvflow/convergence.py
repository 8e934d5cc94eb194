"""Refinement studies: residual decay orders and classification.

A study reruns a set of checks over a ladder of grid resolutions (and,
for evolution checks, jointly refined timesteps), fits residual decay
orders, and classifies each check:

* ``identity``      -- the residual decays at (at least) the expected
  stencil order minus 0.5, measured across the two finest levels;
* ``plateau``       -- the residual stalls (varies by < 20% across
  levels) while both compared sides converge;
* ``indeterminate`` -- neither pattern.

Only ``identity`` counts as passing for exactness-tier checks; reported-
tier checks are classified but never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .checks import EVOLUTION, resolve_check, run_evolution_checks, run_static_checks
from .flow import IntegratorConfig, integrate_mcf, integrate_ricci_flow
from .scenarios import make_scenario
from .verify import ResidualEntry

#: residuals below this are treated as converged to roundoff
ROUNDOFF_FLOOR = 1e-11


def scenario_dim(name: str, params: dict | None) -> int:
    params = params or {}
    if name == "n_sphere":
        return int(params.get("n", 2))
    if name == "random_metric_torus":
        return int(params.get("d", 2))
    return 2


@dataclass
class LevelResult:
    level: int
    counts: tuple[int, ...]
    h_max: float
    dt: float | None
    t_check: float | None
    entries: dict[str, ResidualEntry]


@dataclass
class CheckSummary:
    name: str
    tier: str
    residuals: list[float]
    order_pairs: list[float | None]
    order_fit: float | None
    classification: str

    def to_dict(self) -> dict:
        return {"tier": self.tier,
                "residuals": self.residuals,
                "order_pairs": self.order_pairs,
                "order_fit": self.order_fit,
                "classification": self.classification}


@dataclass
class StudyResult:
    scenario: dict
    fd_order: int
    checks: list[str]
    levels: list[LevelResult] = field(default_factory=list)
    summaries: dict[str, CheckSummary] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "fd_order": self.fd_order,
            "checks": list(self.checks),
            "levels": [
                {"level": lv.level, "counts": list(lv.counts),
                 "h_max": lv.h_max, "dt": lv.dt, "t_check": lv.t_check,
                 "entries": {k: lv.entries[k].to_dict()
                             for k in sorted(lv.entries)}}
                for lv in self.levels],
            "summaries": {k: self.summaries[k].to_dict()
                          for k in sorted(self.summaries)},
        }


def _fit_order(hs: list[float], residuals: list[float]) -> float | None:
    pts = [(h, r) for h, r in zip(hs, residuals) if r > 0.0]
    if len(pts) < 2:
        return None
    lh = np.log([p[0] for p in pts])
    lr = np.log([p[1] for p in pts])
    slope = float(np.polyfit(lh, lr, 1)[0])
    return slope


def _classify(entryseq: list[ResidualEntry], hs: list[float],
              expected: float) -> CheckSummary:
    name = entryseq[0].name
    tier = entryseq[0].tier
    res = [e.linf for e in entryseq]
    pairs: list[float | None] = [None]
    for i in range(1, len(res)):
        if res[i] > 0 and res[i - 1] > 0:
            pairs.append(math.log(res[i - 1] / res[i])
                         / math.log(hs[i - 1] / hs[i]))
        else:
            pairs.append(None)
    order_fit = _fit_order(hs, res)
    scale = max([max(e.lhs_linf or 0.0, e.rhs_linf or 0.0, 1.0)
                 for e in entryseq])
    if max(res) <= ROUNDOFF_FLOOR * scale:
        return CheckSummary(name, tier, res, pairs, order_fit, "identity")
    finest = pairs[-1]
    if finest is not None and finest >= expected - 0.5:
        return CheckSummary(name, tier, res, pairs, order_fit, "identity")
    spread = (max(res) - min(res)) / max(res) if max(res) > 0 else 0.0
    sides_converge = True
    for attr in ("lhs_linf", "rhs_linf"):
        vals = [getattr(e, attr) for e in entryseq]
        if any(v is None for v in vals):
            continue
        a, b = vals[-2], vals[-1]
        denom = max(abs(a), abs(b), 1e-30)
        if abs(a - b) / denom > 0.1:
            sides_converge = False
    if spread < 0.2 and sides_converge:
        return CheckSummary(name, tier, res, pairs, order_fit, "plateau")
    return CheckSummary(name, tier, res, pairs, order_fit, "indeterminate")


def convergence_study(scenario_name: str, scenario_params: dict | None,
                      resolutions, dts, which, *,
                      fd_order: int = 2, scheme: str = "rk4",
                      t_end: float = 0.02, cfl_safety: float = 0.5,
                      overrides: dict | None = None) -> StudyResult:
    """Run checks over a refinement ladder and classify their residuals.

    ``resolutions`` is a list of per-axis count tuples (plain ints are
    expanded isotropically); ``dts`` is a list of timesteps or "auto" for
    the per-level stability heuristic.  Evolution checks integrate their
    flow to ``t_end`` with snapshot stride 1 and difference at the
    next-to-last snapshot.
    """
    resolutions = list(resolutions)
    if len(resolutions) < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    dim = scenario_dim(scenario_name, scenario_params)
    counts_list = []
    for r in resolutions:
        if isinstance(r, (int, np.integer)):
            counts_list.append((int(r),) * dim)
        else:
            counts_list.append(tuple(int(c) for c in r))
    if dts == "auto":
        dt_list = ["auto"] * len(counts_list)
    else:
        dt_list = list(dts)
        if len(dt_list) != len(counts_list):
            raise ValueError("dts must match the number of levels")

    which = [resolve_check(c).name for c in which]
    flows = {resolve_check(c).flow for c in which
             if resolve_check(c).kind == EVOLUTION}
    flows.discard(None)
    if len(flows) > 1:
        raise ValueError(f"mixed-flow study not supported: {sorted(flows)}")
    flow = flows.pop() if flows else None

    study = StudyResult(
        scenario={"name": scenario_name,
                  "params": dict(scenario_params or {})},
        fd_order=fd_order, checks=list(which))

    for lvl, (counts, dt) in enumerate(zip(counts_list, dt_list)):
        sc = make_scenario(scenario_name, scenario_params, counts=counts,
                           fd_order=fd_order)
        h_max = max(sc.grid.spacing)
        if flow is None:
            report = run_static_checks(sc, which, overrides)
            study.levels.append(LevelResult(lvl, counts, h_max, None, None,
                                            report.entries))
            continue
        cfg = IntegratorConfig(scheme=scheme, dt=dt, t_end=t_end,
                               cfl_safety=cfl_safety, snapshot_stride=1)
        integrate = integrate_mcf if flow == "mcf" else integrate_ricci_flow
        traj = integrate(sc, cfg)
        if traj.degenerated or len(traj.states) < 3:
            raise RuntimeError(
                f"level {lvl}: trajectory unusable for differencing "
                f"({traj.degeneration_info})")
        k = len(traj.states) - 2
        report = run_evolution_checks(traj, k, which, overrides)
        study.levels.append(LevelResult(lvl, counts, h_max, traj.dt,
                                        traj.states[k].t, report.entries))

    hs = [lv.h_max for lv in study.levels]
    expected = min(2, fd_order)
    names = sorted({n for lv in study.levels for n in lv.entries})
    for name in names:
        seq = [lv.entries[name] for lv in study.levels if name in lv.entries]
        if len(seq) == len(study.levels):
            study.summaries[name] = _classify(seq, hs, expected)
    return study
