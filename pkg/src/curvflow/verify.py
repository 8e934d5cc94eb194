"""Verification checks: measured time derivatives vs closed-form rates.

Checks fall into three tiers:

* ``exactness`` -- identities provable from the discrete definitions
  (metric consistency, tangency, the two curvature routes, the metric and
  curvature rate identities, the scalar rate under Ricci flow).  Their
  residuals must shrink under refinement; they calibrate the harness, and
  a gross violation indicates a harness fault.
* ``algebraic`` -- pointwise algebra that holds to roundoff on any
  curvature pack of the right dimension (the 2d/3d/high-d reductions of
  the scalar-rate expression).
* ``reported`` -- closed-form rate expressions for the curvature tensors
  along mean curvature flow (checks ``eq20``/``eq21``/``eq22``).  Both
  sides are computed and reported; the suite never asserts their
  equality, and they never affect exit codes.

Check identifiers (``eq10``, ``eq14``, ``eq17`` ... ``eq25``,
``gauss_equation``, ...) are the stable wire names used in configs and
reports; see the README table for what each one compares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus, embedding as xg
from .calculus import (bianchi_residual_field, christoffel,
                       laplace_beltrami, ricci_and_scalar,
                       ricci_identity_residual_field, riemann_covariant,
                       riemann_mixed, second_covariant_derivative,
                       tensor_laplacian)
from .fields import COV, CON, MetricField, TensorField
from .flow import FlowTrajectory, metric_evolution_rhs
from .grid import ChartGrid
from .scenarios import EMBEDDING, Scenario

#: single-level pass rule for exactness checks:
#: residual_linf <= EXACTNESS_ATOL + EXACTNESS_FACTOR * (h^p + w^2) * scale.
#: This is a gross-fault detector (a wrong sign or factor shows up at the
#: scale of the sides themselves); refinement sweeps do the fine grading.
EXACTNESS_FACTOR = 25.0
EXACTNESS_ATOL = 1e-9

#: algebraic-tier bound on pointwise relative disagreement
ALGEBRAIC_RTOL = 1e-10


# -- curvature pack ---------------------------------------------------------

@dataclass
class CurvaturePack:
    """Metric plus every curvature quantity derived from it."""

    metric: MetricField
    christoffel: TensorField
    riemann: TensorField      # R_ijkl
    ricci: TensorField        # R_jl = g^{ik} R_ijkl
    scalar: TensorField       # R = g^{jl} R_jl

    @property
    def grid(self) -> ChartGrid:
        return self.metric.grid

    @property
    def dim(self) -> int:
        return self.grid.dim


def curvature_pack(m: MetricField) -> CurvaturePack:
    gamma = christoffel(m)
    riem = riemann_covariant(m, gamma)
    ricci, scal = ricci_and_scalar(riem, m)
    return CurvaturePack(m, gamma, riem, ricci, scal)


# -- norms and report entries -------------------------------------------

def masked_norms(data: np.ndarray, grid: ChartGrid) -> tuple[float, float, int]:
    """(L_inf, RMS-over-nodes-and-components, node count) on the report mask."""
    sl = grid.report_slices()
    block = data[sl]
    ngrid = len(grid.counts)
    n_nodes = 1
    for a, c in zip(range(ngrid), block.shape[:ngrid]):
        n_nodes *= c
    linf = float(np.max(np.abs(block))) if block.size else 0.0
    l2 = float(np.sqrt(np.mean(block * block))) if block.size else 0.0
    return linf, l2, n_nodes


@dataclass
class ResidualEntry:
    name: str
    tier: str
    linf: float
    l2: float
    n_nodes: int
    lhs_linf: float | None = None
    lhs_l2: float | None = None
    rhs_linf: float | None = None
    rhs_l2: float | None = None
    passed: bool | None = None
    classification: str | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"tier": self.tier, "linf": self.linf, "l2": self.l2,
               "n_nodes": self.n_nodes}
        for key in ("lhs_linf", "lhs_l2", "rhs_linf", "rhs_l2", "passed",
                    "classification"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.meta:
            out["meta"] = {k: self.meta[k] for k in sorted(self.meta)}
        return out


@dataclass
class ResidualReport:
    scenario: dict
    grid_counts: tuple[int, ...]
    fd_order: int
    dt: float | None = None
    t_check: float | None = None
    entries: dict[str, ResidualEntry] = field(default_factory=dict)
    refinement: dict | None = None

    def add(self, entry: ResidualEntry) -> None:
        self.entries[entry.name] = entry

    def failures(self) -> list[str]:
        return [name for name, e in sorted(self.entries.items())
                if e.passed is False and e.tier in ("exactness", "algebraic")]

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "grid_counts": list(self.grid_counts),
            "fd_order": self.fd_order,
            "entries": {k: self.entries[k].to_dict()
                        for k in sorted(self.entries)},
        }
        if self.dt is not None:
            out["dt"] = self.dt
        if self.t_check is not None:
            out["t_check"] = self.t_check
        if self.refinement is not None:
            out["refinement"] = self.refinement
        return out


def _exactness_tol(grid: ChartGrid, scale: float, window: float = 0.0,
                   overrides: dict | None = None) -> float:
    atol = EXACTNESS_ATOL
    factor = EXACTNESS_FACTOR
    if overrides:
        atol = float(overrides.get("atol", atol))
        factor = float(overrides.get("rtol_factor", factor))
    h = max(grid.spacing)
    return atol + factor * (h ** grid.fd_order + window * window) * scale


# -- closed-form right-hand sides ----------------------------------------

def b_tensor(cp: CurvaturePack) -> TensorField:
    """Eight-term second-derivative combination of the Ricci tensor.

    B_ijkl =   D_ik R_lj - D_jk R_li - D_il R_kj + D_jl R_ki
             + D_ki R_jl - D_li R_jk - D_kj R_il + D_lj R_ik,
    where D_ab = nabla_a nabla_b; it shares the algebraic symmetries of
    the curvature tensor.
    """
    dd = second_covariant_derivative(cp.ricci, cp.christoffel).data
    # dd[..., a, b, c, d] = nabla_a nabla_b R_cd
    def t(pattern):
        return np.einsum(f"...{pattern}->...ijkl", dd)
    out = (t("iklj") - t("jkli") - t("ilkj") + t("jlki")
           + t("kijl") - t("lijk") - t("kjil") + t("ljik"))
    return TensorField(cp.grid, (COV,) * 4, out)


def _raised_ricci(cp: CurvaturePack) -> np.ndarray:
    """R^m_i = g^{ma} R_ai."""
    return np.einsum("...ma,...ai->...mi", cp.metric.inverse, cp.ricci.data)


def rhs_eq18(state) -> TensorField:
    """Rate of the extrinsic curvature tensor under mean curvature flow.

    d/dt R_ijkl = eta(D_ik H, S_jl) + eta(S_ik, D_jl H)
                - eta(D_il H, S_jk) - eta(S_il, D_jk H),
    with H the mean curvature vector and D_ab the covariant Hessian acting
    on each ambient component of H as a scalar.
    """
    e = state.embedding()
    metric = state.metric()
    gamma = christoffel(metric)
    gauss = state.gauss()
    hvec = state.mean_curvature()
    grid = e.grid
    hess = calculus.hessian(hvec.data, grid)  # [..., a, b, A]
    dh = calculus.partials(hvec.data, grid)   # [..., k, A]
    # covariant Hessian of the ambient components of H
    w = hess - np.einsum("...kab,...kA->...abA", gamma.data, dh)
    eta = e.signature.array()
    s = gauss.data

    def pair(x, y, order):
        if order == "ik,jl":
            return np.einsum("...ika,...jla,a->...ijkl", x, y, eta)
        return np.einsum("...ila,...jka,a->...ijkl", x, y, eta)

    out = (pair(w, s, "ik,jl") + pair(s, w, "ik,jl")
           - pair(w, s, "il,jk") - pair(s, w, "il,jk"))
    return TensorField(grid, (COV,) * 4, out)


def rhs_eq20(cp: CurvaturePack, dtg: TensorField) -> TensorField:
    """Closed-form rate of the covariant curvature tensor (reported tier).

    Printed with a factor 2 on the rate; this evaluator returns the full
    right-hand side divided by 2 so every check compares plain d/dt
    quantities.  ``dtg`` supplies the metric rate appearing in the
    lower-order terms.
    """
    g = cp.metric
    gi = g.inverse
    riem = cp.riemann.data
    lap = tensor_laplacian(cp.riemann, g, cp.christoffel).data
    b = b_tensor(cp).data
    rup = _raised_ricci(cp)  # R^m_i
    ric_terms = (np.einsum("...mjkl,...mi->...ijkl", riem, rup)
                 + np.einsum("...imkl,...mj->...ijkl", riem, rup)
                 + np.einsum("...ijml,...mk->...ijkl", riem, rup)
                 + np.einsum("...ijkm,...ml->...ijkl", riem, rup))
    # cross contraction R^m_k^n_i = g^{ma} g^{nb} R_akbi, printed placement
    r_mkni = np.einsum("...ma,...nb,...akbi->...mkni", gi, gi, riem)
    cross = (8.0 * np.einsum("...mkni,...mjnl->...ijkl", r_mkni, riem)
             - 8.0 * np.einsum("...mknj,...minl->...ijkl", r_mkni, riem))
    r_uu = np.einsum("...ma,...nb,...abij->...mnij", gi, gi, riem)
    pair_term = 4.0 * np.einsum("...mnij,...mnkl->...ijkl", r_uu, riem)
    rm1 = np.einsum("...ma,...ajkl->...mjkl", gi, riem)  # R^m_jkl
    dtg_terms = (np.einsum("...mjkl,...im->...ijkl", rm1, dtg.data)
                 - np.einsum("...mikl,...jm->...ijkl", rm1, dtg.data)
                 + np.einsum("...mlij,...km->...ijkl", rm1, dtg.data)
                 - np.einsum("...mkij,...lm->...ijkl", rm1, dtg.data))
    total = 4.0 * lap - b - 4.0 * ric_terms + cross + pair_term + dtg_terms
    return TensorField(cp.grid, (COV,) * 4, 0.5 * total)


def rhs_eq21(cp: CurvaturePack, dtg: TensorField) -> TensorField:
    """Closed-form rate of the Ricci tensor (reported tier; half of the
    printed right-hand side, as for ``rhs_eq20``)."""
    g = cp.metric
    gi = g.inverse
    lap = tensor_laplacian(cp.ricci, g, cp.christoffel).data
    ric_mixed = TensorField(cp.grid, (CON, COV), _raised_ricci(cp))
    dd = second_covariant_derivative(ric_mixed, cp.christoffel).data
    # dd[..., a, b, m, l] = nabla_a nabla_b R^m_l
    div_terms = (np.einsum("...mjml->...jl", dd)
                 + np.einsum("...mlmj->...jl", dd))
    hess_r = calculus.hessian(cp.scalar.data, cp.grid)
    dr = calculus.partials(cp.scalar.data, cp.grid)
    cov_hess_r = hess_r - np.einsum("...kab,...k->...ab", cp.christoffel.data, dr)
    ric_sq = np.einsum("...mj,...ml->...jl", cp.ricci.data, _raised_ricci(cp))
    r_uuu = np.einsum("...ma,...nb,...pc,...abcl->...mnpl", gi, gi, gi,
                      cp.riemann.data)
    riem_sq = np.einsum("...mnpj,...mnpl->...jl", cp.riemann.data, r_uuu)
    rup = _raised_ricci(cp)
    dtg_terms = (np.einsum("...mj,...lm->...jl", rup, dtg.data)
                 + np.einsum("...ml,...jm->...jl", rup, dtg.data))
    total = (2.0 * lap + 2.0 * div_terms - 2.0 * cov_hess_r
             - 8.0 * ric_sq - 4.0 * riem_sq + dtg_terms)
    return TensorField(cp.grid, (COV, COV), 0.5 * total)


def _curvature_invariants(cp: CurvaturePack) -> tuple[np.ndarray, np.ndarray]:
    """(R_ij R^ij, R_ijkl R^ijkl) as scalar arrays."""
    gi = cp.metric.inverse
    ric_up = np.einsum("...ia,...jb,...ab->...ij", gi, gi, cp.ricci.data)
    ric_sq = np.einsum("...ij,...ij->...", cp.ricci.data, ric_up)
    r1 = np.einsum("...ia,...ajkl->...ijkl", gi, cp.riemann.data)
    r2 = np.einsum("...jb,...ibkl->...ijkl", gi, r1)
    r3 = np.einsum("...kc,...ijcl->...ijkl", gi, r2)
    r4 = np.einsum("...ld,...ijkd->...ijkl", gi, r3)
    riem_sq = np.einsum("...ijkl,...ijkl->...", cp.riemann.data, r4)
    return ric_sq, riem_sq


def scalar_laplacian(cp: CurvaturePack) -> np.ndarray:
    return laplace_beltrami(cp.scalar, cp.metric, cp.christoffel).data


def rhs_eq22(cp: CurvaturePack) -> TensorField:
    """Closed-form scalar-curvature rate under mean curvature flow:
    lap R - 4 R_ij R^ij - 2 R_ijkl R^ijkl (reported tier)."""
    ric_sq, riem_sq = _curvature_invariants(cp)
    out = scalar_laplacian(cp) - 4.0 * ric_sq - 2.0 * riem_sq
    return TensorField(cp.grid, (), out)


def rhs_eq23(cp: CurvaturePack) -> TensorField:
    """Two-dimensional reduction: lap R - 4 R^2."""
    if cp.dim != 2:
        raise ValueError(f"rhs_eq23 needs a 2-d pack, got dim {cp.dim}")
    r = cp.scalar.data
    return TensorField(cp.grid, (), scalar_laplacian(cp) - 4.0 * r * r)


def rhs_eq24(cp: CurvaturePack) -> TensorField:
    """Three-dimensional reduction: lap R - 12 [Ric]^2 + 2 R^2."""
    if cp.dim != 3:
        raise ValueError(f"rhs_eq24 needs a 3-d pack, got dim {cp.dim}")
    ric_sq, _ = _curvature_invariants(cp)
    r = cp.scalar.data
    return TensorField(cp.grid, (),
                       scalar_laplacian(cp) - 12.0 * ric_sq + 2.0 * r * r)


def weyl_square(cp: CurvaturePack) -> np.ndarray:
    """Trace-free curvature square via the orthogonal decomposition:
    [Weyl]^2 = RiemRiem - 4/(d-2) RicRic + 2/((d-1)(d-2)) R^2."""
    d = cp.dim
    if d < 3:
        raise ValueError("the trace-free curvature part needs dim >= 3")
    ric_sq, riem_sq = _curvature_invariants(cp)
    r = cp.scalar.data
    return (riem_sq - 4.0 / (d - 2) * ric_sq
            + 2.0 / ((d - 1) * (d - 2)) * r * r)


def rhs_eq25(cp: CurvaturePack) -> TensorField:
    """Dimension d >= 4 reduction:
    lap R - 4d/(d-2) [Ric]^2 + 4/((d-2)(d-1)) R^2 - 2 [Weyl]^2."""
    d = cp.dim
    if d < 4:
        raise ValueError(f"rhs_eq25 needs a pack of dim >= 4, got {d}")
    ric_sq, _ = _curvature_invariants(cp)
    r = cp.scalar.data
    out = (scalar_laplacian(cp) - 4.0 * d / (d - 2) * ric_sq
           + 4.0 / ((d - 2) * (d - 1)) * r * r - 2.0 * weyl_square(cp))
    return TensorField(cp.grid, (), out)


def rhs_eq10(cp: CurvaturePack) -> TensorField:
    """Scalar-curvature rate under Ricci flow: lap R + 2 R_ij R^ij."""
    ric_sq, _ = _curvature_invariants(cp)
    return TensorField(cp.grid, (), scalar_laplacian(cp) + 2.0 * ric_sq)


# -- snapshot quantity recipes and time differencing -------------------------

def _recipe_metric(state) -> np.ndarray:
    return state.metric().data


def _recipe_riemann_extrinsic(state) -> np.ndarray:
    return xg.riemann_extrinsic(state.gauss(), state.scenario.signature).data


def _recipe_riemann(state) -> np.ndarray:
    return curvature_pack(state.metric()).riemann.data


def _recipe_ricci(state) -> np.ndarray:
    return curvature_pack(state.metric()).ricci.data


def _recipe_scalar(state) -> np.ndarray:
    return curvature_pack(state.metric()).scalar.data


RECIPES: dict[str, Callable] = {
    "metric": _recipe_metric,
    "riemann_extrinsic": _recipe_riemann_extrinsic,
    "riemann": _recipe_riemann,
    "ricci": _recipe_ricci,
    "scalar": _recipe_scalar,
}


def fd_time_derivative(traj: FlowTrajectory, quantity: str | Callable,
                       k: int) -> np.ndarray:
    """Centered snapshot difference of a derived quantity at snapshot k.

    (Q_{k+1} - Q_{k-1}) / (2 * stride * dt), second-order accurate in the
    snapshot spacing.
    """
    if not 1 <= k <= len(traj.states) - 2:
        raise ValueError(
            f"snapshot index {k} needs neighbors; trajectory has "
            f"{len(traj.states)} snapshots")
    recipe = RECIPES[quantity] if isinstance(quantity, str) else quantity
    q_next = recipe(traj.states[k + 1])
    q_prev = recipe(traj.states[k - 1])
    return (q_next - q_prev) / (2.0 * traj.snapshot_dt)
