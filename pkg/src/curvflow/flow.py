"""Explicit time integration of the geometric flows.

Two flows are integrated, both with explicit schemes (forward Euler or
classical RK4) under the parabolic step-size restriction:

* mean curvature flow on embeddings:  dX/dt = Laplace-Beltrami(X),
* Ricci flow on metrics:              dg_ij/dt = -2 R_ij.

Trajectories store full state snapshots at a fixed step stride; the
verification layer differences three consecutive snapshots to measure
time derivatives.  On band charts the halo is refilled from the scenario
once per stage, then once more after the accepted step so stored
snapshots always carry consistent halos.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus, embedding as xg
from .fields import (COV, DegenerateEmbeddingError, DegenerateMetricError,
                     EmbeddingField, MetricField, TensorField)
from .grid import GHOST
from .scenarios import EMBEDDING, METRIC, Scenario

#: refuse to integrate past this fraction of an oracle-known extinction time
EXTINCTION_GUARD = 0.8


class FlowConfigError(ValueError):
    """Invalid integrator configuration (bad dt, guarded t_end, ...)."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"            # "explicit_euler" | "rk4"
    dt: float | str = "auto"       # timestep or "auto"
    t_end: float = 0.1
    cfl_safety: float = 0.5
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.scheme not in ("explicit_euler", "rk4"):
            raise FlowConfigError(f"unknown scheme {self.scheme!r}")
        if self.dt != "auto":
            if not isinstance(self.dt, (int, float)) or self.dt <= 0:
                raise FlowConfigError("dt must be positive or 'auto'")
        if self.t_end <= 0:
            raise FlowConfigError("t_end must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise FlowConfigError("cfl_safety must lie in (0, 1]")
        if int(self.snapshot_stride) < 1:
            raise FlowConfigError("snapshot_stride must be >= 1")


@dataclass
class FlowState:
    """One trajectory snapshot.  Derived quantities are memoized."""

    t: float
    kind: str                    # "embedding" | "metric"
    data: np.ndarray
    scenario: Scenario
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def embedding(self) -> EmbeddingField:
        if self.kind != EMBEDDING:
            raise ValueError("snapshot holds a metric, not an embedding")
        if "embedding" not in self._cache:
            self._cache["embedding"] = EmbeddingField(
                self.scenario.grid, self.scenario.signature, self.data)
        return self._cache["embedding"]

    def metric(self) -> MetricField:
        if "metric" not in self._cache:
            if self.kind == EMBEDDING:
                self._cache["metric"] = xg.induced_metric(self.embedding())
            else:
                self._cache["metric"] = MetricField(
                    TensorField(self.scenario.grid, (COV, COV), self.data),
                    positive_definite=True)
        return self._cache["metric"]

    def gauss(self) -> TensorField:
        if "gauss" not in self._cache:
            self._cache["gauss"] = xg.gauss_tensor(
                self.embedding(), metric=self.metric())
        return self._cache["gauss"]

    def mean_curvature(self) -> TensorField:
        if "mcv" not in self._cache:
            self._cache["mcv"] = TensorField(
                self.scenario.grid, (),
                np.einsum("...ij,...ija->...a",
                          self.metric().inverse, self.gauss().data),
                ambient_dim=self.scenario.signature.n)
        return self._cache["mcv"]


@dataclass
class FlowTrajectory:
    scenario: Scenario
    flow: str                    # "mcf" | "ricci"
    config: IntegratorConfig
    dt: float
    states: list[FlowState]
    degenerated: bool = False
    degeneration_info: dict | None = None

    @property
    def snapshot_dt(self) -> float:
        return self.dt * self.config.snapshot_stride

    def __len__(self) -> int:
        return len(self.states)


# -- right-hand sides ----------------------------------------------------

def mcf_rhs(e: EmbeddingField) -> TensorField:
    """Mean curvature flow velocity field: the trace of the Gauss tensor."""
    metric = xg.induced_metric(e)
    gauss = xg.gauss_tensor(e, metric=metric)
    out = np.einsum("...ij,...ija->...a", metric.inverse, gauss.data)
    return TensorField(e.grid, (), out, ambient_dim=e.ambient_dim)


def metric_evolution_rhs(e: EmbeddingField) -> TensorField:
    """Rate of change of the induced metric under mean curvature flow.

    dg_ij/dt = -2 eta(Laplace-Beltrami X, S_ij); exactly symmetric.
    """
    metric = xg.induced_metric(e)
    gauss = xg.gauss_tensor(e, metric=metric)
    mcv = np.einsum("...ij,...ija->...a", metric.inverse, gauss.data)
    eta = e.signature.array()
    out = -2.0 * np.einsum("...a,...ija,a->...ij", mcv, gauss.data, eta)
    return TensorField(e.grid, (COV, COV), out)


def ricci_rhs(m: MetricField) -> np.ndarray:
    """Ricci flow velocity: -2 R_ij."""
    gamma = calculus.christoffel(m)
    riem = calculus.riemann_covariant(m, gamma)
    ricci, _ = calculus.ricci_and_scalar(riem, m)
    return -2.0 * ricci.data


# -- step-size heuristic ---------------------------------------------------

def suggest_dt(state: EmbeddingField | MetricField,
               cfl_safety: float = 0.5) -> float:
    """Explicit-diffusion step bound for the flows.

    cfl_safety * min_axis h_axis^2 / (2 n lambda_max), with lambda_max the
    largest inverse-metric eigenvalue over the grid interior.
    """
    if isinstance(state, EmbeddingField):
        metric = xg.induced_metric(state)
    else:
        metric = state
    grid = metric.grid
    lam = metric.max_inverse_eigenvalue()
    h2 = min(h * h for h in grid.spacing)
    return cfl_safety * h2 / (2.0 * grid.dim * lam)


def stability_bound(state) -> float:
    return suggest_dt(state, cfl_safety=1.0)


# -- steppers ---------------------------------------------------------------

def _euler_step(y, dt, rhs, prepare):
    y = prepare(y)
    return y + dt * rhs(y)


def _rk4_step(y, dt, rhs, prepare):
    y0 = prepare(y)
    k1 = rhs(y0)
    k2 = rhs(prepare(y0 + 0.5 * dt * k1))
    k3 = rhs(prepare(y0 + 0.5 * dt * k2))
    k4 = rhs(prepare(y0 + dt * k3))
    return y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS: dict[str, Callable] = {
    "explicit_euler": _euler_step,
    "rk4": _rk4_step,
}


def ricci_flow_step(m: MetricField, dt: float,
                    scheme: str = "explicit_euler") -> MetricField:
    """One explicit step of the Ricci flow on a metric field."""
    if scheme not in _STEPPERS:
        raise FlowConfigError(f"unknown scheme {scheme!r}")

    def rhs(gdata):
        return ricci_rhs(MetricField(TensorField(m.grid, (COV, COV), gdata),
                                     positive_definite=True))

    out = _STEPPERS[scheme](m.data, dt, rhs, lambda y: y)
    return MetricField(TensorField(m.grid, (COV, COV), out),
                       positive_definite=True)


# -- trajectory integration --------------------------------------------------

def _resolve_dt_steps(scenario: Scenario, flow: str, state0,
                      config: IntegratorConfig) -> tuple[float, int]:
    t_ext = scenario.extinction_time(flow)
    if t_ext is not None and config.t_end > EXTINCTION_GUARD * t_ext:
        raise FlowConfigError(
            f"t_end = {config.t_end} exceeds the extinction guard "
            f"{EXTINCTION_GUARD:.0%} * {t_ext} = {EXTINCTION_GUARD * t_ext} "
            f"for scenario {scenario.name!r} under {flow}")
    bound = stability_bound(state0)
    if config.dt == "auto":
        dt = suggest_dt(state0, config.cfl_safety)
    else:
        dt = float(config.dt)
        if dt > bound:
            raise FlowConfigError(
                f"dt = {dt} exceeds the explicit stability bound {bound:.6e}; "
                f"suggested dt = {suggest_dt(state0, config.cfl_safety):.6e}")
    steps = max(1, int(np.ceil(config.t_end / dt - 1e-12)))
    # land exactly on t_end and on a snapshot-stride boundary
    stride = int(config.snapshot_stride)
    steps = int(np.ceil(steps / stride)) * stride
    dt = config.t_end / steps
    return dt, steps


def _degeneration_check(kind: str, scenario: Scenario, data: np.ndarray) -> str | None:
    sl = scenario.grid.interior_slices()
    if not np.isfinite(data[sl]).all():
        return "non-finite state values"
    try:
        if kind == EMBEDDING:
            xg.induced_metric(EmbeddingField(scenario.grid, scenario.signature, data))
        else:
            MetricField(TensorField(scenario.grid, (COV, COV), data),
                        positive_definite=True)
    except (DegenerateMetricError, DegenerateEmbeddingError) as exc:
        return str(exc)
    return None


def _integrate(scenario: Scenario, flow: str, config: IntegratorConfig) -> FlowTrajectory:
    if flow == "mcf":
        if scenario.kind != EMBEDDING:
            raise FlowConfigError(
                f"scenario {scenario.name!r} has no embedding; "
                "mean curvature flow needs one")
        kind = EMBEDDING
        data = scenario.initial_embedding.copy()
        fill = scenario.fill_embedding

        def rhs(x):
            return mcf_rhs(EmbeddingField(scenario.grid, scenario.signature, x)).data

        state0 = EmbeddingField(scenario.grid, scenario.signature, data)
    elif flow == "ricci":
        kind = METRIC
        if scenario.initial_metric is None:
            raise FlowConfigError(f"scenario {scenario.name!r} has no metric state")
        data = scenario.initial_metric.copy()
        fill = scenario.fill_metric

        def rhs(g):
            return ricci_rhs(MetricField(TensorField(scenario.grid, (COV, COV), g),
                                         positive_definite=True))

        state0 = MetricField(TensorField(scenario.grid, (COV, COV), data),
                             positive_definite=True)
    else:
        raise FlowConfigError(f"unknown flow {flow!r}")

    if scenario.grid.boundary == GHOST and fill is None:
        raise FlowConfigError(
            f"scenario {scenario.name!r} runs on a band chart but provides "
            "no halo fill for this flow")
    prepare = fill if fill is not None else (lambda y: y)
    step = _STEPPERS[config.scheme]
    dt, steps = _resolve_dt_steps(scenario, flow, state0, config)
    stride = int(config.snapshot_stride)

    data = prepare(data)
    states = [FlowState(0.0, kind, data.copy(), scenario)]
    traj = FlowTrajectory(scenario, flow, config, dt, states)
    for k in range(1, steps + 1):
        try:
            data = step(data, dt, rhs, prepare)
            data = prepare(data)
            reason = _degeneration_check(kind, scenario, data)
        except (DegenerateMetricError, DegenerateEmbeddingError) as exc:
            reason = str(exc)
        if reason is not None:
            traj.degenerated = True
            traj.degeneration_info = {"step": k, "t": k * dt, "reason": reason}
            break
        if k % stride == 0:
            states.append(FlowState(k * dt, kind, data.copy(), scenario))
    return traj


def integrate_mcf(scenario: Scenario, config: IntegratorConfig) -> FlowTrajectory:
    """Mean curvature flow trajectory of a scenario's embedding."""
    return _integrate(scenario, "mcf", config)


def integrate_ricci_flow(scenario: Scenario, config: IntegratorConfig) -> FlowTrajectory:
    """Ricci flow trajectory of a scenario's metric state."""
    return _integrate(scenario, "ricci", config)
