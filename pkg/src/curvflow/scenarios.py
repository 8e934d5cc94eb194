"""Scenario presets: concrete geometries with analytic oracles.

A scenario bundles a grid, an initial state (embedding map or metric),
optional analytic oracles (exact metric, exact curvature, exact radius
history under a flow), and -- for band charts -- the halo fill rules the
integrator uses.  Shipped presets:

* ``flat_torus(r1, r2)``      -- product of circles in R^4; flat, with an
  exact shrinking-radius solution under mean curvature flow.
* ``torus_of_revolution(a, b)`` -- doughnut in R^3; exact curvature, no
  exact flow solution.
* ``n_sphere(n, r0)``         -- round sphere in R^(n+1) on a colatitude
  band chart; exact shrinking solutions under both flows.
* ``random_metric_torus(d, eps, seed)`` -- synthetic analytic periodic
  metric delta + eps*h(x) with h a seeded trigonometric symmetric field;
  intrinsic-only checks.
* ``plane()``                 -- affine embedding in R^3 on a band chart;
  stationary under mean curvature flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus, embedding as xg
from .fields import (COV, AmbientSignature, EmbeddingField, MetricField,
                     TensorField, euclidean_signature)
from .grid import GHOST, ChartGrid, ghost_band_grid, periodic_grid

EMBEDDING = "embedding"
METRIC = "metric"

#: colatitude half-gap of the sphere band chart
SPHERE_BAND_MARGIN = 0.3


class ScenarioError(ValueError):
    """Invalid scenario name or parameters."""


@dataclass
class Scenario:
    name: str
    params: dict
    grid: ChartGrid
    kind: str
    signature: AmbientSignature | None = None
    initial_embedding: np.ndarray | None = None
    initial_metric: np.ndarray | None = None
    exact_metric: Callable[[ChartGrid], np.ndarray] | None = None
    exact_riemann: Callable[[ChartGrid], np.ndarray] | None = None
    exact_scalar: Callable[[ChartGrid], np.ndarray] | None = None
    radius_oracle: Callable[[str, float], dict | None] | None = None
    mcf_extinction: float | None = None
    ricci_extinction: float | None = None
    fill_embedding: Callable[[np.ndarray], np.ndarray] | None = None
    fill_metric: Callable[[np.ndarray], np.ndarray] | None = None
    radius_observables: Callable[[str, np.ndarray], dict] | None = None

    def embedding(self) -> EmbeddingField:
        if self.initial_embedding is None:
            raise ScenarioError(f"scenario {self.name!r} has no embedding")
        return EmbeddingField(self.grid, self.signature,
                              self.initial_embedding.copy())

    def metric_field(self, data: np.ndarray | None = None) -> MetricField:
        if data is None:
            data = self.initial_metric
        if data is None:
            raise ScenarioError(f"scenario {self.name!r} has no metric state")
        return MetricField(TensorField(self.grid, (COV, COV), data.copy()),
                           positive_definite=True)

    def extinction_time(self, flow: str) -> float | None:
        return self.mcf_extinction if flow == "mcf" else self.ricci_extinction

    def identity(self) -> dict:
        return {"name": self.name,
                "params": {k: self.params[k] for k in sorted(self.params)}}


def _interior_mean(grid: ChartGrid, values: np.ndarray) -> float:
    return float(values[grid.interior_slices()].mean())


def _oracle_gap(grid: ChartGrid, a: np.ndarray, b: np.ndarray) -> float:
    sl = grid.report_slices()
    return float(np.max(np.abs(a[sl] - b[sl])))


def _check_oracles(sc: Scenario) -> None:
    """Constructed state must reproduce its oracles to discretization error.

    This is a construction sanity gate (catches sign/factor mistakes, not
    precision); the convergence suite does the quantitative grading.
    """
    if sc.kind != EMBEDDING:
        return
    h_max = max(sc.grid.spacing)
    p = sc.grid.fd_order
    e = sc.embedding()
    metric = xg.induced_metric(e)
    if sc.exact_metric is not None:
        exact = sc.exact_metric(sc.grid)
        tol = 100.0 * h_max ** p * max(1.0, float(np.max(np.abs(exact)))) + 1e-9
        gap = _oracle_gap(sc.grid, metric.data, exact)
        if gap > tol:
            raise ScenarioError(
                f"{sc.name}: induced metric disagrees with its oracle "
                f"(gap {gap:.3e} > tol {tol:.3e})")
    if sc.exact_riemann is not None:
        gauss = xg.gauss_tensor(e, metric=metric)
        riem = xg.riemann_extrinsic(gauss, sc.signature)
        exact = sc.exact_riemann(sc.grid)
        scale = max(1.0, float(np.max(np.abs(exact))))
        tol = 200.0 * h_max ** p * scale + 1e-9
        gap = _oracle_gap(sc.grid, riem.data, exact)
        if gap > tol:
            raise ScenarioError(
                f"{sc.name}: extrinsic curvature disagrees with its oracle "
                f"(gap {gap:.3e} > tol {tol:.3e})")


# -- flat torus in R^4 ---------------------------------------------------

def flat_torus(r1: float = 1.0, r2: float = 1.0,
               counts: tuple[int, ...] = (64, 64), fd_order: int = 2) -> Scenario:
    if r1 <= 0 or r2 <= 0:
        raise ScenarioError("flat_torus radii must be positive")
    if len(counts) != 2:
        raise ScenarioError("flat_torus is two-dimensional")
    grid = periodic_grid(counts, (2 * np.pi, 2 * np.pi), fd_order)
    u, v = grid.coord_arrays()
    x = np.stack([r1 * np.cos(u), r1 * np.sin(u),
                  r2 * np.cos(v), r2 * np.sin(v)], axis=-1)

    def exact_metric(g: ChartGrid) -> np.ndarray:
        out = np.zeros(g.counts + (2, 2))
        out[..., 0, 0] = r1 * r1
        out[..., 1, 1] = r2 * r2
        return out

    def radius_oracle(flow: str, t: float):
        if flow != "mcf":
            return None
        return {"r1_mean": float(np.sqrt(r1 * r1 - 2 * t)),
                "r2_mean": float(np.sqrt(r2 * r2 - 2 * t))}

    def radius_observables(kind: str, data: np.ndarray) -> dict:
        if kind != EMBEDDING:
            return {}
        return {
            "r1_mean": _interior_mean(grid, np.hypot(data[..., 0], data[..., 1])),
            "r2_mean": _interior_mean(grid, np.hypot(data[..., 2], data[..., 3])),
        }

    sc = Scenario(
        name="flat_torus", params={"r1": r1, "r2": r2}, grid=grid,
        kind=EMBEDDING, signature=euclidean_signature(4),
        initial_embedding=x,
        initial_metric=exact_metric(grid),
        exact_metric=exact_metric,
        exact_riemann=lambda g: np.zeros(g.counts + (2,) * 4),
        exact_scalar=lambda g: np.zeros(g.counts),
        radius_oracle=radius_oracle,
        mcf_extinction=min(r1, r2) ** 2 / 2.0,
        radius_observables=radius_observables,
    )
    _check_oracles(sc)
    return sc


# -- torus of revolution in R^3 ------------------------------------------

def torus_of_revolution(a: float = 2.0, b: float = 0.5,
                        counts: tuple[int, ...] = (64, 64),
                        fd_order: int = 2) -> Scenario:
    if not (a > b > 0):
        raise ScenarioError("torus_of_revolution needs a > b > 0")
    if len(counts) != 2:
        raise ScenarioError("torus_of_revolution is two-dimensional")
    grid = periodic_grid(counts, (2 * np.pi, 2 * np.pi), fd_order)
    u, v = grid.coord_arrays()
    w = a + b * np.cos(v)
    x = np.stack([w * np.cos(u), w * np.sin(u), b * np.sin(v)], axis=-1)

    def exact_metric(g: ChartGrid) -> np.ndarray:
        _, vv = g.coord_arrays()
        ww = a + b * np.cos(vv)
        out = np.zeros(g.counts + (2, 2))
        out[..., 0, 0] = ww * ww
        out[..., 1, 1] = b * b
        return out

    def exact_riemann(g: ChartGrid) -> np.ndarray:
        _, vv = g.coord_arrays()
        ww = a + b * np.cos(vv)
        val = b * np.cos(vv) * ww  # R_uvuv
        out = np.zeros(g.counts + (2,) * 4)
        out[..., 0, 1, 0, 1] = val
        out[..., 1, 0, 1, 0] = val
        out[..., 0, 1, 1, 0] = -val
        out[..., 1, 0, 0, 1] = -val
        return out

    def exact_scalar(g: ChartGrid) -> np.ndarray:
        _, vv = g.coord_arrays()
        return 2.0 * np.cos(vv) / (b * (a + b * np.cos(vv)))

    sc = Scenario(
        name="torus_of_revolution", params={"a": a, "b": b}, grid=grid,
        kind=EMBEDDING, signature=euclidean_signature(3),
        initial_embedding=x,
        initial_metric=exact_metric(grid),
        exact_metric=exact_metric,
        exact_riemann=exact_riemann,
        exact_scalar=exact_scalar,
    )
    _check_oracles(sc)
    return sc


# -- round sphere on a colatitude band chart ------------------------------

def _unit_sphere_map(coords: tuple[np.ndarray, ...]) -> np.ndarray:
    """Unit-sphere embedding; coords = (colatitudes..., azimuth)."""
    comps = []
    prefix = np.ones_like(coords[0])
    for th in coords[:-1]:
        comps.append(prefix * np.cos(th))
        prefix = prefix * np.sin(th)
    comps.append(prefix * np.cos(coords[-1]))
    comps.append(prefix * np.sin(coords[-1]))
    return np.stack(comps, axis=-1)


def _round_metric(coords: tuple[np.ndarray, ...], r_sq: float) -> np.ndarray:
    n = len(coords)
    shape = coords[0].shape
    out = np.zeros(shape + (n, n))
    factor = np.full(shape, r_sq)
    for i in range(n):
        out[..., i, i] = factor
        if i < n - 1:
            factor = factor * np.sin(coords[i]) ** 2
    return out


def n_sphere(n: int = 2, r0: float = 1.0, counts: tuple[int, ...] = (64, 64),
             fd_order: int = 2) -> Scenario:
    n = int(n)
    if n < 1:
        raise ScenarioError("n_sphere needs n >= 1")
    if r0 <= 0:
        raise ScenarioError("n_sphere radius must be positive")
    if len(counts) != n:
        raise ScenarioError(f"n_sphere({n}, ...) needs {n} axis counts")
    if n == 1:
        grid = periodic_grid(counts, (2 * np.pi,), fd_order)
    else:
        bands = [(SPHERE_BAND_MARGIN, np.pi - SPHERE_BAND_MARGIN)] * (n - 1) + [None]
        grid = ghost_band_grid(counts, bands, fd_order)
    coords = grid.coord_arrays()
    omega = _unit_sphere_map(coords)
    interior = grid.interior_mask()

    def fill_embedding(x: np.ndarray) -> np.ndarray:
        # halo = round sphere at the radius measured over the band interior
        r_hat = _interior_mean(grid, np.sqrt((x * x).sum(axis=-1)))
        return np.where(interior[..., None], x, r_hat * omega)

    def fill_metric(g: np.ndarray) -> np.ndarray:
        r_sq = _interior_mean(grid, g[..., 0, 0])
        return np.where(interior[..., None, None], g,
                        _round_metric(coords, r_sq))

    def exact_metric(g: ChartGrid) -> np.ndarray:
        return _round_metric(g.coord_arrays(), r0 * r0)

    def exact_riemann(g: ChartGrid) -> np.ndarray:
        met = exact_metric(g)
        return (np.einsum("...ik,...jl->...ijkl", met, met)
                - np.einsum("...il,...jk->...ijkl", met, met)) / (r0 * r0)

    def radius_oracle(flow: str, t: float):
        if flow == "mcf":
            r_sq = r0 * r0 - 2.0 * n * t
        elif n >= 2:
            r_sq = r0 * r0 - 2.0 * (n - 1) * t
        else:
            return None
        if r_sq <= 0:
            return None
        return {"r_mean": float(np.sqrt(r_sq))}

    def radius_observables(kind: str, data: np.ndarray) -> dict:
        if kind == EMBEDDING:
            return {"r_mean": _interior_mean(grid, np.sqrt((data * data).sum(axis=-1)))}
        return {"r_mean": float(np.sqrt(_interior_mean(grid, data[..., 0, 0])))}

    sc = Scenario(
        name="n_sphere", params={"n": n, "r0": r0}, grid=grid,
        kind=EMBEDDING, signature=euclidean_signature(n + 1),
        initial_embedding=r0 * omega,
        initial_metric=exact_metric(grid),
        exact_metric=exact_metric,
        exact_riemann=exact_riemann,
        exact_scalar=lambda g: np.full(g.counts, n * (n - 1) / (r0 * r0)),
        radius_oracle=radius_oracle,
        mcf_extinction=r0 * r0 / (2.0 * n),
        ricci_extinction=(r0 * r0 / (2.0 * (n - 1)) if n >= 2 else None),
        fill_embedding=fill_embedding,
        fill_metric=fill_metric,
        radius_observables=radius_observables,
    )
    _check_oracles(sc)
    return sc


# -- synthetic random periodic metric -------------------------------------

def _random_trig_components(d: int, seed: int, n_modes: int = 3):
    rng = np.random.default_rng(seed)
    comps = {}
    for i in range(d):
        for j in range(i, d):
            kvecs = rng.integers(-2, 3, size=(n_modes, d))
            for m in range(n_modes):
                while not kvecs[m].any():
                    kvecs[m] = rng.integers(-2, 3, size=d)
            amps = rng.normal(size=n_modes)
            amps = amps / np.abs(amps).sum()  # |h_ij| <= 1 everywhere
            phases = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
            comps[(i, j)] = (kvecs, amps, phases)
    return comps


def random_metric_torus(d: int = 2, eps: float = 0.05, seed: int = 0,
                        counts: tuple[int, ...] | None = None,
                        fd_order: int = 2) -> Scenario:
    d = int(d)
    if d < 1:
        raise ScenarioError("random_metric_torus needs d >= 1")
    if not 0.0 <= eps <= 0.1:
        raise ScenarioError("perturbation amplitude must lie in [0, 0.1] "
                            "to keep the metric positive definite")
    if counts is None:
        # rank-4 work arrays grow as prod(counts) * d^4; keep defaults desk-sized
        counts = (32,) * d if d <= 2 else (12,) * d if d == 3 else (8,) * d
    if len(counts) != d:
        raise ScenarioError(f"random_metric_torus(d={d}) needs {d} axis counts")
    grid = periodic_grid(counts, (2 * np.pi,) * d, fd_order)
    comps = _random_trig_components(d, int(seed))

    def metric_fn(g: ChartGrid) -> np.ndarray:
        coords = g.coord_arrays()
        out = np.zeros(g.counts + (d, d))
        for i in range(d):
            out[..., i, i] = 1.0
        for (i, j), (kvecs, amps, phases) in comps.items():
            h = np.zeros(g.counts)
            for kv, am, ph in zip(kvecs, amps, phases):
                arg = np.full(g.counts, ph)
                for ax in range(d):
                    arg = arg + kv[ax] * coords[ax]
                h += am * np.cos(arg)
            out[..., i, j] += eps * h
            if i != j:
                out[..., j, i] += eps * h
        return out

    sc = Scenario(
        name="random_metric_torus",
        params={"d": d, "eps": eps, "seed": int(seed)},
        grid=grid, kind=METRIC,
        initial_metric=metric_fn(grid),
        exact_metric=metric_fn,
    )
    if eps == 0.0:
        sc.exact_riemann = lambda g: np.zeros(g.counts + (d,) * 4)
        sc.exact_scalar = lambda g: np.zeros(g.counts)
    return sc


# -- stationary plane ------------------------------------------------------

def plane(span: float = 1.0, counts: tuple[int, ...] = (16, 16),
          fd_order: int = 2) -> Scenario:
    if span <= 0:
        raise ScenarioError("plane span must be positive")
    if len(counts) != 2:
        raise ScenarioError("plane is two-dimensional")
    grid = ghost_band_grid(counts, [(0.0, span), (0.0, span)], fd_order)
    u, v = grid.coord_arrays()
    x = np.stack([u, v, np.zeros_like(u)], axis=-1)
    interior = grid.interior_mask()

    def fill_embedding(data: np.ndarray) -> np.ndarray:
        # the plane is the exact stationary solution; refill analytically
        return np.where(interior[..., None], data, x)

    def exact_metric(g: ChartGrid) -> np.ndarray:
        out = np.zeros(g.counts + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        return out

    sc = Scenario(
        name="plane", params={"span": span}, grid=grid,
        kind=EMBEDDING, signature=euclidean_signature(3),
        initial_embedding=x,
        initial_metric=exact_metric(grid),
        exact_metric=exact_metric,
        exact_riemann=lambda g: np.zeros(g.counts + (2,) * 4),
        exact_scalar=lambda g: np.zeros(g.counts),
        fill_embedding=fill_embedding,
    )
    _check_oracles(sc)
    return sc


# -- registry --------------------------------------------------------------

_REGISTRY: dict[str, Callable[..., Scenario]] = {
    "flat_torus": flat_torus,
    "torus_of_revolution": torus_of_revolution,
    "n_sphere": n_sphere,
    "random_metric_torus": random_metric_torus,
    "plane": plane,
}


def scenario_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def make_scenario(name: str, params: dict | None = None,
                  counts: tuple[int, ...] | None = None,
                  fd_order: int = 2) -> Scenario:
    """Build a registered scenario from plain config values."""
    if name not in _REGISTRY:
        raise ScenarioError(
            f"unknown scenario {name!r}; registered: {', '.join(scenario_names())}")
    kwargs = dict(params or {})
    if counts is not None:
        kwargs["counts"] = tuple(int(c) for c in counts)
    kwargs["fd_order"] = fd_order
    try:
        return _REGISTRY[name](**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"bad parameters for scenario {name!r}: {exc}") from exc
