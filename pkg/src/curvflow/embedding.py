"""Extrinsic geometry of embedded charts.

An embedding is a grid-sampled map X into a flat ambient space with
signature eta.  Everything here is built from finite differences of X:

* induced metric       g_ij = eta(X_i, X_j)
* second fundamental   S_ij = X_ij - Gamma^k_ij X_k   (ambient valued,
  tangent-orthogonal in the continuum; "Gauss tensor" below)
* curvature            R_ijkl = eta(S_ik, S_jl) - eta(S_il, S_jk)
* mean curvature       H = g^{ij} S_ij = Laplace-Beltrami of X

The curvature computed this way must agree with the metric route of
:mod:`curvflow.calculus` up to discretization error; that equivalence is
one of the shipped verification checks.
"""

from __future__ import annotations

import numpy as np

from . import calculus
from .fields import (COV, CON, DegenerateEmbeddingError, DegenerateMetricError,
                     EmbeddingField, MetricField, TensorField)


def embedding_tangents(e: EmbeddingField) -> np.ndarray:
    """Tangent stack dX[..., i, A] = d_i X^A."""
    return calculus.partials(e.x, e.grid)


def induced_metric(e: EmbeddingField, *, tangents: np.ndarray | None = None,
                   positive_definite: bool | None = None) -> MetricField:
    """Pullback metric g_ij = eta_AB X^A_i X^B_j (exactly symmetric).

    ``positive_definite`` defaults to requiring positivity for Euclidean
    ambient signatures.
    """
    if tangents is None:
        tangents = embedding_tangents(e)
    eta = e.signature.array()
    g = np.einsum("...ia,...ja,a->...ij", tangents, tangents, eta)
    if positive_definite is None:
        positive_definite = e.signature.is_euclidean
    try:
        return MetricField(TensorField(e.grid, (COV, COV), g),
                           positive_definite=positive_definite)
    except DegenerateMetricError as exc:  # degenerate pullback = rank-deficient map
        raise DegenerateEmbeddingError(str(exc)) from exc


def gauss_tensor(e: EmbeddingField, *, metric: MetricField | None = None,
                 gamma: TensorField | None = None) -> TensorField:
    """Ambient-valued second fundamental form S_ij = X_ij - Gamma^k_ij X_k."""
    grid = e.grid
    dx = embedding_tangents(e)
    if metric is None:
        metric = induced_metric(e, tangents=dx)
    if gamma is None:
        gamma = calculus.christoffel(metric)
    xij = calculus.hessian(e.x, grid)  # [..., i, j, A]
    corr = np.einsum("...kij,...ka->...ija", gamma.data, dx)
    return TensorField(grid, (COV, COV), xij - corr,
                       ambient_dim=e.ambient_dim)


def tangency_residual_field(e: EmbeddingField,
                            gauss: TensorField | None = None) -> TensorField:
    """Inner products eta(S_ij, X_k); zero in the continuum."""
    if gauss is None:
        gauss = gauss_tensor(e)
    dx = embedding_tangents(e)
    eta = e.signature.array()
    out = np.einsum("...ija,...ka,a->...ijk", gauss.data, dx, eta)
    return TensorField(e.grid, (COV,) * 3, out)


def riemann_extrinsic(gauss: TensorField, signature) -> TensorField:
    """Curvature from pairwise inner products of the second fundamental form.

    R_ijkl = eta(S_ik, S_jl) - eta(S_il, S_jk); carries the full algebraic
    curvature symmetries exactly because S is exactly symmetric.
    """
    eta = signature.array()
    s = gauss.data
    out = (np.einsum("...ika,...jla,a->...ijkl", s, s, eta)
           - np.einsum("...ila,...jka,a->...ijkl", s, s, eta))
    return TensorField(gauss.grid, (COV,) * 4, out)


def mean_curvature_vector(e: EmbeddingField, *,
                          metric: MetricField | None = None,
                          gauss: TensorField | None = None) -> TensorField:
    """Trace g^{ij} S_ij: the Laplace-Beltrami image of the embedding."""
    if gauss is None:
        gauss = gauss_tensor(e, metric=metric)
    if metric is None:
        metric = induced_metric(e)
    out = np.einsum("...ij,...ija->...a", metric.inverse, gauss.data)
    return TensorField(e.grid, (), out, ambient_dim=e.ambient_dim)
