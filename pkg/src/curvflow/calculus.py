"""Finite-difference tensor calculus on chart grids.

Central stencils of order 2 (default) or 4, wrapping periodically.  The
grid carries the difference order; every operator here is a pure function
of immutable field snapshots and is nodewise data-parallel.

Index conventions (all arrays carry grid axes first):

* ``christoffel``:  Gamma[..., k, i, j] = Gamma^k_ij,
  Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij).
* ``riemann_covariant``:  R[..., i, j, k, l] = R_ijkl,
  R_ijkl = 1/2 (dd_il g_jk + dd_jk g_il - dd_ik g_jl - dd_jl g_ik)
           + g_mn (Gamma^m_il Gamma^n_jk - Gamma^m_ik Gamma^n_jl).
* ``riemann_mixed``:  R[..., k, l, i, j] = R^k_lij,
  R^k_lij = d_i Gamma^k_jl - d_j Gamma^k_il
            + Gamma^k_im Gamma^m_jl - Gamma^k_jm Gamma^m_il.
* ``ricci_and_scalar``:  R_jl = g^{ik} R_ijkl,  R = g^{jl} R_jl.

The covariant commutator for a covector reads
[nabla_i, nabla_j] v_k = -R^l_kij v_l with these conventions, and the
lowering of the mixed form reproduces the covariant form up to
discretization error; both facts are exercised by the test suite rather
than assumed.
"""

from __future__ import annotations

import numpy as np

from .fields import COV, CON, MetricField, TensorField
from .grid import ChartGrid


# -- raw stencils ------------------------------------------------------

def _d1(a: np.ndarray, axis: int, h: float, fd_order: int) -> np.ndarray:
    if fd_order == 2:
        return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)
    return (-np.roll(a, -2, axis) + 8.0 * np.roll(a, -1, axis)
            - 8.0 * np.roll(a, 1, axis) + np.roll(a, 2, axis)) / (12.0 * h)


def _d2(a: np.ndarray, axis: int, h: float, fd_order: int) -> np.ndarray:
    if fd_order == 2:
        return (np.roll(a, -1, axis) - 2.0 * a + np.roll(a, 1, axis)) / (h * h)
    return (-np.roll(a, -2, axis) + 16.0 * np.roll(a, -1, axis) - 30.0 * a
            + 16.0 * np.roll(a, 1, axis) - np.roll(a, 2, axis)) / (12.0 * h * h)


def partials(data: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Stack of partial derivatives, new axis inserted after the grid axes.

    Output[..., a, <components>] = d_a data[..., <components>].
    """
    h = grid.spacing
    cols = [_d1(data, a, h[a], grid.fd_order) for a in range(grid.dim)]
    return np.stack(cols, axis=grid.dim)


def hessian(data: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Second partials: output[..., a, b, <comp>] = d_a d_b data.

    Diagonal entries use the compact second-derivative stencil; mixed
    entries compose first derivatives, which commute exactly, so the
    result is exactly symmetric in (a, b).
    """
    h = grid.spacing
    p = grid.fd_order
    n = grid.dim
    firsts = [_d1(data, b, h[b], p) for b in range(n)]
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            if a == b:
                row.append(_d2(data, a, h[a], p))
            elif a < b:
                row.append(_d1(firsts[b], a, h[a], p))
            else:
                row.append(rows[b][a])
        rows.append(row)
    return np.stack([np.stack(r, axis=n) for r in rows], axis=n)


# -- public operators --------------------------------------------------

def partial_derivative(f: TensorField, axis: int) -> TensorField:
    """Componentwise central difference along one chart axis."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for a {g.dim}-d grid")
    out = _d1(f.data, axis, g.spacing[axis], g.fd_order)
    return TensorField(g, f.variances, out, f.ambient_dim)


def christoffel(m: MetricField) -> TensorField:
    """Levi-Civita connection coefficients Gamma^k_ij of a metric field.

    Exactly symmetric in the lower index pair by construction.
    """
    grid = m.grid
    dg = partials(m.data, grid)  # [..., a, i, j] = d_a g_ij
    gi = m.inverse
    gamma = 0.5 * (np.einsum("...kl,...ijl->...kij", gi, dg)
                   + np.einsum("...kl,...jil->...kij", gi, dg)
                   - np.einsum("...kl,...lij->...kij", gi, dg))
    return TensorField(grid, (CON, COV, COV), gamma)


def covariant_derivative(t: TensorField, gamma: TensorField) -> TensorField:
    """Covariant derivative; the new covariant index leads.

    One -Gamma correction per covariant slot and one +Gamma correction per
    contravariant slot; trailing ambient components ride along as scalars.
    """
    grid = t.grid
    if gamma.grid is not grid and gamma.grid != grid:
        raise ValueError("tensor and connection live on different grids")
    if gamma.variances != (CON, COV, COV):
        raise ValueError("gamma must be a connection field Gamma^k_ij")
    ng = grid.dim
    n = grid.dim
    out = partials(t.data, grid)  # grid + (a,) + slots + ambient
    for k, var in enumerate(t.variances):
        # fold every non-contracted component axis into one
        moved = np.moveaxis(t.data, ng + k, -1)
        folded_shape = moved.shape[ng:-1]
        flat = moved.reshape(grid.counts + (-1, n))
        if var == CON:
            corr = np.einsum("...iam,...xm->...xai", gamma.data, flat)
        else:
            corr = np.einsum("...mai,...xm->...xai", gamma.data, flat)
        corr = corr.reshape(grid.counts + folded_shape + (n, n))
        corr = np.moveaxis(corr, -2, ng)          # derivative index first
        corr = np.moveaxis(corr, -1, ng + 1 + k)  # slot index back in place
        out = out + corr if var == CON else out - corr
    return TensorField(grid, (COV,) + t.variances, out, t.ambient_dim)


def riemann_covariant(m: MetricField, gamma: TensorField | None = None) -> TensorField:
    """Completely covariant curvature tensor R_ijkl from the metric.

    Built from second metric derivatives plus Gamma*Gamma terms; the
    discrete result carries the pair and antisymmetry structure of the
    curvature tensor exactly (up to roundoff), because the stencil
    operators commute and the connection is exactly symmetric.
    """
    grid = m.grid
    if gamma is None:
        gamma = christoffel(m)
    hg = hessian(m.data, grid)  # [..., a, b, c, d] = d_a d_b g_cd
    second = 0.5 * (np.einsum("...iljk->...ijkl", hg)
                    + np.einsum("...jkil->...ijkl", hg)
                    - np.einsum("...ikjl->...ijkl", hg)
                    - np.einsum("...jlik->...ijkl", hg))
    low = np.einsum("...mn,...nab->...mab", m.data, gamma.data)  # g_mn Gamma^n_ab
    gg = (np.einsum("...mil,...mjk->...ijkl", low, gamma.data)
          - np.einsum("...mik,...mjl->...ijkl", low, gamma.data))
    return TensorField(grid, (COV,) * 4, second + gg)


def riemann_mixed(m: MetricField, gamma: TensorField | None = None) -> TensorField:
    """Curvature in the mixed form R^k_lij (connection-derivative route)."""
    grid = m.grid
    if gamma is None:
        gamma = christoffel(m)
    dgam = partials(gamma.data, grid)  # [..., a, k, i, j] = d_a Gamma^k_ij
    out = (np.einsum("...ikjl->...klij", dgam)
           - np.einsum("...jkil->...klij", dgam)
           + np.einsum("...kim,...mjl->...klij", gamma.data, gamma.data)
           - np.einsum("...kjm,...mil->...klij", gamma.data, gamma.data))
    return TensorField(grid, (CON, COV, COV, COV), out)


def ricci_and_scalar(riem: TensorField, m: MetricField) -> tuple[TensorField, TensorField]:
    """Ricci tensor and scalar curvature as metric contractions."""
    if riem.variances != (COV,) * 4:
        raise ValueError("expected the completely covariant curvature tensor")
    gi = m.inverse
    ricci = np.einsum("...ik,...ijkl->...jl", gi, riem.data)
    scal = np.einsum("...jl,...jl->...", gi, ricci)
    return (TensorField(m.grid, (COV, COV), ricci),
            TensorField(m.grid, (), scal))


def raise_index(t: TensorField, m: MetricField, slot: int) -> TensorField:
    """Raise one covariant slot with the inverse metric."""
    if t.variances[slot] != COV:
        raise ValueError(f"slot {slot} is already contravariant")
    grid = t.grid
    n = grid.dim
    moved = np.moveaxis(t.data, grid.dim + slot, -1)
    folded = moved.reshape(grid.counts + (-1, n))
    out = np.einsum("...ma,...xa->...xm", m.inverse, folded)
    out = out.reshape(moved.shape)
    out = np.moveaxis(out, -1, grid.dim + slot)
    variances = list(t.variances)
    variances[slot] = CON
    return TensorField(grid, tuple(variances), out, t.ambient_dim)


def laplace_beltrami(f: TensorField, m: MetricField,
                     gamma: TensorField | None = None) -> TensorField:
    """Laplace-Beltrami operator applied per scalar component.

    g^{ij} (d_i d_j f - Gamma^k_ij d_k f); intended for scalar fields and
    ambient-valued fields whose components behave as scalars.
    """
    if f.rank != 0:
        raise ValueError("laplace_beltrami acts on scalar or ambient-valued "
                         "fields; use tensor_laplacian for tensors")
    grid = f.grid
    if gamma is None:
        gamma = christoffel(m)
    n = grid.dim
    comp_shape = f.data.shape[grid.dim:]
    hs = hessian(f.data, grid).reshape(grid.counts + (n, n, -1))
    ps = partials(f.data, grid).reshape(grid.counts + (n, -1))
    w = np.einsum("...ab,...kab->...k", m.inverse, gamma.data)
    out = (np.einsum("...ab,...abx->...x", m.inverse, hs)
           - np.einsum("...k,...kx->...x", w, ps))
    out = out.reshape(grid.counts + comp_shape)
    return TensorField(grid, (), out, f.ambient_dim)


def second_covariant_derivative(t: TensorField, gamma: TensorField) -> TensorField:
    """nabla_a nabla_b t, both new covariant indices leading (a outer)."""
    return covariant_derivative(covariant_derivative(t, gamma), gamma)


def tensor_laplacian(t: TensorField, m: MetricField,
                     gamma: TensorField | None = None) -> TensorField:
    """Trace of the second covariant derivative, g^{ab} nabla_a nabla_b t."""
    if gamma is None:
        gamma = christoffel(m)
    dd = second_covariant_derivative(t, gamma)
    grid = t.grid
    n = grid.dim
    rest = dd.data.shape[grid.dim + 2:]
    flat = dd.data.reshape(grid.counts + (n, n, -1))
    out = np.einsum("...ab,...abx->...x", m.inverse, flat)
    out = out.reshape(grid.counts + rest)
    return TensorField(grid, t.variances, out, t.ambient_dim)


# -- classical identity residuals ---------------------------------------

def ricci_identity_residual_field(v: TensorField, m: MetricField) -> TensorField:
    """Commutator defect of two covariant derivatives on a covector.

    residual_ijk = nabla_i nabla_j v_k - nabla_j nabla_i v_k + R^l_kij v_l,
    which vanishes in the continuum and decays at the stencil order on a
    grid.
    """
    if v.variances != (COV,) or v.ambient_dim:
        raise ValueError("expected a rank-1 covariant field")
    gamma = christoffel(m)
    dd = second_covariant_derivative(v, gamma).data  # [..., i, j, k]
    comm = dd - dd.swapaxes(m.grid.dim, m.grid.dim + 1)
    riem = riemann_covariant(m, gamma)
    rup = np.einsum("...lm,...mkij->...lkij", m.inverse, riem.data)
    corr = np.einsum("...lkij,...l->...ijk", rup, v.data)
    return TensorField(m.grid, (COV,) * 3, comm + corr)


def bianchi_residual_field(riem: TensorField, m: MetricField) -> TensorField:
    """Cyclic first-derivative combination of the curvature tensor.

    residual = nabla_i R_jklm + nabla_j R_kilm + nabla_k R_ijlm.
    """
    gamma = christoffel(m)
    dr = covariant_derivative(riem, gamma).data  # [..., a, i, j, k, l]
    out = (dr
           + np.einsum("...jkilm->...ijklm", dr)
           + np.einsum("...kijlm->...ijklm", dr))
    return TensorField(m.grid, (COV,) * 5, out)
