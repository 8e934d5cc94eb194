"""Independent symbolic oracles for the numeric tests.

Curvature quantities are derived with sympy from analytic metrics, using
the mixed-index curvature formula and exact symbolic differentiation --
a route independent of the package's covariant stencil evaluations.
Everything is lambdified for fast grid evaluation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp


def christoffel_sym(g: sp.Matrix, coords):
    n = len(coords)
    gi = g.inv()
    gam = [[[sp.S.Zero] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                expr = sum(
                    gi[k, l] * (sp.diff(g[j, l], coords[i])
                                + sp.diff(g[i, l], coords[j])
                                - sp.diff(g[i, j], coords[l]))
                    for l in range(n)) / 2
                gam[k][i][j] = sp.simplify(expr)
    return gam


def riemann_mixed_sym(g: sp.Matrix, coords, gam=None):
    """R^k_lij = d_i Gamma^k_jl - d_j Gamma^k_il + Gamma Gamma terms."""
    n = len(coords)
    if gam is None:
        gam = christoffel_sym(g, coords)
    riem = [[[[sp.S.Zero] * n for _ in range(n)] for _ in range(n)]
            for _ in range(n)]
    for k in range(n):
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    expr = (sp.diff(gam[k][j][l], coords[i])
                            - sp.diff(gam[k][i][l], coords[j])
                            + sum(gam[k][i][m] * gam[m][j][l]
                                  - gam[k][j][m] * gam[m][i][l]
                                  for m in range(n)))
                    riem[k][l][i][j] = sp.simplify(expr)
    return riem


def riemann_covariant_sym(g: sp.Matrix, coords, gam=None):
    """R_ijkl by lowering the mixed form: g_im R^m_jkl."""
    n = len(coords)
    mixed = riemann_mixed_sym(g, coords, gam)
    out = [[[[sp.S.Zero] * n for _ in range(n)] for _ in range(n)]
           for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    out[i][j][k][l] = sp.simplify(
                        sum(g[i, m] * mixed[m][j][k][l] for m in range(n)))
    return out


def ricci_and_scalar_sym(g: sp.Matrix, coords, riem=None):
    n = len(coords)
    if riem is None:
        riem = riemann_covariant_sym(g, coords)
    gi = g.inv()
    ricci = [[sp.simplify(sum(gi[i, k] * riem[i][j][k][l] for i in range(n)
                              for k in range(n)))
              for l in range(n)] for j in range(n)]
    scalar = sp.simplify(sum(gi[j, l] * ricci[j][l]
                             for j in range(n) for l in range(n)))
    return ricci, scalar


def lambdify_grid(expr, coords):
    fn = sp.lambdify(coords, expr, "numpy")

    def call(*arrays):
        out = fn(*arrays)
        return np.broadcast_to(np.asarray(out, dtype=float), arrays[0].shape).copy()

    return call


def evaluate_tensor(exprs, coords, arrays):
    """Evaluate a nested list of sympy expressions on coordinate arrays."""
    exprs = np.asarray(exprs, dtype=object)
    shape = exprs.shape
    out = np.empty(arrays[0].shape + shape, dtype=float)
    for idx in np.ndindex(shape):
        out[(Ellipsis,) + idx] = lambdify_grid(exprs[idx], coords)(*arrays)
    return out


# -- concrete metrics ---------------------------------------------------

@lru_cache(maxsize=None)
def polar_plane():
    rho, phi = sp.symbols("rho phi", positive=True)
    g = sp.diag(1, rho ** 2)
    return g, (rho, phi)


@lru_cache(maxsize=None)
def round_sphere(r0: float = 1.0):
    th, ph = sp.symbols("theta phi", positive=True)
    g = sp.diag(sp.Float(r0) ** 2, sp.Float(r0) ** 2 * sp.sin(th) ** 2)
    return g, (th, ph)


@lru_cache(maxsize=None)
def revolution_torus(a: float = 2.0, b: float = 0.5):
    u, v = sp.symbols("u v")
    w = sp.Float(a) + sp.Float(b) * sp.cos(v)
    g = sp.diag(w ** 2, sp.Float(b) ** 2)
    return g, (u, v)


@lru_cache(maxsize=None)
def torus_curvature_pack(a: float = 2.0, b: float = 0.5):
    """Symbolic Gamma/Riemann/Ricci/scalar for the revolution torus."""
    g, coords = revolution_torus(a, b)
    gam = christoffel_sym(g, coords)
    riem = riemann_covariant_sym(g, coords, gam)
    ricci, scalar = ricci_and_scalar_sym(g, coords, riem)
    return g, coords, gam, riem, ricci, scalar


def covariant_second_sym(tensor, g, coords, gam):
    """nabla_a nabla_b T_cd for a rank-2 covariant symbolic tensor."""
    n = len(coords)

    def cov1(t):  # nabla_a T_<lower...>
        rank = len(np.asarray(t, dtype=object).shape)
        t = np.asarray(t, dtype=object)
        out = np.empty((n,) + t.shape, dtype=object)
        for a in range(n):
            for idx in np.ndindex(t.shape):
                expr = sp.diff(t[idx], coords[a])
                for slot in range(rank):
                    for m in range(n):
                        swapped = list(idx)
                        swapped[slot] = m
                        expr -= gam[m][a][idx[slot]] * t[tuple(swapped)]
                out[(a,) + idx] = expr
        return out

    return cov1(cov1(np.asarray(tensor, dtype=object)))


@lru_cache(maxsize=None)
def torus_b_tensor(a: float = 2.0, b: float = 0.5):
    """Symbolic eight-term second-derivative Ricci combination."""
    g, coords, gam, riem, ricci, scalar = torus_curvature_pack(a, b)
    dd = covariant_second_sym(ricci, g, coords, gam)  # [a][b][c][d]
    n = len(coords)
    out = np.empty((n, n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    out[i, j, k, l] = sp.simplify(
                        dd[i][k][l][j] - dd[j][k][l][i]
                        - dd[i][l][k][j] + dd[j][l][k][i]
                        + dd[k][i][j][l] - dd[l][i][j][k]
                        - dd[k][j][i][l] + dd[l][j][i][k])
    return coords, out


@lru_cache(maxsize=None)
def torus_scalar_rate_rhs(a: float = 2.0, b: float = 0.5):
    """Symbolic lap R - 4 RicRic - 2 RiemRiem for the revolution torus."""
    g, coords, gam, riem, ricci, scalar = torus_curvature_pack(a, b)
    n = len(coords)
    gi = g.inv()
    lap = sum(gi[i, j] * (sp.diff(scalar, coords[i], coords[j])
                          - sum(gam[k][i][j] * sp.diff(scalar, coords[k])
                                for k in range(n)))
              for i in range(n) for j in range(n))
    ric_up = [[sum(gi[i, a_] * gi[j, b_] * ricci[a_][b_]
                   for a_ in range(n) for b_ in range(n))
               for j in range(n)] for i in range(n)]
    ric_sq = sum(ricci[i][j] * ric_up[i][j] for i in range(n) for j in range(n))
    riem_up = [[[[sum(gi[i, a_] * gi[j, b_] * gi[k, c_] * gi[l, d_]
                      * riem[a_][b_][c_][d_]
                      for a_ in range(n) for b_ in range(n)
                      for c_ in range(n) for d_ in range(n))
                 for l in range(n)] for k in range(n)]
                for j in range(n)] for i in range(n)]
    riem_sq = sum(riem[i][j][k][l] * riem_up[i][j][k][l]
                  for i in range(n) for j in range(n)
                  for k in range(n) for l in range(n))
    rhs = sp.simplify(lap - 4 * ric_sq - 2 * riem_sq)
    return coords, rhs
