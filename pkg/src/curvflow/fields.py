"""Grid-sampled tensor fields and metric fields.

Data layout: grid axes first, then one axis of length ``dim`` per tensor
index (in the order of ``variances``), then one trailing axis of length
``ambient_dim`` for ambient-valued fields.  All arrays are float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import ChartGrid

COV = "cov"
CON = "con"


class DegenerateMetricError(RuntimeError):
    """Metric is singular (or not positive definite) at a named node."""


class DegenerateEmbeddingError(RuntimeError):
    """Embedding map is rank deficient at a named node."""


@dataclass
class TensorField:
    """Dense tensor field with declared index variances.

    ``symmetry_tags`` lists pairs of index slots; the component array is
    symmetrized over each pair on construction so the declared symmetries
    hold exactly.  Verification code never symmetrizes silently.
    """

    grid: ChartGrid
    variances: tuple[str, ...]
    data: np.ndarray
    ambient_dim: int = 0
    symmetry_tags: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        self.variances = tuple(self.variances)
        if any(v not in (COV, CON) for v in self.variances):
            raise ValueError(f"bad variances {self.variances}")
        expected = self.grid.counts + (self.grid.dim,) * self.rank
        if self.ambient_dim:
            expected = expected + (self.ambient_dim,)
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != expected:
            raise ValueError(
                f"component array has shape {self.data.shape}, "
                f"expected {expected}")
        ng = len(self.grid.counts)
        for i, j in self.symmetry_tags:
            if not (0 <= i < self.rank and 0 <= j < self.rank and i != j):
                raise ValueError(f"bad symmetry tag ({i}, {j})")
            if self.variances[i] != self.variances[j]:
                raise ValueError("symmetry tags must pair equal variances")
            sw = self.data.swapaxes(ng + i, ng + j)
            self.data = 0.5 * (self.data + sw)

    @property
    def rank(self) -> int:
        return len(self.variances)

    def copy(self) -> "TensorField":
        return TensorField(self.grid, self.variances, self.data.copy(),
                           self.ambient_dim)


def scalar_field(grid: ChartGrid, data: np.ndarray) -> TensorField:
    return TensorField(grid, (), data)


@dataclass(frozen=True)
class AmbientSignature:
    """Flat ambient metric ``diag(+-1, ..., +-1)``."""

    diag: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "diag", tuple(int(d) for d in self.diag))
        if any(d not in (1, -1) for d in self.diag):
            raise ValueError(f"signature entries must be +-1, got {self.diag}")

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def is_euclidean(self) -> bool:
        return all(d == 1 for d in self.diag)

    def array(self) -> np.ndarray:
        return np.asarray(self.diag, dtype=np.float64)


def euclidean_signature(n: int) -> AmbientSignature:
    return AmbientSignature((1,) * n)


@dataclass
class EmbeddingField:
    """Grid-sampled ambient coordinates of an embedded chart."""

    grid: ChartGrid
    signature: AmbientSignature
    x: np.ndarray  # shape counts + (N,)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        expected = self.grid.counts + (self.signature.n,)
        if self.x.shape != expected:
            raise ValueError(f"embedding array has shape {self.x.shape}, "
                             f"expected {expected}")
        if self.signature.n < self.grid.dim:
            raise ValueError("ambient dimension must be >= chart dimension")

    @property
    def ambient_dim(self) -> int:
        return self.signature.n


def _det_and_inverse(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodewise determinant and inverse of a (..., n, n) stack.

    Explicit adjugate formulas for n <= 3, pivoted elimination otherwise.
    Singular nodes produce inf/nan entries instead of raising; callers
    decide which region has to be regular.
    """
    n = g.shape[-1]
    if n == 1:
        det = g[..., 0, 0].copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / g
        return det, inv
    if n == 2:
        a, b = g[..., 0, 0], g[..., 0, 1]
        c, d = g[..., 1, 0], g[..., 1, 1]
        det = a * d - b * c
        inv = np.empty_like(g)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv[..., 0, 0] = d / det
            inv[..., 0, 1] = -b / det
            inv[..., 1, 0] = -c / det
            inv[..., 1, 1] = a / det
        return det, inv
    if n == 3:
        c00 = g[..., 1, 1] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 1]
        c01 = g[..., 1, 2] * g[..., 2, 0] - g[..., 1, 0] * g[..., 2, 2]
        c02 = g[..., 1, 0] * g[..., 2, 1] - g[..., 1, 1] * g[..., 2, 0]
        det = g[..., 0, 0] * c00 + g[..., 0, 1] * c01 + g[..., 0, 2] * c02
        cof = np.empty_like(g)
        cof[..., 0, 0] = c00
        cof[..., 1, 0] = c01
        cof[..., 2, 0] = c02
        cof[..., 0, 1] = g[..., 0, 2] * g[..., 2, 1] - g[..., 0, 1] * g[..., 2, 2]
        cof[..., 1, 1] = g[..., 0, 0] * g[..., 2, 2] - g[..., 0, 2] * g[..., 2, 0]
        cof[..., 2, 1] = g[..., 0, 1] * g[..., 2, 0] - g[..., 0, 0] * g[..., 2, 1]
        cof[..., 0, 2] = g[..., 0, 1] * g[..., 1, 2] - g[..., 0, 2] * g[..., 1, 1]
        cof[..., 1, 2] = g[..., 0, 2] * g[..., 1, 0] - g[..., 0, 0] * g[..., 1, 2]
        cof[..., 2, 2] = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = cof / det[..., None, None]
        return det, inv
    det = np.linalg.det(g)
    regular = np.isfinite(det) & (np.abs(det) > 0)
    inv = np.full_like(g, np.nan)
    if regular.any():
        inv[regular] = np.linalg.inv(g[regular])
    return det, inv


class MetricField:
    """Symmetric rank-2 covariant metric with cached inverse/determinant.

    Regularity (nonzero determinant; positive definiteness when requested)
    is enforced on the grid interior only: on ghost grids the halo may
    graze a chart singularity, and halo nodes never feed masked results.
    """

    def __init__(self, g: TensorField, *, positive_definite: bool = False):
        if g.variances != (COV, COV) or g.ambient_dim:
            raise ValueError("metric must be a rank-2 covariant tensor field")
        self.g = TensorField(g.grid, g.variances, g.data,
                             symmetry_tags=((0, 1),))
        self.grid = g.grid
        self.positive_definite = positive_definite
        self._det: np.ndarray | None = None
        self._inv: np.ndarray | None = None
        self._check_regular()

    def _check_regular(self):
        det = self.det
        sl = self.grid.interior_slices()
        det_in = det[sl]
        bad = ~np.isfinite(det_in) | (np.abs(det_in) < 1e-300)
        if self.positive_definite:
            bad |= det_in <= 0.0
            if self.grid.dim >= 2:
                bad |= self.g.data[sl + (0, 0)] <= 0.0
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise DegenerateMetricError(
                f"metric degenerate at interior node {idx} "
                f"(det = {det_in[idx]!r})")

    @property
    def det(self) -> np.ndarray:
        if self._det is None:
            self._det, self._inv = _det_and_inverse(self.g.data)
        return self._det

    @property
    def inverse(self) -> np.ndarray:
        if self._inv is None:
            self._det, self._inv = _det_and_inverse(self.g.data)
        return self._inv

    @property
    def data(self) -> np.ndarray:
        return self.g.data

    def inverse_field(self) -> TensorField:
        return TensorField(self.grid, (CON, CON), self.inverse)

    def min_eigenvalue(self, region: tuple[slice, ...] | None = None) -> float:
        """Smallest metric eigenvalue over a region (default: interior)."""
        sl = region if region is not None else self.grid.interior_slices()
        block = self.g.data[sl]
        if self.grid.dim == 1:
            return float(block[..., 0, 0].min())
        if self.grid.dim == 2:
            a, b, d = block[..., 0, 0], block[..., 0, 1], block[..., 1, 1]
            tr = a + d
            disc = np.sqrt(np.maximum((a - d) ** 2 + 4 * b * b, 0.0))
            return float((0.5 * (tr - disc)).min())
        return float(np.linalg.eigvalsh(block)[..., 0].min())

    def max_inverse_eigenvalue(self) -> float:
        """Largest eigenvalue of the inverse metric over the interior."""
        lam_min = self.min_eigenvalue()
        if lam_min <= 0.0:
            raise DegenerateMetricError(
                "inverse-metric eigenvalue bound needs a positive definite "
                f"metric (min eigenvalue {lam_min})")
        return 1.0 / lam_min
