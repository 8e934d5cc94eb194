"""Uniform structured chart grids.

Every field in this package lives on a :class:`ChartGrid`: a uniform,
logically periodic sampling of a coordinate chart.  Two boundary modes
exist:

* ``periodic`` -- the chart is a torus; stencils wrap around.
* ``ghost`` -- the chart is a band (e.g. a colatitude strip that avoids
  the poles of a sphere chart).  The grid stores extra halo nodes on both
  sides of each band axis and stencils still wrap; the halo is filled
  with analytic values by the owning scenario, and the wrap-around only
  ever touches halo nodes that are refilled before use.  Residual norms
  on ghost grids are evaluated on a masked interior that excludes the
  nodes whose stencil chains could see boundary-fill error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

PERIODIC = "periodic"
GHOST = "ghost"

#: number of extra masked stencil widths inside the band interior when
#: computing residual norms on ghost grids
MASK_STENCIL_WIDTHS = 2


def stencil_radius(fd_order: int) -> int:
    if fd_order not in (2, 4):
        raise ValueError(f"fd_order must be 2 or 4, got {fd_order}")
    return 1 if fd_order == 2 else 2


@dataclass(frozen=True)
class ChartGrid:
    """Uniform grid over an ``n``-dimensional coordinate chart.

    ``counts``/``periods``/``origins`` describe the stored nodes, halo
    included for ghost grids: node ``i`` on axis ``a`` sits at
    ``origins[a] + i * spacing[a]`` with ``spacing[a] = periods[a] / counts[a]``.
    ``interior`` selects the physically meaningful band on ghost grids
    (``None`` on periodic grids).
    """

    counts: tuple[int, ...]
    periods: tuple[float, ...]
    origins: tuple[float, ...] = None  # type: ignore[assignment]
    fd_order: int = 2
    boundary: str = PERIODIC
    interior: tuple[slice, ...] | None = field(default=None)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        periods = tuple(float(p) for p in self.periods)
        origins = self.origins
        if origins is None:
            origins = (0.0,) * len(counts)
        origins = tuple(float(o) for o in origins)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "origins", origins)
        if len(counts) < 1:
            raise ValueError("grid must have at least one axis")
        if not (len(counts) == len(periods) == len(origins)):
            raise ValueError("counts, periods and origins must have equal length")
        if any(c < 4 for c in counts):
            raise ValueError(f"every axis needs at least 4 nodes, got {counts}")
        if any(p <= 0.0 for p in periods):
            raise ValueError(f"axis periods must be positive, got {periods}")
        stencil_radius(self.fd_order)
        if self.boundary not in (PERIODIC, GHOST):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if self.boundary == GHOST and self.interior is None:
            raise ValueError("ghost grids need interior band metadata "
                             "(attach it via ghost_band_grid)")
        if self.boundary == PERIODIC and self.interior is not None:
            raise ValueError("periodic grids must not carry interior metadata")

    # -- geometry -----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(p / c for p, c in zip(self.periods, self.counts))

    @property
    def radius(self) -> int:
        """Stencil radius of the configured difference order."""
        return stencil_radius(self.fd_order)

    def axis_coords(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return self.origins[axis] + h * np.arange(self.counts[axis])

    def coord_arrays(self) -> tuple[np.ndarray, ...]:
        """Full coordinate arrays of shape ``counts``, one per axis."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    # -- interior / masking -------------------------------------------

    def interior_slices(self) -> tuple[slice, ...]:
        if self.interior is None:
            return tuple(slice(None) for _ in self.counts)
        return self.interior

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.counts, dtype=bool)
        mask[self.interior_slices()] = True
        return mask

    def report_slices(self) -> tuple[slice, ...]:
        """Interior shrunk by the norm-evaluation margin on ghost axes.

        The margin is ``MASK_STENCIL_WIDTHS`` stencil widths: wide enough
        that no derivative chain used by the verification checks reaches a
        halo node from inside the masked region.
        """
        if self.interior is None:
            return tuple(slice(None) for _ in self.counts)
        margin = MASK_STENCIL_WIDTHS * (2 * self.radius + 1)
        out = []
        for a, s in enumerate(self.interior):
            if s == slice(None):
                out.append(s)
                continue
            lo, hi = s.start or 0, s.stop if s.stop is not None else self.counts[a]
            if hi - lo <= 2 * margin:
                raise ValueError(
                    f"band axis {a} too narrow for norm masking: "
                    f"{hi - lo} interior nodes, margin {margin} per side")
            out.append(slice(lo + margin, hi - margin))
        return tuple(out)


def periodic_grid(counts: Iterable[int], periods: Iterable[float],
                  fd_order: int = 2) -> ChartGrid:
    return ChartGrid(tuple(counts), tuple(periods), fd_order=fd_order)


def ghost_band_grid(counts: Iterable[int],
                    bands: Iterable[tuple[float, float] | None],
                    fd_order: int = 2) -> ChartGrid:
    """Grid over a product of periodic axes and open bands.

    ``bands[a]`` is ``None`` for a periodic axis with period ``2*pi`` span
    semantics supplied by the caller via (lo, hi) = (0, period); for a band
    axis it is the open interval ``(lo, hi)`` that the interior nodes cover
    (cell-centered).  Band axes are extended on both sides by a halo wide
    enough for one right-hand-side stencil evaluation at the interior edge;
    the caller fills halo values analytically.
    """
    counts = tuple(int(c) for c in counts)
    bands = tuple(bands)
    if len(counts) != len(bands):
        raise ValueError("counts and bands must have equal length")
    s = stencil_radius(fd_order)
    halo = 2 * s + 1
    ext_counts, periods, origins, interior = [], [], [], []
    any_band = False
    for c, band in zip(counts, bands):
        if band is None:
            ext_counts.append(c)
            periods.append(2.0 * np.pi)
            origins.append(0.0)
            interior.append(slice(None))
            continue
        any_band = True
        lo, hi = float(band[0]), float(band[1])
        if hi <= lo:
            raise ValueError(f"band must satisfy hi > lo, got {band}")
        if c < 4:
            raise ValueError("band axes need at least 4 interior nodes")
        h = (hi - lo) / c
        ext = c + 2 * halo
        ext_counts.append(ext)
        periods.append(ext * h)
        origins.append(lo + (0.5 - halo) * h)
        interior.append(slice(halo, halo + c))
    if not any_band:
        raise ValueError("ghost_band_grid needs at least one band axis; "
                         "use periodic_grid otherwise")
    return ChartGrid(tuple(ext_counts), tuple(periods), tuple(origins),
                     fd_order=fd_order, boundary=GHOST,
                     interior=tuple(interior))
