"""Piecewise-constant permeability sampled at curl (cell-center) locations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    GridTooCoarseError,
    ResolvedGrid,
    Scenario,
    require_valid,
)

# midpoint subsamples per axis for cells near an inclusion boundary
_SUBSAMPLE = 16


@dataclass(frozen=True)
class MediumMap:
    """Per-cell inverse permeability and inclusion membership.

    ``binv[i, j]`` is the cell average of 1/mu; cells straddling an inclusion
    boundary carry the area-weighted mean of the two inverse permeabilities.
    ``member[i, j]`` is the inclusion index owning more than half the cell,
    or -1 for background.
    """

    binv: np.ndarray
    member: np.ndarray

    @property
    def shape(self):
        return self.binv.shape


def build_medium(s: Scenario, grid: ResolvedGrid) -> MediumMap:
    require_valid(s)
    mu0 = s.domain.mu0
    binv = np.full((grid.nx, grid.ny), 1.0 / mu0, dtype=float)
    member = np.full((grid.nx, grid.ny), -1, dtype=np.int8)
    if not s.inclusions:
        return MediumMap(binv=binv, member=member)

    h = max(grid.hx, grid.hy)
    for inc in s.inclusions:
        required = inc.alpha * inc.shape.min_feature()
        if h > required:
            raise GridTooCoarseError(h, required)

    xs, ys = grid.cell_centers()
    # offsets of the fixed midpoint subgrid within one cell, in [-1/2, 1/2)
    off = (np.arange(_SUBSAMPLE) + 0.5) / _SUBSAMPLE - 0.5
    ox, oy = np.meshgrid(off * grid.hx, off * grid.hy, indexing="ij")
    sub = np.stack([ox.ravel(), oy.ravel()], axis=1)

    for j, inc in enumerate(s.inclusions):
        z = np.asarray(inc.center)
        r_out = inc.alpha * inc.shape.outer_radius()
        i_lo = max(0, int(np.floor((z[0] - r_out - grid.x0) / grid.hx)) - 1)
        i_hi = min(grid.nx, int(np.ceil((z[0] + r_out - grid.x0) / grid.hx)) + 1)
        j_lo = max(0, int(np.floor((z[1] - r_out - grid.y0) / grid.hy)) - 1)
        j_hi = min(grid.ny, int(np.ceil((z[1] + r_out - grid.y0) / grid.hy)) + 1)

        for ci in range(i_lo, i_hi):
            for cj in range(j_lo, j_hi):
                center = np.array([xs[ci], ys[cj]])
                pts = (center + sub - z) / inc.alpha
                frac = float(np.mean(inc.shape.contains(pts)))
                if frac == 0.0:
                    continue
                binv[ci, cj] = frac / inc.mu + (1.0 - frac) / mu0
                if frac > 0.5:
                    member[ci, cj] = j

    return MediumMap(binv=binv, member=member)
