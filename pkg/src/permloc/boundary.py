"""Boundary arclength parametrization and measurement-station layout.

The boundary is traversed counterclockwise from the lower-left corner:
bottom (left to right), right (up), top (right to left), left (down).
Stations sit at the cell-center abscissae of the cells adjacent to each side,
which is where the curl trace is extrapolated to the boundary.

The scalar stored for tangential data follows the 2D cross product
``v x n = v1 n2 - v2 n1``; per side the stored grid component relates to that
scalar through the sign map ``sigma`` (bottom -1, right -1, top +1, left +1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainSpec, ResolvedGrid

SIDE_BOTTOM, SIDE_RIGHT, SIDE_TOP, SIDE_LEFT = 0, 1, 2, 3

# tangential edge value = SIGMA[side] * (v x n) scalar on that side
SIGMA = {SIDE_BOTTOM: -1.0, SIDE_RIGHT: -1.0, SIDE_TOP: 1.0, SIDE_LEFT: 1.0}


@dataclass(frozen=True)
class BoundaryLayout:
    """Station geometry along the full perimeter, in counterclockwise order."""

    arc: np.ndarray        # (ns,) arclength coordinate of each station
    pos: np.ndarray        # (ns, 2) position on the boundary
    side: np.ndarray       # (ns,) side index
    weight: np.ndarray     # (ns,) quadrature weight (cell width along the side)
    sigma: np.ndarray      # (ns,) tangential sign map
    normal: np.ndarray     # (ns, 2) outward normal
    nx: int
    ny: int
    perimeter: float

    @property
    def n_stations(self) -> int:
        return self.arc.shape[0]


def station_layout(grid: ResolvedGrid) -> BoundaryLayout:
    x0, y0, x1, y1 = grid.rect
    lx, ly = x1 - x0, y1 - y0
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy

    xb = x0 + (np.arange(nx) + 0.5) * hx
    yb = y0 + (np.arange(ny) + 0.5) * hy

    arcs, pos, side, weight, normal = [], [], [], [], []

    arcs.append(xb - x0)                       # bottom, i ascending
    pos.append(np.stack([xb, np.full(nx, y0)], axis=1))
    side.append(np.full(nx, SIDE_BOTTOM))
    weight.append(np.full(nx, hx))
    normal.append(np.tile([0.0, -1.0], (nx, 1)))

    arcs.append(lx + (yb - y0))                # right, j ascending
    pos.append(np.stack([np.full(ny, x1), yb], axis=1))
    side.append(np.full(ny, SIDE_RIGHT))
    weight.append(np.full(ny, hy))
    normal.append(np.tile([1.0, 0.0], (ny, 1)))

    arcs.append(lx + ly + (x1 - xb)[::-1])     # top, traversed right to left
    pos.append(np.stack([xb[::-1], np.full(nx, y1)], axis=1))
    side.append(np.full(nx, SIDE_TOP))
    weight.append(np.full(nx, hx))
    normal.append(np.tile([0.0, 1.0], (nx, 1)))

    arcs.append(2 * lx + ly + (y1 - yb)[::-1])  # left, traversed top to bottom
    pos.append(np.stack([np.full(ny, x0), yb[::-1]], axis=1))
    side.append(np.full(ny, SIDE_LEFT))
    weight.append(np.full(ny, hy))
    normal.append(np.tile([-1.0, 0.0], (ny, 1)))

    side_arr = np.concatenate(side)
    return BoundaryLayout(
        arc=np.concatenate(arcs),
        pos=np.concatenate(pos),
        side=side_arr,
        weight=np.concatenate(weight),
        sigma=np.array([SIGMA[s] for s in side_arr]),
        normal=np.concatenate(normal),
        nx=nx,
        ny=ny,
        perimeter=2 * (lx + ly),
    )


def gamma_mask(layout: BoundaryLayout, domain: DomainSpec) -> np.ndarray:
    """Boolean mask of stations that lie on the measurement boundary."""
    if domain.gamma is None:
        return np.ones(layout.n_stations, dtype=bool)
    mask = np.zeros(layout.n_stations, dtype=bool)
    for lo, hi in domain.gamma:
        mask |= (layout.arc >= lo) & (layout.arc < hi)
    return mask


def sides_from_stations(layout: BoundaryLayout, values: np.ndarray):
    """Split station-ordered rows into per-side blocks in grid index order.

    ``values`` has stations on the last axis; returns (bottom, right, top, left)
    with bottom/top indexed by i ascending and right/left by j ascending.
    """
    nx, ny = layout.nx, layout.ny
    b = values[..., :nx]
    r = values[..., nx:nx + ny]
    t = values[..., nx + ny:2 * nx + ny][..., ::-1]
    l = values[..., 2 * nx + ny:][..., ::-1]
    return b, r, t, l


def stations_from_sides(layout: BoundaryLayout, b, r, t, l) -> np.ndarray:
    """Inverse of :func:`sides_from_stations`."""
    return np.concatenate([b, r, t[..., ::-1], l[..., ::-1]], axis=-1)
