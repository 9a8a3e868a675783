"""Time-domain solver for the perturbed medium and the analytic background trace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .boundary import BoundaryLayout, gamma_mask, station_layout, stations_from_sides
from .medium import MediumMap, build_medium
from .model import (
    GridSpec,
    PermlocError,
    PlaneWaveProbe,
    ResolvedGrid,
    Scenario,
    probe_field,
    require_valid,
)
from .traces import BoundaryTrace


class SolverInstabilityError(PermlocError):
    """Raised when the leapfrog produced non-finite values (CFL or medium issue)."""


@dataclass(frozen=True)
class FieldSnapshots:
    """Cell-center curl snapshots on a window of the grid, every ``stride`` steps."""

    curl: np.ndarray           # (n_snaps, wi, wj)
    stride: int
    window: tuple[int, int, int, int]
    grid: ResolvedGrid

    def times(self) -> np.ndarray:
        return np.arange(self.curl.shape[0]) * self.stride * self.grid.dt


@dataclass(frozen=True)
class EnergyReport:
    """Discrete staggered energy per half time step."""

    kinetic: np.ndarray
    magnetic: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.kinetic + self.magnetic


def sample_plane_wave(probe: PlaneWaveProbe, grid: ResolvedGrid,
                      discrete_polarization: bool = True):
    """Plane-wave E components on the staggered edges at t = 0, plus the velocity.

    With ``discrete_polarization`` the polarization vector is orthogonal to the
    grid wave vector, which keeps the discrete divergence of the data at exactly
    zero; the deviation from the continuum polarization is O(h^2).
    """
    perp = grid.discrete_polarization(probe) if discrete_polarization else probe.eta_perp
    eta = probe.eta_vec
    xs_x, ys_x = grid.ex_edges()
    xs_y, ys_y = grid.ey_edges()
    phase_x = np.exp(1j * (eta[0] * xs_x[:, None] + eta[1] * ys_x[None, :]))
    phase_y = np.exp(1j * (eta[0] * xs_y[:, None] + eta[1] * ys_y[None, :]))
    ex = perp[0] * phase_x
    ey = perp[1] * phase_y
    vx = -1j * probe.omega * ex
    vy = -1j * probe.omega * ey
    return ex, ey, vx, vy


def probe_boundary_data(probe: PlaneWaveProbe, grid: ResolvedGrid,
                        discrete_polarization: bool = True):
    """Tangential plane-wave values on boundary edges for all time samples."""
    perp = grid.discrete_polarization(probe) if discrete_polarization else probe.eta_perp
    eta = probe.eta_vec
    x0, y0, x1, y1 = grid.rect
    xs = grid.x0 + (np.arange(grid.nx) + 0.5) * grid.hx
    ys = grid.y0 + (np.arange(grid.ny) + 0.5) * grid.hy
    tphase = np.exp(-1j * probe.omega * grid.times())[:, None]
    bcb = perp[0] * np.exp(1j * (eta[0] * xs + eta[1] * y0))[None, :] * tphase
    bct = perp[0] * np.exp(1j * (eta[0] * xs + eta[1] * y1))[None, :] * tphase
    bcl = perp[1] * np.exp(1j * (eta[0] * x0 + eta[1] * ys))[None, :] * tphase
    bcr = perp[1] * np.exp(1j * (eta[0] * x1 + eta[1] * ys))[None, :] * tphase
    return bcb, bct, bcl, bcr


def _zero_bc(grid: ResolvedGrid):
    z = np.zeros((grid.nt + 1, grid.nx), dtype=complex)
    zy = np.zeros((grid.nt + 1, grid.ny), dtype=complex)
    return z, z.copy(), zy, zy.copy()


def _gamma_trace(full: np.ndarray, layout: BoundaryLayout, scenario: Scenario,
                 grid: ResolvedGrid) -> BoundaryTrace:
    mask = gamma_mask(layout, scenario.domain)
    return BoundaryTrace(values=full[:, mask], dt=grid.dt,
                         arc=layout.arc[mask], weight=layout.weight[mask])


def run_leapfrog(grid: ResolvedGrid, binv: np.ndarray, eps0: float,
                 ex0, ey0, vx0, vy0, bcb, bct, bcl, bcr,
                 record_trace: bool = True,
                 record_energy: bool = False,
                 snap_stride: int = 0,
                 snap_window: tuple[int, int, int, int] | None = None,
                 backend: str | None = None):
    """Low-level driver shared by the forward and control solvers.

    Returns (trace_grid_order, energy, snaps, (exN, eyN, exNm1, eyNm1)).
    """
    kb = kernels.get_backend(backend)
    nx, ny, nt = grid.nx, grid.ny, grid.nt
    ns = 2 * (nx + ny)
    trace = np.zeros((nt + 1, ns), dtype=complex) if record_trace else np.zeros((1, 1), dtype=complex)
    energy = np.zeros((max(nt, 1), 2), dtype=float) if record_energy else np.zeros((1, 2), dtype=float)
    if snap_stride > 0:
        wi0, wi1, wj0, wj1 = snap_window if snap_window is not None else (0, nx, 0, ny)
        n_snaps = nt // snap_stride + 1
        snaps = np.zeros((n_snaps, wi1 - wi0, wj1 - wj0), dtype=complex)
    else:
        wi0, wi1, wj0, wj1 = 0, 1, 0, 1
        snaps = np.zeros((1, 1, 1), dtype=complex)
    exN = np.empty((nx, ny + 1), dtype=complex)
    eyN = np.empty((nx + 1, ny), dtype=complex)
    exNm1 = np.empty_like(exN)
    eyNm1 = np.empty_like(eyN)

    status = kb.run_wave(
        np.ascontiguousarray(ex0, dtype=complex), np.ascontiguousarray(ey0, dtype=complex),
        np.ascontiguousarray(vx0, dtype=complex), np.ascontiguousarray(vy0, dtype=complex),
        np.ascontiguousarray(binv, dtype=float), eps0,
        grid.hx, grid.hy, grid.dt, nt,
        np.ascontiguousarray(bcb), np.ascontiguousarray(bct),
        np.ascontiguousarray(bcl), np.ascontiguousarray(bcr),
        trace, record_trace, energy, record_energy,
        snaps, snap_stride, wi0, wi1, wj0, wj1,
        exN, eyN, exNm1, eyNm1)
    if status != 0:
        raise SolverInstabilityError("non-finite field values during time stepping")
    return trace, energy, snaps, (exN, eyN, exNm1, eyNm1)


def run_perturbed(s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                  medium: MediumMap | None = None,
                  snap_stride: int = 0,
                  snap_window: tuple[int, int, int, int] | None = None,
                  record_energy: bool = False,
                  backend: str | None = None):
    """Leapfrog run of the perturbed system; returns (trace, snapshots or None).

    The trace holds the scalar curl extrapolated to the measurement boundary,
    one row per time step.
    """
    require_valid(s)
    grid = g.resolve(s)
    if medium is None:
        medium = build_medium(s, grid)
    layout = station_layout(grid)
    ex0, ey0, vx0, vy0 = sample_plane_wave(p, grid)
    bcb, bct, bcl, bcr = probe_boundary_data(p, grid)
    trace_go, energy, snaps, _ = run_leapfrog(
        grid, medium.binv, s.domain.eps0, ex0, ey0, vx0, vy0,
        bcb, bct, bcl, bcr,
        record_trace=True, record_energy=record_energy,
        snap_stride=snap_stride, snap_window=snap_window, backend=backend)
    b, r, t, l = trace_go[:, :grid.nx], trace_go[:, grid.nx:grid.nx + grid.ny], \
        trace_go[:, grid.nx + grid.ny:2 * grid.nx + grid.ny], trace_go[:, 2 * grid.nx + grid.ny:]
    full = stations_from_sides(layout, b, r, t, l)
    trace = _gamma_trace(full, layout, s, grid)
    out_snaps = None
    if snap_stride > 0:
        win = snap_window if snap_window is not None else (0, grid.nx, 0, grid.ny)
        out_snaps = FieldSnapshots(curl=snaps, stride=snap_stride, window=win, grid=grid)
    if record_energy:
        return trace, out_snaps, EnergyReport(kinetic=energy[:, 0], magnetic=energy[:, 1])
    return trace, out_snaps


def run_background(s: Scenario, g: GridSpec, p: PlaneWaveProbe) -> BoundaryTrace:
    """Exact plane-wave curl trace on the same sampling grid; no time stepping."""
    grid = g.resolve(s)
    layout = station_layout(grid)
    mask = gamma_mask(layout, s.domain)
    pos = layout.pos[mask]
    times = grid.times()
    _, curl = probe_field(p, pos[None, :, :], times[:, None])
    return BoundaryTrace(values=curl, dt=grid.dt, arc=layout.arc[mask],
                         weight=layout.weight[mask])


def run_background_simulated(s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                             backend: str | None = None) -> BoundaryTrace:
    """Background trace from a leapfrog run with the inclusions removed.

    Shares the discretization bias of the perturbed run, so differences of the
    two traces isolate the inclusion signature down to far below the scheme's
    native dispersion error.
    """
    bare = Scenario(domain=s.domain, inclusions=(), c0=s.c0)
    trace, _ = run_perturbed(bare, g, p, backend=backend)
    return trace


def homogeneous_plane_wave_errors(s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                                  backend: str | None = None):
    """Per-step L2 errors of the homogeneous run against the exact plane wave.

    Returns (times, field_err, curl_err, dt_err) with the dt-derivative error
    at staggered half steps. Used by convergence studies.
    """
    bare = Scenario(domain=s.domain, inclusions=(), c0=s.c0)
    grid = g.resolve(bare)
    binv = np.full((grid.nx, grid.ny), 1.0 / s.domain.mu0)
    ex0, ey0, vx0, vy0 = sample_plane_wave(p, grid)
    bcb, bct, bcl, bcr = probe_boundary_data(p, grid)
    ref_ex, ref_ey = _plane_wave_reference(p, grid)
    ref_c = _plane_wave_curl_reference(p, grid)
    errs = np.zeros((grid.nt + 1, 3), dtype=float)
    kb = kernels.get_backend(backend)
    kb.run_wave_vs_ref(
        np.ascontiguousarray(ex0), np.ascontiguousarray(ey0),
        np.ascontiguousarray(vx0), np.ascontiguousarray(vy0),
        binv, s.domain.eps0, grid.hx, grid.hy, grid.dt, grid.nt,
        bcb, bct, bcl, bcr, ref_ex, ref_ey, ref_c, p.omega, errs)
    return grid.times(), np.sqrt(errs[:, 0]), np.sqrt(errs[:, 1]), np.sqrt(errs[:, 2])


def perturbed_vs_background_errors(s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                                   backend: str | None = None):
    """Per-step L2 norms of E_alpha minus the exact background plane wave.

    Returns (times, field_err, curl_err, dt_err); the field/curl columns drive
    the inclusion-size scaling studies.
    """
    require_valid(s)
    grid = g.resolve(s)
    medium = build_medium(s, grid)
    ex0, ey0, vx0, vy0 = sample_plane_wave(p, grid)
    bcb, bct, bcl, bcr = probe_boundary_data(p, grid)
    ref_ex, ref_ey = _plane_wave_reference(p, grid)
    ref_c = _plane_wave_curl_reference(p, grid)
    errs = np.zeros((grid.nt + 1, 3), dtype=float)
    kb = kernels.get_backend(backend)
    kb.run_wave_vs_ref(
        np.ascontiguousarray(ex0), np.ascontiguousarray(ey0),
        np.ascontiguousarray(vx0), np.ascontiguousarray(vy0),
        medium.binv, s.domain.eps0, grid.hx, grid.hy, grid.dt, grid.nt,
        bcb, bct, bcl, bcr, ref_ex, ref_ey, ref_c, p.omega, errs)
    return grid.times(), np.sqrt(errs[:, 0]), np.sqrt(errs[:, 1]), np.sqrt(errs[:, 2])


def _plane_wave_reference(p: PlaneWaveProbe, grid: ResolvedGrid):
    eta = p.eta_vec
    perp = p.eta_perp
    xs_x, ys_x = grid.ex_edges()
    xs_y, ys_y = grid.ey_edges()
    ref_ex = perp[0] * np.exp(1j * (eta[0] * xs_x[:, None] + eta[1] * ys_x[None, :]))
    ref_ey = perp[1] * np.exp(1j * (eta[0] * xs_y[:, None] + eta[1] * ys_y[None, :]))
    return ref_ex, ref_ey


def _plane_wave_curl_reference(p: PlaneWaveProbe, grid: ResolvedGrid):
    eta = p.eta_vec
    perp = p.eta_perp
    xs, ys = grid.cell_centers()
    amp = 1j * (eta[0] * perp[1] - eta[1] * perp[0])
    return amp * np.exp(1j * (eta[0] * xs[:, None] + eta[1] * ys[None, :]))


def discrete_residual(s: Scenario, g: GridSpec, p: PlaneWaveProbe) -> float:
    """Leapfrog stencil residual of the exact plane wave, relative to the field scale.

    Measures how well the continuum probe satisfies the discrete homogeneous
    system; decays as O(h^2 + dt^2).
    """
    bare = Scenario(domain=s.domain, inclusions=(), c0=s.c0)
    grid = g.resolve(bare)
    binv = np.full((grid.nx, grid.ny), 1.0 / s.domain.mu0)
    eta = p.eta_vec
    perp = p.eta_perp
    xs_x, ys_x = grid.ex_edges()
    xs_y, ys_y = grid.ey_edges()
    ex = perp[0] * np.exp(1j * (eta[0] * xs_x[:, None] + eta[1] * ys_x[None, :]))
    ey = perp[1] * np.exp(1j * (eta[0] * xs_y[:, None] + eta[1] * ys_y[None, :]))
    phm = np.exp(1j * p.omega * grid.dt)   # e^{-i w (t - dt)}
    php = np.exp(-1j * p.omega * grid.dt)
    from ._kernels_numpy import curl_cells

    C = curl_cells(ex, ey, grid.hx, grid.hy)
    s_arr = binv * C
    ax = np.zeros_like(ex)
    ay = np.zeros_like(ey)
    ax[:, 1:-1] = -(s_arr[:, 1:] - s_arr[:, :-1]) / (s.domain.eps0 * grid.hy)
    ay[1:-1, :] = (s_arr[1:, :] - s_arr[:-1, :]) / (s.domain.eps0 * grid.hx)
    rx = ex * (php + phm - 2.0) - grid.dt ** 2 * ax
    ry = ey * (php + phm - 2.0) - grid.dt ** 2 * ay
    num = math.sqrt(float(np.sum(np.abs(rx[:, 1:-1]) ** 2) + np.sum(np.abs(ry[1:-1, :]) ** 2)))
    den = grid.dt ** 2 * math.sqrt(float(np.sum(np.abs(ex[:, 1:-1]) ** 2)
                                         + np.sum(np.abs(ey[1:-1, :]) ** 2)))
    return num / den


def divergence_nodes(ex: np.ndarray, ey: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Discrete divergence at interior nodes."""
    return ((ex[1:, 1:-1] - ex[:-1, 1:-1]) / hx + (ey[1:-1, 1:] - ey[1:-1, :-1]) / hy)


def check_inclusion_asymptotics(s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                                j: int, ring_factor: float = 1.3,
                                n_ring: int = 64,
                                t_window: tuple[float, float] = (0.2, 0.8),
                                plus_side: str = "inside",
                                backend: str | None = None) -> float:
    """Relative misfit of the small-inclusion boundary formula for inclusion j.

    Samples the computed curl on a ring just outside the scaled inclusion and
    compares with the background curl at the center times the shape/contrast
    factor predicted by the transmission problem. Returns the sup over the ring
    and the time window of |measured - predicted| / max |background curl|.
    """
    from .potentials import discretize_shape, solve_transmission

    require_valid(s)
    grid = g.resolve(s)
    inc = s.inclusions[j]
    z = np.asarray(inc.center)
    r_out = inc.alpha * inc.shape.outer_radius()
    pad = ring_factor * r_out + 3 * max(grid.hx, grid.hy)
    wi0 = max(0, int((z[0] - pad - grid.x0) / grid.hx) - 1)
    wi1 = min(grid.nx, int((z[0] + pad - grid.x0) / grid.hx) + 2)
    wj0 = max(0, int((z[1] - pad - grid.y0) / grid.hy) - 1)
    wj1 = min(grid.ny, int((z[1] + pad - grid.y0) / grid.hy) + 2)
    if min(wi1 - wi0, wj1 - wj0) < 6:
        raise PermlocError("inclusion under-resolved by grid")

    stride = max(1, grid.nt // 200)
    trace, snaps = run_perturbed(s, g, p, snap_stride=stride,
                                 snap_window=(wi0, wi1, wj0, wj1), backend=backend)

    bnd = discretize_shape(inc.shape, max(n_ring, 64))
    sol = solve_transmission(bnd, inc.mu / s.domain.mu0)
    dphi = sol.dn_inner if plus_side == "inside" else sol.dn_outer
    # scalar projection of the boundary formula onto the outward normal
    factor = 1.0 + (1.0 - inc.mu / s.domain.mu0) * np.einsum("nd,nd->n", dphi, bnd.normals)

    ring = z[None, :] + inc.alpha * ring_factor * bnd.nodes
    xs, ys = grid.cell_centers()
    times = snaps.times()
    lo, hi = t_window
    sel = (times >= lo * s.domain.T) & (times <= hi * s.domain.T)
    sup_err = 0.0
    sup_ref = 0.0
    for it in np.nonzero(sel)[0]:
        C = snaps.curl[it]
        meas = _bilinear(C, xs[wi0:wi1], ys[wj0:wj1], ring)
        _, c_bg = probe_field(p, z, times[it])
        pred = c_bg * factor
        sup_err = max(sup_err, float(np.max(np.abs(meas - pred))))
        sup_ref = max(sup_ref, float(np.abs(c_bg)))
    return sup_err / sup_ref


def _bilinear(C: np.ndarray, xs: np.ndarray, ys: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of cell-center values at arbitrary points."""
    fx = (pts[:, 0] - xs[0]) / (xs[1] - xs[0])
    fy = (pts[:, 1] - ys[0]) / (ys[1] - ys[0])
    i = np.clip(np.floor(fx).astype(int), 0, C.shape[0] - 2)
    jj = np.clip(np.floor(fy).astype(int), 0, C.shape[1] - 2)
    tx = fx - i
    ty = fy - jj
    return ((1 - tx) * (1 - ty) * C[i, jj] + tx * (1 - ty) * C[i + 1, jj]
            + (1 - tx) * ty * C[i, jj + 1] + tx * ty * C[i + 1, jj + 1])
