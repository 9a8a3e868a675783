"""Boundary control synthesis: drive the auxiliary wave system to rest at T.

The control-to-terminal-state map is the staggered leapfrog with tangential
boundary injection; the Hilbert-Uniqueness-Method Gramian is inverted by
conjugate gradient on the normal equations (CGLS), with the exact discrete
adjoint realized by the dual leapfrog kernel. Controls are multiplied by a
smooth time window vanishing at both endpoints, so the synthesized g lies in
H^1_0(0, T) in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .boundary import gamma_mask, sides_from_stations, station_layout, stations_from_sides
from .forward import run_leapfrog, sample_plane_wave
from .model import (
    DomainSpec,
    GridSpec,
    PermlocError,
    PlaneWaveProbe,
    ResolvedGrid,
    Scenario,
    probe_field,
)
from .traces import BoundaryTrace

CONTROL_TIME_FACTOR = 1.5


class GeometricControlError(PermlocError):
    """Raised when the declared geometric-control sufficient condition fails."""


@dataclass(frozen=True)
class CutoffField:
    """Tensorized smooth cutoff: 1 on the inflated inclusion hull, 0 near the boundary."""

    x_breaks: tuple[float, float, float, float]  # rise start, rise end, fall start, fall end
    y_breaks: tuple[float, float, float, float]
    margin: float

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return _ramp(np.asarray(x), self.x_breaks) * _ramp(np.asarray(y), self.y_breaks)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _ramp(v: np.ndarray, breaks) -> np.ndarray:
    a0, a1, b1, b0 = breaks
    up = _smoothstep((v - a0) / (a1 - a0))
    down = _smoothstep((b0 - v) / (b0 - b1))
    return up * down


def cutoff_beta(domain: DomainSpec, inclusions, margin: float) -> CutoffField:
    """Smooth cutoff equal to 1 on the inclusion hull inflated by margin/2 and
    0 within margin/2 of the domain boundary."""
    if not inclusions:
        raise PermlocError("cutoff requires at least one inclusion")
    if margin <= 0:
        raise PermlocError("margin must be positive")
    x0, y0, x1, y1 = domain.rect
    lo = np.array([math.inf, math.inf])
    hi = np.array([-math.inf, -math.inf])
    for inc in inclusions:
        r = inc.alpha * inc.shape.outer_radius()
        z = np.asarray(inc.center)
        lo = np.minimum(lo, z - r)
        hi = np.maximum(hi, z + r)
    m2 = margin / 2.0
    if (lo[0] - x0 <= margin or x1 - hi[0] <= margin
            or lo[1] - y0 <= margin or y1 - hi[1] <= margin):
        raise PermlocError("margin too large: the cutoff ramps do not fit between "
                           "the inclusion hull and the boundary")
    xb = (x0 + m2, lo[0] - m2, hi[0] + m2, x1 - m2)
    yb = (y0 + m2, lo[1] - m2, hi[1] + m2, y1 - m2)
    return CutoffField(x_breaks=xb, y_breaks=yb, margin=margin)


def default_margin(domain: DomainSpec, inclusions) -> float:
    """Two thirds of the hull-to-boundary distance."""
    x0, y0, x1, y1 = domain.rect
    d = math.inf
    for inc in inclusions:
        r = inc.alpha * inc.shape.outer_radius()
        z = inc.center
        d = min(d, z[0] - r - x0, x1 - z[0] - r, z[1] - r - y0, y1 - z[1] - r)
    return 2.0 * d / 3.0


@dataclass(frozen=True)
class ControlProblem:
    """Wave system with cutoff plane-wave initial data and boundary control on Gamma."""

    domain: DomainSpec
    eta: tuple[float, float]
    beta: CutoffField
    amplitude: complex = 1.0
    mu_min: float | None = None    # CFL floor when pairing with a perturbed run

    @property
    def probe(self) -> PlaneWaveProbe:
        return PlaneWaveProbe(eta=self.eta, eps0=self.domain.eps0, mu0=self.domain.mu0)

    @property
    def t_min(self) -> float:
        return CONTROL_TIME_FACTOR * self.domain.diameter * math.sqrt(
            self.domain.eps0 * self.domain.mu0)

    def check(self) -> None:
        if not self.domain.full_gamma():
            raise GeometricControlError(
                "control requires Gamma to be the full boundary")
        if self.domain.T < self.t_min:
            raise GeometricControlError(
                f"T = {self.domain.T:g} below the geometric-control time "
                f"{self.t_min:g}")

    def scenario(self) -> Scenario:
        return Scenario(domain=self.domain, inclusions=(), c0=1.0)


def control_problem_for(s: Scenario, eta, margin: float | None = None,
                        amplitude: complex = 1.0) -> ControlProblem:
    if margin is None:
        margin = default_margin(s.domain, s.inclusions)
    beta = cutoff_beta(s.domain, s.inclusions, margin)
    return ControlProblem(domain=s.domain, eta=tuple(eta), beta=beta,
                          amplitude=amplitude, mu_min=s.mu_min)


@dataclass(frozen=True)
class BoundaryControl:
    """Synthesized tangential control g on (time x Gamma stations)."""

    values: np.ndarray
    dt: float
    arc: np.ndarray
    weight: np.ndarray
    eta: tuple[float, float]
    T: float
    iterations: int
    achieved_ratio: float
    converged: bool

    @property
    def nt(self) -> int:
        return self.values.shape[0] - 1

    def as_trace(self) -> BoundaryTrace:
        return BoundaryTrace(values=self.values, dt=self.dt, arc=self.arc,
                             weight=self.weight)


def _time_window(times: np.ndarray, T: float, ramp_fraction: float) -> np.ndarray:
    ramp = ramp_fraction * T
    return _smoothstep(times / ramp) * _smoothstep((T - times) / ramp)


def _resolve_control_grid(cp: ControlProblem, g: GridSpec) -> ResolvedGrid:
    mu_min = cp.mu_min if cp.mu_min is not None else cp.domain.mu0
    dom = cp.domain
    # CFL floor shared with the perturbed run so sample grids line up
    s = Scenario(domain=dom, inclusions=(), c0=1.0)
    grid = g.resolve(s)
    limit = min(grid.hx, grid.hy) * math.sqrt(dom.eps0 * mu_min) / math.sqrt(2.0)
    if grid.dt > limit * (1 + 1e-12):
        nt = math.ceil(dom.T / (g.cfl_safety * limit))
        grid = replace(grid, dt=dom.T / nt, nt=nt)
    return grid


def _initial_data(cp: ControlProblem, grid: ResolvedGrid):
    probe = cp.probe
    perp = probe.eta_perp
    eta = probe.eta_vec
    xs_x, ys_x = grid.ex_edges()
    xs_y, ys_y = grid.ey_edges()
    bx = cp.beta(xs_x[:, None], ys_x[None, :])
    by = cp.beta(xs_y[:, None], ys_y[None, :])
    ex0 = cp.amplitude * perp[0] * bx * np.exp(1j * (eta[0] * xs_x[:, None] + eta[1] * ys_x[None, :]))
    ey0 = cp.amplitude * perp[1] * by * np.exp(1j * (eta[0] * xs_y[:, None] + eta[1] * ys_y[None, :]))
    return ex0, ey0


def _magnetic_energy(ex, ey, grid: ResolvedGrid, mu0: float) -> float:
    from ._kernels_numpy import curl_cells

    C = curl_cells(np.ascontiguousarray(ex, dtype=complex),
                   np.ascontiguousarray(ey, dtype=complex), grid.hx, grid.hy)
    return float(0.5 / mu0 * grid.hx * grid.hy * np.sum(np.abs(C) ** 2))


def _kinetic_energy(vx, vy, grid: ResolvedGrid, eps0: float) -> float:
    return float(0.5 * eps0 * grid.hx * grid.hy
                 * (np.sum(np.abs(vx) ** 2) + np.sum(np.abs(vy) ** 2)))


class _ControlOperator:
    """Windowed control samples -> interior terminal pair, and its adjoint.

    The terminal field part is scaled by ``omega`` so the Euclidean norm of the
    pair is commensurate with the wave energy at the probe frequency.
    """

    def __init__(self, cp: ControlProblem, grid: ResolvedGrid, backend=None):
        self.cp = cp
        self.grid = grid
        self.backend = backend
        self.layout = station_layout(grid)
        self.mask = gamma_mask(self.layout, cp.domain)
        self.window = _time_window(grid.times(), cp.domain.T, 0.1)
        self.sigma = self.layout.sigma[self.mask]
        self.omega = max(cp.probe.omega, 1.0 / cp.domain.T)
        self.eps0 = cp.domain.eps0
        self.binv = np.full((grid.nx, grid.ny), 1.0 / cp.domain.mu0)

    def _bc_from_control(self, ctrl: np.ndarray):
        full = np.zeros((self.grid.nt + 1, self.layout.n_stations), dtype=complex)
        full[:, self.mask] = self.window[:, None] * self.sigma[None, :] * ctrl
        b, r, t, l = sides_from_stations(self.layout, full)
        return (np.ascontiguousarray(b), np.ascontiguousarray(t),
                np.ascontiguousarray(l), np.ascontiguousarray(r))

    def apply(self, ctrl: np.ndarray):
        grid = self.grid
        bcb, bct, bcl, bcr = self._bc_from_control(ctrl)
        zx = np.zeros((grid.nx, grid.ny + 1), dtype=complex)
        zy = np.zeros((grid.nx + 1, grid.ny), dtype=complex)
        _, _, _, (exN, eyN, exNm1, eyNm1) = run_leapfrog(
            grid, self.binv, self.eps0, zx, zy, zx, zy, bcb, bct, bcl, bcr,
            record_trace=False, backend=self.backend)
        fx, fy = exN.copy(), eyN.copy()
        vx = (exN - exNm1) / grid.dt
        vy = (eyN - eyNm1) / grid.dt
        for a in (fx, vx):
            a[:, 0] = 0.0
            a[:, -1] = 0.0
        for a in (fy, vy):
            a[0, :] = 0.0
            a[-1, :] = 0.0
        return (self.omega * fx, self.omega * fy, vx, vy)

    def apply_adjoint(self, pair):
        sfx, sfy, vx, vy = pair
        grid = self.grid
        kb = kernels.get_backend(self.backend)
        dual = np.zeros((grid.nt + 1, self.layout.n_stations), dtype=complex)
        kb.run_wave_dual(
            np.ascontiguousarray(self.omega * sfx), np.ascontiguousarray(self.omega * sfy),
            np.ascontiguousarray(vx), np.ascontiguousarray(vy),
            self.binv, self.eps0, grid.hx, grid.hy, grid.dt, grid.nt, dual)
        # dual rows are per-side blocks in grid order; bring to station order
        nx, ny = grid.nx, grid.ny
        b = dual[:, :nx]
        r = dual[:, nx:nx + ny]
        t = dual[:, nx + ny:2 * nx + ny]
        l = dual[:, 2 * nx + ny:]
        full = stations_from_sides(self.layout, b, r, t, l)
        grad = -(grid.dt ** 2 / self.eps0) * full[:, self.mask]
        return self.window[:, None] * self.sigma[None, :] * grad

    def deficit_energy(self, pair) -> float:
        sfx, sfy, vx, vy = pair
        fx = sfx / self.omega
        fy = sfy / self.omega
        return (_magnetic_energy(fx, fy, self.grid, self.cp.domain.mu0)
                + _kinetic_energy(vx, vy, self.grid, self.cp.domain.eps0))


def _pair_dot(a, b) -> float:
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def _pair_axpy(alpha, x, y):
    return tuple(yi + alpha * xi for xi, yi in zip(x, y))


def synthesize_control(cp: ControlProblem, g: GridSpec, tol: float = 1e-3,
                       max_iters: int = 200, backend: str | None = None) -> BoundaryControl:
    """CGLS on the control-to-terminal-state map until the replayed terminal
    energy drops below ``tol`` times the initial energy."""
    cp.check()
    grid = _resolve_control_grid(cp, g)
    op = _ControlOperator(cp, grid, backend=backend)

    ex0, ey0 = _initial_data(cp, grid)
    e_init = _magnetic_energy(ex0, ey0, grid, cp.domain.mu0)
    arc = op.layout.arc[op.mask]
    weight = op.layout.weight[op.mask]

    if e_init == 0.0:
        zero = np.zeros((grid.nt + 1, int(op.mask.sum())), dtype=complex)
        return BoundaryControl(values=zero, dt=grid.dt, arc=arc, weight=weight,
                               eta=cp.eta, T=cp.domain.T, iterations=0,
                               achieved_ratio=0.0, converged=True)

    zb = np.zeros((grid.nt + 1, grid.nx), dtype=complex)
    zl = np.zeros((grid.nt + 1, grid.ny), dtype=complex)
    zvx = np.zeros_like(ex0)
    zvy = np.zeros_like(ey0)
    _, _, _, (exN, eyN, exNm1, eyNm1) = run_leapfrog(
        grid, op.binv, cp.domain.eps0, ex0, ey0, zvx, zvy,
        zb, zb.copy(), zl, zl.copy(), record_trace=False, backend=backend)
    fx, fy = -exN, -eyN
    vx = -(exN - exNm1) / grid.dt
    vy = -(eyN - eyNm1) / grid.dt
    for a in (fx, vx):
        a[:, 0] = 0.0
        a[:, -1] = 0.0
    for a in (fy, vy):
        a[0, :] = 0.0
        a[-1, :] = 0.0
    b = (op.omega * fx, op.omega * fy, vx, vy)

    x = np.zeros((grid.nt + 1, int(op.mask.sum())), dtype=complex)
    r = b
    s = op.apply_adjoint(r)
    p = s.copy()
    gamma = float(np.vdot(s, s).real)
    best_x = x
    best_ratio = op.deficit_energy(r) / e_init
    iters = 0

    for it in range(1, max_iters + 1):
        q = op.apply(p)
        qq = _pair_dot(q, q)
        if qq == 0.0 or gamma == 0.0:
            break
        alpha = gamma / qq
        x = x + alpha * p
        r = _pair_axpy(-alpha, q, r)
        iters = it
        ratio = op.deficit_energy(r) / e_init
        if ratio < best_ratio:
            best_ratio = ratio
            best_x = x
        if ratio <= tol:
            break
        s = op.apply_adjoint(r)
        gamma_new = float(np.vdot(s, s).real)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new

    values = op.window[:, None] * best_x
    return BoundaryControl(values=values, dt=grid.dt, arc=arc, weight=weight,
                           eta=cp.eta, T=cp.domain.T, iterations=iters,
                           achieved_ratio=best_ratio, converged=best_ratio <= tol)


def verify_quiescence(cp: ControlProblem, g: GridSpec, ctrl: BoundaryControl,
                      backend: str | None = None) -> float:
    """Replay the controlled system independently; returns E(T) / E(0)."""
    grid = _resolve_control_grid(cp, g)
    if ctrl.values.shape[0] != grid.nt + 1:
        raise PermlocError("control was synthesized on a different time grid")
    layout = station_layout(grid)
    mask = gamma_mask(layout, cp.domain)
    full = np.zeros((grid.nt + 1, layout.n_stations), dtype=complex)
    full[:, mask] = layout.sigma[mask][None, :] * ctrl.values
    bsides = sides_from_stations(layout, full)
    bcb, bcr, bct, bcl = bsides

    ex0, ey0 = _initial_data(cp, grid)
    e_init = _magnetic_energy(ex0, ey0, grid, cp.domain.mu0)
    if e_init == 0.0:
        return 0.0
    zvx = np.zeros_like(ex0)
    zvy = np.zeros_like(ey0)
    _, _, _, (exN, eyN, exNm1, eyNm1) = run_leapfrog(
        grid, np.full((grid.nx, grid.ny), 1.0 / cp.domain.mu0), cp.domain.eps0,
        ex0, ey0, zvx, zvy,
        np.ascontiguousarray(bcb), np.ascontiguousarray(bct),
        np.ascontiguousarray(bcl), np.ascontiguousarray(bcr),
        record_trace=False, backend=backend)
    vx = (exN - exNm1) / grid.dt
    vy = (eyN - eyNm1) / grid.dt
    e_term = (_magnetic_energy(exN, eyN, grid, cp.domain.mu0)
              + _kinetic_energy(vx, vy, grid, cp.domain.eps0))
    return e_term / e_init


def control_divergence_drift(cp: ControlProblem, g: GridSpec, ctrl: BoundaryControl,
                             backend: str | None = None) -> float:
    """Growth of the discrete divergence of the controlled field over its initial
    value, relative to the field norm; the curl-curl stepping keeps this at
    round-off."""
    from .forward import divergence_nodes

    grid = _resolve_control_grid(cp, g)
    layout = station_layout(grid)
    mask = gamma_mask(layout, cp.domain)
    full = np.zeros((grid.nt + 1, layout.n_stations), dtype=complex)
    full[:, mask] = layout.sigma[mask][None, :] * ctrl.values
    bcb, bcr, bct, bcl = sides_from_stations(layout, full)
    ex0, ey0 = _initial_data(cp, grid)
    zv = np.zeros_like(ex0)
    _, _, _, (exN, eyN, _, _) = run_leapfrog(
        grid, np.full((grid.nx, grid.ny), 1.0 / cp.domain.mu0), cp.domain.eps0,
        ex0, ey0, zv, np.zeros_like(ey0),
        np.ascontiguousarray(bcb), np.ascontiguousarray(bct),
        np.ascontiguousarray(bcl), np.ascontiguousarray(bcr),
        record_trace=False, backend=backend)
    d0 = divergence_nodes(ex0, ey0, grid.hx, grid.hy)
    dN = divergence_nodes(exN, eyN, grid.hx, grid.hy)
    field_scale = max(float(np.max(np.abs(ex0))), float(np.max(np.abs(ey0))), 1e-300)
    return float(np.max(np.abs(dN - d0))) / (field_scale / min(grid.hx, grid.hy))
