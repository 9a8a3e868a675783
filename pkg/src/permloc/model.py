"""Core domain model: geometry, medium, probes, grids, and scenario validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class PermlocError(Exception):
    """Base class for package errors."""


class InvalidScenarioError(PermlocError):
    """Raised when an operation requires a valid scenario and validation failed."""


class GridTooCoarseError(PermlocError):
    """Raised when the grid cannot resolve the smallest inclusion feature."""

    def __init__(self, h: float, required: float):
        self.h = h
        self.required = required
        super().__init__(
            f"grid step h={h:g} too coarse for the smallest inclusion feature; "
            f"need h <= {required:g}"
        )


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangular domain with a measurement/control boundary subset.

    ``gamma`` is a list of (lo, hi) arclength intervals along the boundary,
    counterclockwise from the lower-left corner; ``None`` means the full boundary.
    """

    rect: tuple[float, float, float, float]  # (x0, y0, x1, y1)
    T: float
    gamma: list[tuple[float, float]] | None = None
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        x0, y0, x1, y1 = self.rect
        if not (x1 > x0 and y1 > y0):
            raise ValueError("rectangle sides must have positive length")
        if self.T <= 0 or self.eps0 <= 0 or self.mu0 <= 0:
            raise ValueError("T, eps0 and mu0 must be positive")
        if self.gamma is not None:
            arcs = sorted(self.gamma)
            per = self.perimeter
            for lo, hi in arcs:
                if not (0.0 <= lo < hi <= per):
                    raise ValueError(f"gamma arc ({lo}, {hi}) outside [0, {per})")
            for (_, hi), (lo, _) in zip(arcs, arcs[1:]):
                if lo < hi:
                    raise ValueError("gamma arcs must be disjoint")

    @property
    def lengths(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect
        return x1 - x0, y1 - y0

    @property
    def perimeter(self) -> float:
        lx, ly = self.lengths
        return 2.0 * (lx + ly)

    @property
    def diameter(self) -> float:
        lx, ly = self.lengths
        return math.hypot(lx, ly)

    @property
    def wave_speed(self) -> float:
        return 1.0 / math.sqrt(self.eps0 * self.mu0)

    def full_gamma(self) -> bool:
        return self.gamma is None


@dataclass(frozen=True)
class InclusionShape:
    """Reference shape B: bounded smooth curve enclosing the origin.

    kinds:
      * ``disk``: params = (radius,)
      * ``ellipse``: params = (a, b) semi-axes
      * ``smooth-polygon``: params = flattened vertex list (x0, y0, x1, y1, ...),
        interpolated by a closed trigonometric curve through the vertices
    """

    kind: str
    params: tuple[float, ...]
    orientation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "smooth-polygon"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "disk":
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ValueError("disk requires a single positive radius")
        elif self.kind == "ellipse":
            if len(self.params) != 2 or min(self.params) <= 0:
                raise ValueError("ellipse requires two positive semi-axes")
        else:
            if len(self.params) < 8 or len(self.params) % 2:
                raise ValueError("smooth-polygon requires >= 4 vertices as flat (x, y) pairs")

    def vertices(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float).reshape(-1, 2)

    def curve(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluate the (rotated) closed curve and its first two parameter derivatives."""
        t = np.asarray(t, dtype=float)
        if self.kind == "disk":
            r = self.params[0]
            y = np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
            dy = np.stack([-r * np.sin(t), r * np.cos(t)], axis=-1)
            d2y = -y
        elif self.kind == "ellipse":
            a, b = self.params
            y = np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
            dy = np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)
            d2y = -y
        else:
            y, dy, d2y = _trig_interp(self.vertices(), t)
        if self.orientation != 0.0:
            c, s = math.cos(self.orientation), math.sin(self.orientation)
            rot = np.array([[c, -s], [s, c]])
            y = y @ rot.T
            dy = dy @ rot.T
            d2y = d2y @ rot.T
        return y, dy, d2y

    def outer_radius(self) -> float:
        t = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
        y, _, _ = self.curve(t)
        return float(np.max(np.hypot(y[:, 0], y[:, 1])))

    def min_feature(self) -> float:
        """Smallest length scale: radius for a disk, min semi-axis, min origin distance."""
        if self.kind == "disk":
            return self.params[0]
        if self.kind == "ellipse":
            return min(self.params)
        t = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
        y, _, _ = self.curve(t)
        return float(np.min(np.hypot(y[:, 0], y[:, 1])))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Even-odd membership test against a dense polyline of the curve."""
        t = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
        poly, _, _ = self.curve(t)
        return _points_in_polygon(np.atleast_2d(pts), poly)

    def area(self) -> float:
        t = np.linspace(0.0, 2.0 * math.pi, 2048, endpoint=False)
        y, dy, _ = self.curve(t)
        # shoelace via Green's theorem, spectrally accurate for smooth curves
        return float(0.5 * np.mean(y[:, 0] * dy[:, 1] - y[:, 1] * dy[:, 0]) * 2.0 * math.pi)


def _trig_interp(verts: np.ndarray, t: np.ndarray):
    """Closed trigonometric interpolant through vertices at equispaced parameters."""
    m = verts.shape[0]
    coef = np.fft.fft(verts, axis=0) / m  # (m, 2) Fourier coefficients
    freqs = np.fft.fftfreq(m, d=1.0 / m)  # integer wavenumbers
    if m % 2 == 0:
        # split the Nyquist mode symmetrically so the interpolant is real
        coef = coef.copy()
        coef[m // 2] *= 0.5
        coef = np.concatenate([coef, coef[m // 2 : m // 2 + 1]])
        freqs = np.concatenate([freqs, [-freqs[m // 2]]])
    phase = np.exp(1j * np.outer(t, freqs))  # (nt, modes)
    y = (phase @ coef).real
    dy = (phase @ (1j * freqs[:, None] * coef)).real
    d2y = (phase @ (-(freqs[:, None] ** 2) * coef)).real
    return y, dy, d2y


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Vectorized even-odd rule: ray cast along +x."""
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1 = np.roll(poly[:, 0], -1)[None, :]
    y1 = np.roll(poly[:, 1], -1)[None, :]
    crosses = (y0 <= y) != (y1 <= y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = crosses & (xint > x)
    return (hits.sum(axis=1) % 2).astype(bool)


@dataclass(frozen=True)
class InclusionSpec:
    """One inclusion: center z, common scale alpha, reference shape, permeability."""

    center: tuple[float, float]
    alpha: float
    shape: InclusionShape
    mu: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mu <= 0:
            raise ValueError("inclusion permeability must be positive")


@dataclass(frozen=True)
class Scenario:
    """Domain plus inclusions; the single source of truth for an experiment."""

    domain: DomainSpec
    inclusions: tuple[InclusionSpec, ...] = ()
    c0: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")

    @property
    def mu_min(self) -> float:
        mus = [self.domain.mu0] + [inc.mu for inc in self.inclusions]
        return min(mus)


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple[int, ...]
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(v.message for v in self.violations)


def validate_scenario(s: Scenario) -> ValidationReport:
    """Check the separation constraints; returns a report, never raises."""
    report = ValidationReport()
    x0, y0, x1, y1 = s.domain.rect
    centers = [np.asarray(inc.center, dtype=float) for inc in s.inclusions]
    radii = [inc.alpha * inc.shape.outer_radius() for inc in s.inclusions]

    for j, inc in enumerate(s.inclusions):
        if inc.shape.area() <= 0:
            report.violations.append(Violation("shape", (j,), f"inclusion {j} has non-positive area"))

    alphas = {inc.alpha for inc in s.inclusions}
    if len(alphas) > 1:
        report.violations.append(Violation("alpha", tuple(range(len(s.inclusions))),
                                           "alpha must be shared across inclusions"))

    for j in range(len(centers)):
        for l in range(j + 1, len(centers)):
            d = float(np.hypot(*(centers[j] - centers[l])))
            if d < s.c0:
                report.violations.append(Violation(
                    "pair_separation", (j, l),
                    f"|z_{j} - z_{l}| = {d:g} < c0 = {s.c0:g}"))
            if d <= radii[j] + radii[l]:
                report.violations.append(Violation(
                    "overlap", (j, l), f"scaled inclusions {j} and {l} overlap"))

    for j, z in enumerate(centers):
        dist = min(z[0] - x0, x1 - z[0], z[1] - y0, y1 - z[1])
        if dist < s.c0:
            report.violations.append(Violation(
                "boundary_separation", (j,),
                f"dist(z_{j}, boundary) = {dist:g} < c0 = {s.c0:g}"))
        if dist <= radii[j]:
            report.violations.append(Violation(
                "inside_domain", (j,), f"scaled inclusion {j} is not inside the domain"))

    return report


def require_valid(s: Scenario) -> None:
    report = validate_scenario(s)
    if not report.ok:
        raise InvalidScenarioError(str(report))


def perp_unit(eta: tuple[float, float] | np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to eta: counterclockwise rotation, with the
    convention perp(-eta) = perp(eta) (the canonical representative has
    eta_y > 0, or eta_y == 0 and eta_x > 0)."""
    e = np.asarray(eta, dtype=float)
    n = np.hypot(e[0], e[1])
    if n == 0:
        raise ValueError("eta must be nonzero")
    base = e if (e[1] > 0 or (e[1] == 0 and e[0] > 0)) else -e
    return np.array([-base[1], base[0]]) / n


@dataclass(frozen=True)
class PlaneWaveProbe:
    """Complex plane-wave probe: E(x, t) = eta_perp * exp(i(eta.x - c|eta| t))."""

    eta: tuple[float, float]
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if self.eta[0] == 0 and self.eta[1] == 0:
            raise ValueError("eta must be nonzero")

    @property
    def eta_vec(self) -> np.ndarray:
        return np.asarray(self.eta, dtype=float)

    @property
    def abs_eta(self) -> float:
        return float(np.hypot(*self.eta))

    @property
    def eta_perp(self) -> np.ndarray:
        return perp_unit(self.eta)

    @property
    def speed(self) -> float:
        return 1.0 / math.sqrt(self.eps0 * self.mu0)

    @property
    def omega(self) -> float:
        return self.speed * self.abs_eta


def probe_field(p: PlaneWaveProbe, x: np.ndarray, t: float | np.ndarray):
    """Exact background plane wave and its scalar curl at points x and time(s) t.

    Returns (E, curlE) with E of shape x.shape and curlE of shape x.shape[:-1].
    """
    x = np.asarray(x, dtype=float)
    eta = p.eta_vec
    perp = p.eta_perp
    phase = np.exp(1j * (x @ eta - p.omega * np.asarray(t)))
    E = perp * phase[..., None]
    curl = 1j * (eta[0] * perp[1] - eta[1] * perp[0]) * phase
    return E, curl


@dataclass(frozen=True)
class GridSpec:
    """Uniform staggered grid: spatial step h and time step dt.

    ``dt=None`` selects the CFL-limited step scaled by ``cfl_safety`` and
    rounded so it divides T exactly.
    """

    h: float
    dt: float | None = None
    cfl_safety: float = 0.9

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")

    def cfl_limit(self, s: Scenario) -> float:
        return self.h * math.sqrt(s.domain.eps0 * s.mu_min) / math.sqrt(2.0)

    def resolve(self, s: Scenario) -> "ResolvedGrid":
        lx, ly = s.domain.lengths
        nx = max(2, round(lx / self.h))
        ny = max(2, round(ly / self.h))
        hx, hy = lx / nx, ly / ny
        limit = min(hx, hy) * math.sqrt(s.domain.eps0 * s.mu_min) / math.sqrt(2.0)
        dt = self.dt if self.dt is not None else self.cfl_safety * limit
        nt = max(1, math.ceil(s.domain.T / dt - 1e-12))
        dt = s.domain.T / nt
        if dt > limit * (1 + 1e-12):
            raise PermlocError(f"CFL violation: dt={dt:g} exceeds limit {limit:g}")
        return ResolvedGrid(nx=nx, ny=ny, hx=hx, hy=hy, dt=dt, nt=nt,
                            rect=s.domain.rect)


@dataclass(frozen=True)
class ResolvedGrid:
    """Concrete grid geometry derived from a GridSpec and a scenario."""

    nx: int
    ny: int
    hx: float
    hy: float
    dt: float
    nt: int
    rect: tuple[float, float, float, float]

    @property
    def x0(self) -> float:
        return self.rect[0]

    @property
    def y0(self) -> float:
        return self.rect[1]

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.hx
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.hy
        return xs, ys

    def ex_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoints of horizontal edges carrying E_x: shape (nx, ny+1)."""
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.hx
        ys = self.y0 + np.arange(self.ny + 1) * self.hy
        return xs, ys

    def ey_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoints of vertical edges carrying E_y: shape (nx+1, ny)."""
        xs = self.x0 + np.arange(self.nx + 1) * self.hx
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.hy
        return xs, ys

    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def discrete_eta(self, eta: np.ndarray) -> np.ndarray:
        """Grid-consistent wave vector (2/h) sin(eta h / 2) per axis."""
        return np.array([
            2.0 / self.hx * math.sin(eta[0] * self.hx / 2.0),
            2.0 / self.hy * math.sin(eta[1] * self.hy / 2.0),
        ])

    def discrete_polarization(self, probe: PlaneWaveProbe) -> np.ndarray:
        """Polarization orthogonal to the discrete wave vector.

        Sampling the plane wave with this polarization makes the discrete
        divergence of the initial data vanish identically.
        """
        e = probe.eta_vec
        base = e if (e[1] > 0 or (e[1] == 0 and e[0] > 0)) else -e
        etat = self.discrete_eta(base)
        n = np.hypot(etat[0], etat[1])
        return np.array([-etat[1], etat[0]]) / n
