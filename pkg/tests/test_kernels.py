"""Backend parity and adjoint exactness for the leapfrog kernels."""

import numpy as np
import pytest

from permloc.control import _ControlOperator, _resolve_control_grid, control_problem_for
from permloc.forward import probe_boundary_data, run_leapfrog, sample_plane_wave
from permloc.kernels import get_backend
from permloc.model import GridSpec, PlaneWaveProbe, Scenario

from conftest import single_disk_scenario


@pytest.fixture
def small_setup(unit_domain):
    s = single_disk_scenario(unit_domain, alpha=0.08, c0=0.3)
    g = GridSpec(h=1 / 16)
    grid = g.resolve(s)
    from permloc.medium import build_medium

    return s, grid, build_medium(s, grid)


def test_backends_agree(small_setup):
    s, grid, medium = small_setup
    p = PlaneWaveProbe(eta=(2.0, 1.0))
    ex0, ey0, vx0, vy0 = sample_plane_wave(p, grid)
    bcs = probe_boundary_data(p, grid)
    outs = {}
    for backend in ("numpy", "numba"):
        trace, energy, snaps, finals = run_leapfrog(
            grid, medium.binv, 1.0, ex0, ey0, vx0, vy0, *bcs,
            record_trace=True, record_energy=True, snap_stride=3,
            snap_window=(2, 10, 2, 10), backend=backend)
        outs[backend] = (trace, energy, snaps, finals)
    for a, b in zip(outs["numpy"], outs["numba"]):
        if isinstance(a, tuple):
            for x, y in zip(a, b):
                assert np.allclose(x, y, rtol=0, atol=1e-12)
        else:
            assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_dual_backends_agree(small_setup):
    s, grid, _ = small_setup
    rng = np.random.default_rng(0)
    lam_x = rng.standard_normal((grid.nx, grid.ny + 1)) * (1 + 0.3j)
    lam_y = rng.standard_normal((grid.nx + 1, grid.ny)) * (1 - 0.2j)
    lv_x = rng.standard_normal((grid.nx, grid.ny + 1)).astype(complex)
    lv_y = rng.standard_normal((grid.nx + 1, grid.ny)).astype(complex)
    binv = np.full((grid.nx, grid.ny), 1.0)
    duals = {}
    for backend in ("numpy", "numba"):
        dual = np.zeros((grid.nt + 1, 2 * (grid.nx + grid.ny)), dtype=complex)
        get_backend(backend).run_wave_dual(
            lam_x.copy(), lam_y.copy(), lv_x.copy(), lv_y.copy(),
            binv, 1.0, grid.hx, grid.hy, grid.dt, grid.nt, dual)
        duals[backend] = dual
    scale = np.abs(duals["numpy"]).max()
    assert np.allclose(duals["numpy"], duals["numba"], rtol=0, atol=1e-13 * scale)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_control_adjoint_exact(control_domain, backend):
    s = single_disk_scenario(control_domain, alpha=0.08, c0=0.3)
    cp = control_problem_for(s, (2.0, 1.0))
    grid = _resolve_control_grid(cp, GridSpec(h=1 / 12))
    op = _ControlOperator(cp, grid, backend=backend)
    rng = np.random.default_rng(7)
    ns = int(op.mask.sum())
    u = rng.standard_normal((grid.nt + 1, ns)) + 1j * rng.standard_normal((grid.nt + 1, ns))
    Lu = op.apply(u)
    y = tuple(rng.standard_normal(a.shape) + 1j * rng.standard_normal(a.shape) for a in Lu)
    lhs = sum(np.vdot(yi, xi) for yi, xi in zip(y, Lu))
    rhs = np.vdot(op.apply_adjoint(y), u)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
