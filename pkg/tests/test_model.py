import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permloc.model import (
    DomainSpec,
    GridSpec,
    InclusionShape,
    InclusionSpec,
    PlaneWaveProbe,
    Scenario,
    perp_unit,
    probe_field,
    validate_scenario,
)

from conftest import disk_shape, star_shape


class TestValidation:
    def test_single_disk_ok(self, unit_domain):
        s = Scenario(unit_domain, (InclusionSpec((0.5, 0.5), 0.05, disk_shape(), 2.0),),
                     c0=0.3)
        assert validate_scenario(s).ok

    def test_pair_separation_violation(self, unit_domain):
        c0 = 0.3
        incs = (InclusionSpec((0.4, 0.5), 0.02, disk_shape(), 2.0),
                InclusionSpec((0.4 + c0 / 2, 0.5), 0.02, disk_shape(), 2.0))
        report = validate_scenario(Scenario(unit_domain, incs, c0=c0))
        assert not report.ok
        kinds = {v.kind for v in report.violations}
        assert "pair_separation" in kinds
        assert any(v.indices == (0, 1) for v in report.violations)

    def test_boundary_separation_violation(self, unit_domain):
        c0 = 0.3
        incs = (InclusionSpec((c0 / 2, 0.5), 0.02, disk_shape(), 2.0),)
        report = validate_scenario(Scenario(unit_domain, incs, c0=c0))
        assert not report.ok
        assert any(v.kind == "boundary_separation" and v.indices == (0,)
                   for v in report.violations)

    def test_overlap_detected(self, unit_domain):
        incs = (InclusionSpec((0.45, 0.5), 0.2, disk_shape(), 2.0),
                InclusionSpec((0.62, 0.5), 0.2, disk_shape(), 2.0))
        report = validate_scenario(Scenario(unit_domain, incs, c0=0.15))
        assert any(v.kind == "overlap" for v in report.violations)

    @given(c0_big=st.floats(0.05, 0.4), shrink=st.floats(0.1, 0.99))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_c0(self, c0_big, shrink):
        # if valid at c0, valid at any smaller positive c0
        dom = DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=1.0)
        incs = (InclusionSpec((0.5, 0.5), 0.02, disk_shape(), 2.0),)
        big = validate_scenario(Scenario(dom, incs, c0=c0_big))
        small = validate_scenario(Scenario(dom, incs, c0=c0_big * shrink))
        if big.ok:
            assert small.ok


class TestProbe:
    def test_e_at_origin_t0(self):
        p = PlaneWaveProbe(eta=(3.0, 0.0))
        E, _ = probe_field(p, np.zeros(2), 0.0)
        assert np.allclose(E, p.eta_perp)

    def test_curl_axis_aligned(self):
        k = 2.5
        p = PlaneWaveProbe(eta=(k, 0.0))
        assert np.allclose(p.eta_perp, [0.0, 1.0])
        _, curl = probe_field(p, np.zeros(2), 0.0)
        assert np.allclose(curl, 1j * k)

    def test_unit_modulus_everywhere(self):
        p = PlaneWaveProbe(eta=(2.0, -1.0))
        rng = np.random.default_rng(0)
        x = rng.uniform(-2, 2, size=(50, 2))
        E, curl = probe_field(p, x, 0.7)
        assert np.allclose(np.linalg.norm(E, axis=-1), 1.0)
        assert np.allclose(np.abs(curl), p.abs_eta)

    def test_perp_convention(self):
        for eta in [(1.0, 2.0), (-1.0, 2.0), (3.0, 0.0), (0.0, -2.0), (-1.0, -1.0)]:
            perp = perp_unit(eta)
            assert abs(perp @ np.asarray(eta)) < 1e-14
            assert abs(np.hypot(*perp) - 1.0) < 1e-14
            assert np.allclose(perp, perp_unit((-eta[0], -eta[1])))

    def test_solves_continuum_system(self):
        # eps0 dtt E + curl curl E = 0 for the analytic wave, via exact algebra
        p = PlaneWaveProbe(eta=(2.0, 1.0), eps0=1.0, mu0=1.0)
        eta = p.eta_vec
        perp = p.eta_perp
        # dtt gives -(c|eta|)^2 E; curl(curl E) gives |eta|^2 E for div-free waves
        lhs = -p.eps0 * p.omega**2 * perp + (1.0 / p.mu0) * (eta @ eta) * perp
        assert np.allclose(lhs, 0.0, atol=1e-14)


class TestGridSpec:
    def test_cfl_auto_dt(self, unit_domain):
        s = Scenario(unit_domain, (), c0=0.2)
        grid = GridSpec(h=0.05).resolve(s)
        assert grid.dt <= 0.05 / math.sqrt(2.0) + 1e-15
        assert grid.nt * grid.dt == pytest.approx(unit_domain.T)

    def test_cfl_violation_raises(self, unit_domain):
        s = Scenario(unit_domain, (), c0=0.2)
        with pytest.raises(Exception):
            GridSpec(h=0.05, dt=0.05).resolve(s)

    def test_mu_min_tightens_cfl(self, unit_domain):
        # a low-permeability inclusion speeds up the wave and shrinks dt
        fast = Scenario(unit_domain,
                        (InclusionSpec((0.5, 0.5), 0.05, disk_shape(), 0.25),), c0=0.3)
        slow = Scenario(unit_domain, (), c0=0.3)
        assert GridSpec(h=0.05).resolve(fast).dt < GridSpec(h=0.05).resolve(slow).dt


class TestShapes:
    def test_disk_area(self):
        assert disk_shape(1.0).area() == pytest.approx(math.pi, rel=1e-12)
        assert disk_shape(0.5).area() == pytest.approx(math.pi / 4, rel=1e-12)

    def test_ellipse_area(self):
        e = InclusionShape(kind="ellipse", params=(2.0, 1.0))
        assert e.area() == pytest.approx(2.0 * math.pi, rel=1e-12)

    def test_star_contains_origin(self):
        star = star_shape()
        assert star.contains(np.zeros((1, 2)))[0]
        assert not star.contains(np.array([[2.0, 0.0]]))[0]
        assert star.area() > 0

    def test_rotation_preserves_area(self):
        s0 = star_shape()
        s1 = star_shape(orientation=0.7)
        assert s0.area() == pytest.approx(s1.area(), rel=1e-10)

    def test_smooth_polygon_passes_through_vertices(self):
        star = star_shape(n_verts=10)
        verts = star.vertices()
        t = 2 * np.pi * np.arange(10) / 10
        y, _, _ = star.curve(t)
        assert np.allclose(y, verts, atol=1e-12)
