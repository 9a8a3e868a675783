import numpy as np
import pytest

from permloc.medium import build_medium
from permloc.model import (
    DomainSpec,
    GridSpec,
    GridTooCoarseError,
    InclusionShape,
    InclusionSpec,
    Scenario,
)

from conftest import disk_shape


def test_no_inclusions_uniform(unit_domain):
    s = Scenario(unit_domain, (), c0=0.2)
    grid = GridSpec(h=0.05).resolve(s)
    m = build_medium(s, grid)
    assert np.all(m.binv == 1.0)
    assert np.all(m.member == -1)


def test_background_mu0(unit_domain):
    dom = DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=1.0, mu0=4.0)
    s = Scenario(dom, (), c0=0.2)
    m = build_medium(s, GridSpec(h=0.05).resolve(s))
    assert np.allclose(m.binv, 0.25)


def test_interior_cell_value(unit_domain):
    # cells strictly inside a mu=2 inclusion carry 1/2
    inc = InclusionSpec((0.5, 0.5), 0.2, disk_shape(), 2.0)
    s = Scenario(unit_domain, (inc,), c0=0.25)
    grid = GridSpec(h=0.02).resolve(s)
    m = build_medium(s, grid)
    xs, ys = grid.cell_centers()
    i = np.searchsorted(xs, 0.5)
    j = np.searchsorted(ys, 0.5)
    assert m.binv[i, j] == pytest.approx(0.5, abs=1e-12)
    assert m.member[i, j] == 0
    assert m.binv[2, 2] == 1.0


def test_straddling_cell_mean():
    # a half-covered cell averages the inverse permeabilities: (1 + 1/2)/2 = 3/4.
    # big inclusion whose edge is a near-straight vertical line through a cell center
    dom = DomainSpec(rect=(0.0, 0.0, 4.0, 4.0), T=1.0)
    inc = InclusionSpec((2.0, 2.0), 1.0, disk_shape(1.0), 2.0)
    s = Scenario(dom, (inc,), c0=0.9)
    # h = 0.08 puts a cell center exactly on the disk edge at (3, 2)
    grid = GridSpec(h=0.08).resolve(s)
    m = build_medium(s, grid)
    xs, ys = grid.cell_centers()
    i = int(np.argmin(np.abs(xs - 3.0)))
    j = int(np.argmin(np.abs(ys - 2.0)))
    assert abs(xs[i] - 3.0) < 1e-12
    assert m.binv[i, j] == pytest.approx(0.75, abs=0.02)


def test_purity(unit_domain):
    inc = InclusionSpec((0.5, 0.5), 0.1, disk_shape(), 2.0)
    s = Scenario(unit_domain, (inc,), c0=0.3)
    grid = GridSpec(h=0.02).resolve(s)
    a = build_medium(s, grid)
    b = build_medium(s, grid)
    assert np.array_equal(a.binv, b.binv)
    assert np.array_equal(a.member, b.member)


def test_too_coarse_refusal(unit_domain):
    inc = InclusionSpec((0.5, 0.5), 0.01, disk_shape(), 2.0)
    s = Scenario(unit_domain, (inc,), c0=0.3)
    grid = GridSpec(h=0.05).resolve(s)
    with pytest.raises(GridTooCoarseError) as exc:
        build_medium(s, grid)
    assert exc.value.required == pytest.approx(0.01)


def test_area_consistency(unit_domain):
    # summed (1 - binv) mass approximates the inclusion area with contrast weight
    alpha, mu = 0.1, 2.0
    inc = InclusionSpec((0.5, 0.5), alpha, disk_shape(), mu)
    s = Scenario(unit_domain, (inc,), c0=0.3)
    grid = GridSpec(h=0.01).resolve(s)
    m = build_medium(s, grid)
    mass = np.sum(1.0 - m.binv) * grid.hx * grid.hy
    expected = (1.0 - 1.0 / mu) * np.pi * alpha**2
    assert mass == pytest.approx(expected, rel=0.01)
