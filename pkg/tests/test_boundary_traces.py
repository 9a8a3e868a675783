import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permloc.boundary import gamma_mask, sides_from_stations, station_layout, stations_from_sides
from permloc.model import DomainSpec, GridSpec, Scenario
from permloc.traces import (
    BoundaryTrace,
    GridMismatchError,
    read_trace_binary,
    read_trace_csv,
    trace_difference,
    write_trace_binary,
    write_trace_csv,
)


@pytest.fixture
def layout(unit_domain):
    s = Scenario(unit_domain, (), c0=0.2)
    return station_layout(GridSpec(h=0.125).resolve(s))


def _trace(layout, nt=6, seed=0, dt=0.1):
    rng = np.random.default_rng(seed)
    shape = (nt + 1, layout.n_stations)
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return BoundaryTrace(values=values, dt=dt, arc=layout.arc, weight=layout.weight)


class TestLayout:
    def test_station_count_and_weights(self, layout):
        assert layout.n_stations == 2 * (layout.nx + layout.ny)
        assert np.sum(layout.weight) == pytest.approx(layout.perimeter)

    def test_arc_monotone(self, layout):
        assert np.all(np.diff(layout.arc) > 0)
        assert layout.arc[0] >= 0 and layout.arc[-1] < layout.perimeter

    def test_positions_on_boundary(self, layout):
        on_edge = ((np.abs(layout.pos[:, 0]) < 1e-14) | (np.abs(layout.pos[:, 0] - 1) < 1e-14)
                   | (np.abs(layout.pos[:, 1]) < 1e-14) | (np.abs(layout.pos[:, 1] - 1) < 1e-14))
        assert np.all(on_edge)

    def test_side_roundtrip(self, layout):
        rng = np.random.default_rng(1)
        vals = rng.standard_normal((3, layout.n_stations))
        b, r, t, l = sides_from_stations(layout, vals)
        back = stations_from_sides(layout, b, r, t, l)
        assert np.array_equal(vals, back)

    def test_gamma_mask_partial(self, unit_domain):
        dom = DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=1.0, gamma=[(0.0, 1.0)])
        s = Scenario(dom, (), c0=0.2)
        grid = GridSpec(h=0.125).resolve(s)
        lay = station_layout(grid)
        mask = gamma_mask(lay, dom)
        # only the bottom side lies in [0, 1)
        assert mask.sum() == lay.nx
        assert np.all(lay.side[mask] == 0)


class TestTraceOps:
    def test_difference_zero(self, layout):
        a = _trace(layout)
        d = trace_difference(a, a)
        assert np.all(d.values == 0)
        assert d.is_difference

    def test_difference_first_row_zeroed(self, layout):
        a, b = _trace(layout, seed=1), _trace(layout, seed=2)
        d = trace_difference(a, b)
        assert np.all(d.values[0] == 0)
        assert np.allclose(d.values[1:], a.values[1:] - b.values[1:])

    def test_antisymmetric(self, layout):
        a, b = _trace(layout, seed=3), _trace(layout, seed=4)
        d1 = trace_difference(a, b)
        d2 = trace_difference(b, a)
        assert np.allclose(d1.values, -d2.values)

    @given(seed=st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_translation_invariance(self, seed):
        dom = DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=1.0)
        layout = station_layout(GridSpec(h=0.125).resolve(Scenario(dom, (), c0=0.2)))
        a, b = _trace(layout, seed=seed), _trace(layout, seed=seed + 1)
        c = _trace(layout, seed=seed + 2)
        d1 = trace_difference(a, b)
        ac = BoundaryTrace(values=a.values + c.values, dt=a.dt, arc=a.arc, weight=a.weight)
        bc = BoundaryTrace(values=b.values + c.values, dt=b.dt, arc=b.arc, weight=b.weight)
        d2 = trace_difference(ac, bc)
        assert np.allclose(d1.values, d2.values)

    def test_grid_mismatch(self, layout):
        a = _trace(layout)
        b = BoundaryTrace(values=a.values[:, :-1], dt=a.dt, arc=a.arc[:-1],
                          weight=a.weight[:-1])
        with pytest.raises(GridMismatchError):
            trace_difference(a, b)


class TestTraceIO:
    def test_csv_roundtrip(self, layout, tmp_path):
        a = _trace(layout, nt=5)
        path = tmp_path / "trace.csv"
        write_trace_csv(a, path)
        b = read_trace_csv(path)
        assert np.allclose(a.values, b.values, rtol=0, atol=1e-15)
        assert b.dt == pytest.approx(a.dt)
        assert np.allclose(a.arc, b.arc)

    def test_binary_roundtrip(self, layout, tmp_path):
        a = _trace(layout, nt=5)
        path = tmp_path / "trace.bin"
        write_trace_binary(a, path)
        b = read_trace_binary(path)
        assert np.array_equal(a.values, b.values)
        assert b.dt == a.dt
