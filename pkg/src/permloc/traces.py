"""Boundary curl traces: the (time x arc) measurement matrices and their file formats.

CSV layout: header row ``t, s0, s1, ...`` with arc positions, then one row per
time sample; complex entries are written as ``re+imj`` strings.

Binary layout (little-endian, for large sweeps): magic ``PLTR``, uint32 version,
uint64 nt+1 and ns, float64 dt, then float64 arrays: arc positions (ns),
values.real and values.imag (both (nt+1) * ns, C order).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, replace

import numpy as np

from .model import PermlocError

_MAGIC = b"PLTR"
_VERSION = 1


class GridMismatchError(PermlocError):
    """Raised when two traces do not share the same sampling grid."""


@dataclass(frozen=True)
class BoundaryTrace:
    """Tangential curl measurement on Gamma: values[n, k] at time n*dt, station k."""

    values: np.ndarray       # (nt+1, ns) complex
    dt: float
    arc: np.ndarray          # (ns,) arclength positions
    weight: np.ndarray       # (ns,) arc quadrature weights
    is_difference: bool = False

    @property
    def nt(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_stations(self) -> int:
        return self.values.shape[1]

    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dt

    def norm(self) -> float:
        """Discrete L2(0,T; L2(Gamma)) norm."""
        wt = np.full(self.values.shape[0], self.dt)
        wt[0] *= 0.5
        wt[-1] *= 0.5
        return float(np.sqrt(np.sum(wt[:, None] * self.weight[None, :]
                                    * np.abs(self.values) ** 2).real))

    def same_grid(self, other: "BoundaryTrace") -> bool:
        return (self.values.shape == other.values.shape
                and abs(self.dt - other.dt) <= 1e-12 * self.dt
                and np.allclose(self.arc, other.arc, rtol=0, atol=1e-12))


def trace_difference(a: BoundaryTrace, b: BoundaryTrace) -> BoundaryTrace:
    """Pointwise a - b with the first time row zeroed exactly."""
    if not a.same_grid(b):
        raise GridMismatchError("traces sampled on different grids")
    values = a.values - b.values
    values[0, :] = 0.0
    return replace(a, values=values, is_difference=True)


def _format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def write_trace_csv(trace: BoundaryTrace, path) -> None:
    with open(path, "w") as f:
        _write_trace_csv(trace, f)


def _write_trace_csv(trace: BoundaryTrace, f: io.TextIOBase) -> None:
    f.write("t," + ",".join(f"{s:.17g}" for s in trace.arc) + "\n")
    for n, t in enumerate(trace.times()):
        row = ",".join(_format_complex(z) for z in trace.values[n])
        f.write(f"{t:.17g},{row}\n")


def read_trace_csv(path, weight: np.ndarray | None = None) -> BoundaryTrace:
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header[0] != "t":
            raise PermlocError(f"{path}: not a trace CSV (header must start with 't')")
        arc = np.array([float(s) for s in header[1:]])
        times, rows = [], []
        for line in f:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            times.append(float(parts[0]))
            rows.append([complex(s) for s in parts[1:]])
    values = np.asarray(rows, dtype=complex)
    times = np.asarray(times)
    if len(times) < 2:
        raise PermlocError(f"{path}: need at least two time samples")
    dt = float(times[1] - times[0])
    if weight is None:
        # uniform-per-side stations: infer weights from consecutive arc gaps
        gaps = np.diff(arc)
        weight = np.empty_like(arc)
        weight[:-1] = gaps
        weight[-1] = gaps[-1]
        weight = np.where(weight <= 0, np.median(gaps[gaps > 0]), weight)
    return BoundaryTrace(values=values, dt=dt, arc=arc, weight=weight)


def write_trace_binary(trace: BoundaryTrace, path) -> None:
    nt1, ns = trace.values.shape
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<QQ", nt1, ns))
        f.write(struct.pack("<d", trace.dt))
        f.write(trace.arc.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(trace.values.real, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(trace.values.imag, dtype="<f8").tobytes())


def read_trace_binary(path) -> BoundaryTrace:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise PermlocError(f"{path}: bad magic, not a trace binary")
        (version,) = struct.unpack("<I", f.read(4))
        if version != _VERSION:
            raise PermlocError(f"{path}: unsupported version {version}")
        nt1, ns = struct.unpack("<QQ", f.read(16))
        (dt,) = struct.unpack("<d", f.read(8))
        arc = np.frombuffer(f.read(8 * ns), dtype="<f8").copy()
        re = np.frombuffer(f.read(8 * nt1 * ns), dtype="<f8").reshape(nt1, ns)
        im = np.frombuffer(f.read(8 * nt1 * ns), dtype="<f8").reshape(nt1, ns)
    gaps = np.diff(arc)
    weight = np.empty_like(arc)
    weight[:-1] = gaps
    weight[-1] = gaps[-1]
    weight = np.where(weight <= 0, np.median(gaps[gaps > 0]), weight)
    return BoundaryTrace(values=(re + 1j * im).copy(), dt=dt, arc=arc, weight=weight)
