"""Parameter sweeps with log-log slope fits for the scaling studies."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .forward import homogeneous_plane_wave_errors, perturbed_vs_background_errors, \
    run_background, run_background_simulated, run_perturbed
from .identify import SpectrumParams, averaging_functional
from .model import GridSpec, PermlocError, PlaneWaveProbe, Scenario
from .traces import trace_difference
from .weights import solve_theta

METRICS = ("field_diff", "curl_diff", "lemma_norm", "trace_diff", "aleph", "plane_wave_error")


@dataclass(frozen=True)
class SweepReport:
    parameter: str
    values: list[float]
    metric: str
    metrics: list[float]
    slope: float
    slope_stderr: float

    def to_json(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": list(self.values),
            "metric": self.metric,
            "metric_values": list(self.metrics),
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
        }


def fit_loglog_slope(xs, ys) -> tuple[float, float]:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    if len(lx) < 3:
        raise PermlocError("slope fit needs at least 3 points")
    coef, res = np.polyfit(lx, ly, 1, cov=False), None
    slope, intercept = coef
    pred = slope * lx + intercept
    dof = len(lx) - 2
    s2 = float(np.sum((ly - pred) ** 2)) / max(dof, 1)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    return float(slope), float(np.sqrt(s2 / sxx))


def _with_alpha(s: Scenario, alpha: float) -> Scenario:
    incs = tuple(replace(i, alpha=alpha) for i in s.inclusions)
    return Scenario(domain=s.domain, inclusions=incs, c0=s.c0)


def _metric_value(metric: str, s: Scenario, g: GridSpec, p: PlaneWaveProbe,
                  params: SpectrumParams) -> float:
    if metric == "plane_wave_error":
        _, field_err, _, _ = homogeneous_plane_wave_errors(s, g, p, backend=params.backend)
        return float(field_err[-1])
    if metric in ("field_diff", "curl_diff", "lemma_norm"):
        _, field_err, curl_err, dt_err = perturbed_vs_background_errors(
            s, g, p, backend=params.backend)
        if metric == "field_diff":
            return float(np.max(field_err))
        if metric == "curl_diff":
            return float(np.max(curl_err))
        return float(np.max(np.sqrt(field_err**2 + curl_err**2)) + np.max(dt_err))
    if metric == "trace_diff":
        meas, _ = run_perturbed(s, g, p, backend=params.backend)
        if params.background == "analytic":
            bg = run_background(s, g, p)
        else:
            bg = run_background_simulated(s, g, p, backend=params.backend)
        return trace_difference(meas, bg).norm()
    if metric == "aleph":
        from .control import control_problem_for, synthesize_control

        meas, _ = run_perturbed(s, g, p, backend=params.backend)
        if params.background == "analytic":
            bg = run_background(s, g, p)
        else:
            bg = run_background_simulated(s, g, p, backend=params.backend)
        dm = trace_difference(meas, bg)
        cp = control_problem_for(s, p.eta, margin=params.margin)
        ctrl = synthesize_control(cp, g, tol=params.control_tol,
                                  max_iters=params.control_max_iters,
                                  backend=params.backend)
        w = solve_theta(ctrl, p.abs_eta, speed=p.speed)
        return abs(averaging_functional(dm, w))
    raise PermlocError(f"unknown sweep metric {metric!r}")


def run_sweep(s: Scenario, g: GridSpec, eta, parameter: str, values,
              metric: str, params: SpectrumParams | None = None) -> SweepReport:
    """Run the pipeline per parameter value and fit the log-log slope.

    ``parameter`` is one of alpha | h | dt; any individual failure aborts the
    sweep with the values measured so far attached to the raised error.
    """
    if params is None:
        params = SpectrumParams()
    values = [float(v) for v in values]
    if len(values) < 3:
        raise PermlocError("sweep needs at least 3 parameter values")
    if metric not in METRICS:
        raise PermlocError(f"unknown sweep metric {metric!r}")

    measured = []
    for v in values:
        if parameter == "alpha":
            sv, gv = _with_alpha(s, v), g
        elif parameter == "h":
            sv, gv = s, GridSpec(h=v, dt=None, cfl_safety=g.cfl_safety)
        elif parameter == "dt":
            sv, gv = s, GridSpec(h=g.h, dt=v, cfl_safety=g.cfl_safety)
        else:
            raise PermlocError(f"unknown sweep parameter {parameter!r}")
        probe = PlaneWaveProbe(eta=tuple(eta), eps0=sv.domain.eps0, mu0=sv.domain.mu0)
        try:
            measured.append(_metric_value(metric, sv, gv, probe, params))
        except Exception as exc:
            raise PermlocError(
                f"sweep aborted at {parameter}={v:g}: {exc}; partial metrics {measured}"
            ) from exc

    slope, stderr = fit_loglog_slope(values, measured)
    return SweepReport(parameter=parameter, values=values, metric=metric,
                       metrics=measured, slope=slope, slope_stderr=stderr)
