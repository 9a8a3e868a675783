"""Command-line interface.

Subcommands: forward, control, weights, tensor, reconstruct, sweep, synth.
Exit codes: 0 success, 1 runtime failure, 2 configuration error. The
PERMLOC_WORKERS environment variable overrides the --workers flag.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, NoiseModel, add_noise, grid_from_json, \
    load_config, scenario_from_json
from .control import control_problem_for, synthesize_control, verify_quiescence
from .forward import run_background, run_background_simulated, run_perturbed
from .identify import (
    SpectralGrid,
    SpectrumParams,
    detect_peaks,
    estimate_tensors,
    invert_spectrum,
    sample_spectrum,
    synthetic_spectrum,
)
from .manifest import atomic_write_json, atomic_write_text, config_hash, write_manifest
from .model import InclusionShape, PermlocError, PlaneWaveProbe
from .potentials import discretize_shape, polarization_tensor
from .sweeps import run_sweep
from .traces import read_trace_csv, trace_difference, write_trace_csv
from .weights import solve_theta

log = logging.getLogger("permloc")


def _load_json(path, what: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None


def _load_scenario(path):
    obj = _load_json(path, "scenario")
    if "scenario" in obj:
        obj = obj["scenario"]
    return scenario_from_json(obj)


def _load_grid(path):
    obj = _load_json(path, "grid")
    if "grid" in obj:
        obj = obj["grid"]
    return grid_from_json(obj)


def _parse_eta(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--eta expects 'kx,ky', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _workers(args) -> int:
    env = os.environ.get("PERMLOC_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, args.workers)


def cmd_forward(args) -> int:
    s = _load_scenario(args.scenario)
    g = _load_grid(args.grid)
    eta = _parse_eta(args.eta)
    probe = PlaneWaveProbe(eta=eta, eps0=s.domain.eps0, mu0=s.domain.mu0)
    t0 = time.perf_counter()
    trace, _ = run_perturbed(s, g, probe)
    write_trace_csv(trace, args.out)
    write_manifest(args.out, {"scenario": args.scenario, "grid": args.grid, "eta": eta},
                   timings={"forward_s": time.perf_counter() - t0})
    log.info("forward trace written to %s", args.out)
    return 0


def cmd_control(args) -> int:
    s = _load_scenario(args.scenario)
    g = _load_grid(args.grid)
    eta = _parse_eta(args.eta)
    cp = control_problem_for(s, eta, margin=args.margin)
    t0 = time.perf_counter()
    ctrl = synthesize_control(cp, g, tol=args.tol, max_iters=args.max_iters)
    ratio = verify_quiescence(cp, g, ctrl)
    write_trace_csv(ctrl.as_trace(), args.out)
    sidecar = {
        "iterations": ctrl.iterations,
        "achieved_ratio": ctrl.achieved_ratio,
        "replayed_ratio": ratio,
        "T": ctrl.T,
        "gamma": "full" if s.domain.gamma is None else s.domain.gamma,
        "eta": list(eta),
        "tol": args.tol,
    }
    atomic_write_json(str(args.out) + ".json", sidecar)
    write_manifest(args.out, {"scenario": args.scenario, "grid": args.grid, "eta": eta,
                              "tol": args.tol},
                   timings={"control_s": time.perf_counter() - t0})
    log.info("control written to %s (ratio %.3e, %d iterations)",
             args.out, ctrl.achieved_ratio, ctrl.iterations)
    return 0


def cmd_weights(args) -> int:
    ctrl = read_trace_csv(args.control)
    w = solve_theta(ctrl, args.abs_eta)
    from dataclasses import replace

    theta_trace = replace(ctrl, values=w.theta)
    dtheta_trace = replace(ctrl, values=w.dtheta)
    write_trace_csv(theta_trace, args.out)
    root, ext = os.path.splitext(str(args.out))
    write_trace_csv(dtheta_trace, root + ".dt" + ext)
    write_manifest(args.out, {"control": str(args.control), "abs_eta": args.abs_eta})
    return 0


def _shape_from_args(args) -> InclusionShape:
    params = tuple(float(p) for p in args.params.split(",")) if args.params else ()
    if args.shape == "disk":
        return InclusionShape(kind="disk", params=params or (1.0,),
                              orientation=args.orientation)
    if args.shape == "ellipse":
        return InclusionShape(kind="ellipse", params=params or (1.0, 0.5),
                              orientation=args.orientation)
    return InclusionShape(kind="smooth-polygon", params=params, orientation=args.orientation)


def cmd_tensor(args) -> int:
    shape = _shape_from_args(args)
    bnd = discretize_shape(shape, args.nodes)
    pt = polarization_tensor(bnd, args.contrast, plus_side=args.convention)
    out = {
        "M": [[pt.M[0, 0], pt.M[0, 1]], [pt.M[1, 0], pt.M[1, 1]]],
        "shape": args.shape,
        "params": list(shape.params),
        "orientation": shape.orientation,
        "contrast": args.contrast,
        "nodes": args.nodes,
        "symmetry_defect": pt.symmetry_defect,
        "convention": pt.plus_side,
        "min_eigenvalue": pt.min_eigenvalue(),
    }
    atomic_write_json(args.out, out)
    write_manifest(args.out, {"shape": args.shape, "contrast": args.contrast,
                              "nodes": args.nodes})
    return 0


def cmd_reconstruct(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        s, g = cfg.scenario, cfg.grid
        spectral = cfg.spectral or SpectralGrid(eta_max=args.eta_max, n=args.eta_n)
        params = cfg.spectrum_params()
        cfg_obj = cfg.to_json()
    else:
        s = _load_scenario(args.scenario)
        g = _load_grid(args.grid)
        spectral = SpectralGrid(eta_max=args.eta_max, n=args.eta_n)
        noise = NoiseModel(kind="additive-gaussian", level=args.noise, seed=args.seed) \
            if args.noise > 0 else NoiseModel()
        params = SpectrumParams(control_tol=args.tol, background=args.background,
                                workers=_workers(args),
                                noise_level=noise.level, noise_seed=noise.seed)
        cfg_obj = {"scenario": args.scenario, "grid": args.grid,
                   "eta_max": args.eta_max, "eta_n": args.eta_n}
    t0 = time.perf_counter()
    samples = sample_spectrum(s, g, spectral, params)
    t_samples = time.perf_counter() - t0

    if args.out_spectrum:
        lines = ["eta_x,eta_y,re,im,status"]
        for smp in samples:
            lines.append(f"{smp.eta[0]:.17g},{smp.eta[1]:.17g},"
                         f"{smp.value.real:.17g},{smp.value.imag:.17g},{smp.status}")
        atomic_write_text(args.out_spectrum, "\n".join(lines) + "\n")

    img = invert_spectrum(samples, spectral, s.domain.rect)
    centers = detect_peaks(img, rel_threshold=args.threshold,
                           min_separation=s.c0 / 2.0)
    result: dict = {
        "schema_version": 1,
        "centers": [[float(c[0]), float(c[1])] for c in centers],
        "pixel_spacing": img.pixel_spacing,
        "nyquist_pixel": img.nyquist_pixel,
        "n_samples": len(samples),
        "provenance": {
            "config_sha256": config_hash(cfg_obj),
            "package_version": __version__,
        },
    }
    if centers:
        alpha = s.inclusions[0].alpha if s.inclusions else args.alpha
        if alpha is None:
            raise ConfigError("no alpha available for the tensor fit; pass --alpha")
        recon = estimate_tensors(samples, centers, alpha, mu0=s.domain.mu0)
        result["Q"] = [q.tolist() for q in recon.Q]
        result["fit_residual"] = recon.residual
    atomic_write_json(args.out, result)
    write_manifest(args.out, cfg_obj,
                   timings={"sample_spectrum_s": t_samples,
                            "total_s": time.perf_counter() - t0})
    log.info("reconstruction written to %s (%d centers)", args.out, len(centers))
    return 0


def cmd_sweep(args) -> int:
    s = _load_scenario(args.scenario)
    g = _load_grid(args.grid)
    eta = _parse_eta(args.eta)
    values = [float(v) for v in args.values.split(",")]
    params = SpectrumParams(control_tol=args.tol, background=args.background,
                            workers=_workers(args))
    report = run_sweep(s, g, eta, args.parameter, values, args.metric, params)
    atomic_write_json(args.out, report.to_json())
    write_manifest(args.out, {"scenario": args.scenario, "parameter": args.parameter,
                              "values": values, "metric": args.metric})
    log.info("sweep slope %.3f +/- %.3f", report.slope, report.slope_stderr)
    return 0


def cmd_synth(args) -> int:
    truth = _load_json(args.truth, "truth")
    centers = [np.asarray(c, dtype=float) for c in truth["centers"]]
    Qs = [np.asarray(q, dtype=float) for q in truth["Q"]]
    alpha = float(truth["alpha"])
    spectral = SpectralGrid(eta_max=args.eta_max, n=args.eta_n)
    samples = synthetic_spectrum(spectral, centers, Qs, alpha)
    rng = np.random.default_rng(args.seed)
    lines = ["eta_x,eta_y,re,im,status"]
    values = np.array([smp.value for smp in samples])
    sigma = args.noise * np.linalg.norm(values) / np.sqrt(2.0 * values.size) \
        if args.noise > 0 else 0.0
    for smp in samples:
        v = smp.value
        if sigma > 0:
            v = v + sigma * (rng.standard_normal() + 1j * rng.standard_normal())
        lines.append(f"{smp.eta[0]:.17g},{smp.eta[1]:.17g},"
                     f"{v.real:.17g},{v.imag:.17g},ok")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    write_manifest(args.out, {"truth": str(args.truth), "eta_max": args.eta_max,
                              "eta_n": args.eta_n, "noise": args.noise, "seed": args.seed})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="permloc",
                                 description="small-inclusion localization pipeline")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--log-level", default="warning",
                    choices=["debug", "info", "warning", "error"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="run the perturbed solver, write a trace CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("control", help="synthesize the quieting boundary control")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("weights", help="solve the weight ODE from a control CSV")
    p.add_argument("--control", required=True)
    p.add_argument("--abs-eta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("tensor", help="polarization tensor of a reference shape")
    p.add_argument("--shape", required=True, choices=["disk", "ellipse", "smooth-polygon"])
    p.add_argument("--params", default="")
    p.add_argument("--orientation", type=float, default=0.0)
    p.add_argument("--contrast", type=float, required=True)
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--convention", default="inside", choices=["inside", "outside"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tensor)

    p = sub.add_parser("reconstruct", help="full pipeline: spectrum, image, centers, tensors")
    p.add_argument("--config", default=None)
    p.add_argument("--scenario", default=None)
    p.add_argument("--grid", default=None)
    p.add_argument("--eta-max", type=float, default=8.0)
    p.add_argument("--eta-n", type=int, default=17)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--background", default="simulated", choices=["simulated", "analytic"])
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--out-spectrum", default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="scaling study over alpha, h, or dt")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--parameter", required=True, choices=["alpha", "h", "dt"])
    p.add_argument("--values", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--background", default="simulated", choices=["simulated", "analytic"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="synthetic spectrum from ground-truth centers/tensors")
    p.add_argument("--truth", required=True)
    p.add_argument("--eta-max", type=float, default=8.0)
    p.add_argument("--eta-n", type=int, default=17)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "reconstruct" and not args.config:
            if not (args.scenario and args.grid):
                raise ConfigError("reconstruct needs either --config or --scenario and --grid")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PermlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
