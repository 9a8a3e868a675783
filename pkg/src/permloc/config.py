"""Experiment configuration: strict JSON (de)serialization and the noise model.

Scenario, grid, probe, spectral grid, control parameters, noise and outputs
live in one JSON document. Unknown keys are rejected anywhere in the tree, and
a parsed config re-serializes bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .identify import SpectralGrid, SpectrumParams
from .model import DomainSpec, GridSpec, InclusionShape, InclusionSpec, PermlocError, Scenario
from .traces import BoundaryTrace

SCHEMA_VERSION = 1


class ConfigError(PermlocError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Seeded additive complex Gaussian noise at a relative level."""

    kind: str = "none"            # 'none' | 'additive-gaussian'
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "additive-gaussian"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.level < 0:
            raise ConfigError("noise level must be >= 0")


def add_noise(trace: BoundaryTrace, nm: NoiseModel) -> BoundaryTrace:
    """Perturb a trace so the expected Frobenius perturbation is level * |trace|.

    The first time row stays exactly zero for difference traces.
    """
    if nm.kind == "none" or nm.level == 0.0:
        return trace
    rng = np.random.default_rng(nm.seed)
    scale = np.linalg.norm(trace.values)
    count = trace.values.size
    sigma = nm.level * scale / np.sqrt(2.0 * count)
    noise = sigma * (rng.standard_normal(trace.values.shape)
                     + 1j * rng.standard_normal(trace.values.shape))
    values = trace.values + noise
    if trace.is_difference:
        values[0, :] = 0.0
    from dataclasses import replace

    return replace(trace, values=values)


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)} at {path}")


def shape_to_json(shape: InclusionShape) -> dict:
    out = {"kind": shape.kind}
    if shape.kind == "disk":
        out["radius"] = shape.params[0]
    elif shape.kind == "ellipse":
        out["semi_axes"] = list(shape.params)
    else:
        out["vertices"] = [list(v) for v in shape.vertices()]
    if shape.orientation != 0.0:
        out["orientation"] = shape.orientation
    return out


def shape_from_json(obj: dict, path: str) -> InclusionShape:
    _check_keys(obj, {"kind", "radius", "semi_axes", "vertices", "orientation"}, path)
    kind = obj.get("kind")
    orientation = float(obj.get("orientation", 0.0))
    if kind == "disk":
        return InclusionShape(kind="disk", params=(float(obj["radius"]),),
                              orientation=orientation)
    if kind == "ellipse":
        a, b = obj["semi_axes"]
        return InclusionShape(kind="ellipse", params=(float(a), float(b)),
                              orientation=orientation)
    if kind == "smooth-polygon":
        flat = tuple(float(c) for v in obj["vertices"] for c in v)
        return InclusionShape(kind="smooth-polygon", params=flat, orientation=orientation)
    raise ConfigError(f"unknown shape kind {kind!r} at {path}")


def scenario_to_json(s: Scenario) -> dict:
    dom = {"rect": list(s.domain.rect), "T": s.domain.T,
           "eps0": s.domain.eps0, "mu0": s.domain.mu0}
    if s.domain.gamma is not None:
        dom["gamma"] = [list(a) for a in s.domain.gamma]
    incs = [{"center": list(i.center), "alpha": i.alpha,
             "shape": shape_to_json(i.shape), "mu": i.mu} for i in s.inclusions]
    return {"domain": dom, "inclusions": incs, "c0": s.c0}


def scenario_from_json(obj: dict, path: str = "scenario") -> Scenario:
    _check_keys(obj, {"domain", "inclusions", "c0"}, path)
    dom_obj = obj["domain"]
    _check_keys(dom_obj, {"rect", "T", "eps0", "mu0", "gamma"}, f"{path}.domain")
    gamma = dom_obj.get("gamma")
    domain = DomainSpec(
        rect=tuple(float(v) for v in dom_obj["rect"]),
        T=float(dom_obj["T"]),
        gamma=None if gamma is None else [tuple(map(float, a)) for a in gamma],
        eps0=float(dom_obj.get("eps0", 1.0)),
        mu0=float(dom_obj.get("mu0", 1.0)),
    )
    incs = []
    for k, inc in enumerate(obj.get("inclusions", [])):
        ipath = f"{path}.inclusions[{k}]"
        _check_keys(inc, {"center", "alpha", "shape", "mu"}, ipath)
        incs.append(InclusionSpec(
            center=tuple(float(v) for v in inc["center"]),
            alpha=float(inc["alpha"]),
            shape=shape_from_json(inc["shape"], f"{ipath}.shape"),
            mu=float(inc["mu"]),
        ))
    return Scenario(domain=domain, inclusions=tuple(incs), c0=float(obj.get("c0", 0.1)))


def grid_to_json(g: GridSpec) -> dict:
    out = {"h": g.h}
    if g.dt is not None:
        out["dt"] = g.dt
    if g.cfl_safety != 0.9:
        out["cfl_safety"] = g.cfl_safety
    return out


def grid_from_json(obj: dict, path: str = "grid") -> GridSpec:
    _check_keys(obj, {"h", "dt", "cfl_safety"}, path)
    return GridSpec(h=float(obj["h"]),
                    dt=None if obj.get("dt") is None else float(obj["dt"]),
                    cfl_safety=float(obj.get("cfl_safety", 0.9)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs; the schema round-trips bit-exactly."""

    scenario: Scenario
    grid: GridSpec
    probe_eta: tuple[float, float] | None = None
    spectral: SpectralGrid | None = None
    control_tol: float = 1e-3
    control_max_iters: int = 200
    margin: float | None = None
    background: str = "simulated"
    noise: NoiseModel = field(default_factory=NoiseModel)
    workers: int = 1
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    def spectrum_params(self) -> SpectrumParams:
        return SpectrumParams(
            control_tol=self.control_tol,
            control_max_iters=self.control_max_iters,
            margin=self.margin,
            background=self.background,
            workers=self.workers,
            noise_level=self.noise.level if self.noise.kind != "none" else 0.0,
            noise_seed=self.noise.seed if self.noise.seed else self.seed,
        )

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario_to_json(self.scenario),
            "grid": grid_to_json(self.grid),
        }
        if self.probe_eta is not None:
            out["probe"] = {"eta": list(self.probe_eta)}
        if self.spectral is not None:
            out["spectral_grid"] = {"eta_max": self.spectral.eta_max, "n": self.spectral.n}
        out["control"] = {"tol": self.control_tol, "max_iters": self.control_max_iters}
        if self.margin is not None:
            out["control"]["margin"] = self.margin
        out["background"] = self.background
        if self.noise.kind != "none":
            out["noise"] = {"kind": self.noise.kind, "level": self.noise.level,
                            "seed": self.noise.seed}
        out["workers"] = self.workers
        out["seed"] = self.seed
        if self.outputs:
            out["outputs"] = dict(self.outputs)
        return out

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        _check_keys(obj, {"schema_version", "scenario", "grid", "probe", "spectral_grid",
                          "control", "background", "noise", "workers", "seed", "outputs"},
                    "config")
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        scenario = scenario_from_json(obj["scenario"])
        grid = grid_from_json(obj["grid"])
        probe_eta = None
        if "probe" in obj:
            _check_keys(obj["probe"], {"eta"}, "config.probe")
            probe_eta = tuple(float(v) for v in obj["probe"]["eta"])
        spectral = None
        if "spectral_grid" in obj:
            _check_keys(obj["spectral_grid"], {"eta_max", "n"}, "config.spectral_grid")
            spectral = SpectralGrid(eta_max=float(obj["spectral_grid"]["eta_max"]),
                                    n=int(obj["spectral_grid"]["n"]))
        ctrl = obj.get("control", {})
        _check_keys(ctrl, {"tol", "max_iters", "margin"}, "config.control")
        noise = NoiseModel()
        if "noise" in obj:
            _check_keys(obj["noise"], {"kind", "level", "seed"}, "config.noise")
            noise = NoiseModel(kind=obj["noise"].get("kind", "none"),
                               level=float(obj["noise"].get("level", 0.0)),
                               seed=int(obj["noise"].get("seed", 0)))
        return ExperimentConfig(
            scenario=scenario,
            grid=grid,
            probe_eta=probe_eta,
            spectral=spectral,
            control_tol=float(ctrl.get("tol", 1e-3)),
            control_max_iters=int(ctrl.get("max_iters", 200)),
            margin=None if ctrl.get("margin") is None else float(ctrl["margin"]),
            background=obj.get("background", "simulated"),
            noise=noise,
            workers=int(obj.get("workers", 1)),
            seed=int(obj.get("seed", 0)),
            outputs=dict(obj.get("outputs", {})),
        )


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}: {exc.msg}") from None
    return ExperimentConfig.from_json(obj)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(cfg.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")
