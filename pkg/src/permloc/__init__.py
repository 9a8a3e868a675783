"""Localization of small magnetic-permeability inclusions in a 2D medium
from time-domain boundary measurements of the electric field's curl."""

__version__ = "0.1.0"

from .model import (
    DomainSpec,
    GridSpec,
    InclusionShape,
    InclusionSpec,
    PlaneWaveProbe,
    Scenario,
    ValidationReport,
    validate_scenario,
    probe_field,
)
from .medium import MediumMap, build_medium
from .traces import BoundaryTrace, trace_difference
from .forward import run_background, run_perturbed
from .potentials import ShapeBoundary, discretize_shape, solve_transmission, polarization_tensor
from .control import BoundaryControl, ControlProblem, cutoff_beta, synthesize_control, verify_quiescence
from .weights import WeightFunction, solve_theta, volterra_residual
from .identify import (
    SpectralGrid,
    averaging_functional,
    sample_spectrum,
    invert_spectrum,
    detect_peaks,
    estimate_tensors,
)

__all__ = [
    "DomainSpec", "GridSpec", "InclusionShape", "InclusionSpec", "PlaneWaveProbe",
    "Scenario", "ValidationReport", "validate_scenario", "probe_field",
    "MediumMap", "build_medium",
    "BoundaryTrace", "trace_difference", "run_background", "run_perturbed",
    "ShapeBoundary", "discretize_shape", "solve_transmission", "polarization_tensor",
    "BoundaryControl", "ControlProblem", "cutoff_beta", "synthesize_control", "verify_quiescence",
    "WeightFunction", "solve_theta", "volterra_residual",
    "SpectralGrid", "averaging_functional", "sample_spectrum", "invert_spectrum",
    "detect_peaks", "estimate_tensors",
]
