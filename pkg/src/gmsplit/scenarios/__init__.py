"""Reference scenarios: polar conversion, two-body (a, M) drift and the CR3BP NRHO flow."""

from .cr3bp import (EARTH_MOON_MU, NRHO_PERIOD, NRHO_STATE, Cr3bpDerivatives, Cr3bpModel,
                    IntegratorConfig, cr3bp_flow_stt, jacobi_constant, propagate_states)
from .polar import PolarModel, polar_truth_pdf
from .spec import PRESETS, ScenarioSpec, build_model, preset
from .truth import (PullbackTruth, SampleSet, analytic_truth, is_analytic, load_samples,
                    mc_truth_samples, save_samples)
from .twobody import TwoBodyModel, orbital_period, twobody_truth_pdf

__all__ = [
    "EARTH_MOON_MU", "NRHO_PERIOD", "NRHO_STATE", "Cr3bpDerivatives", "Cr3bpModel",
    "IntegratorConfig", "cr3bp_flow_stt", "jacobi_constant", "propagate_states",
    "PolarModel", "polar_truth_pdf", "PRESETS", "ScenarioSpec", "build_model", "preset",
    "PullbackTruth", "SampleSet", "analytic_truth", "is_analytic", "load_samples",
    "mc_truth_samples", "save_samples", "TwoBodyModel", "orbital_period", "twobody_truth_pdf",
]
