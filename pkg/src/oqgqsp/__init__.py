"""Oscillator-qubit generalized quantum signal processing for vibronic dynamics."""

__version__ = "0.1.0"

from .fock import FockConfig, HybridState
from .potentials import PotentialSpec, load_uracil_dataset
from .fourier import FourierPhaseApproximator, FourierSeries, fourier_coefficients, select_series
from .gqsp import GqspProgram, GqspSynthesizer, complete, find_angles, refine_angles
from .vibronic import VibronicModel, build_model, assemble_matrix, commutator_bound
from .dynamics import (PopulationTrace, TrotterPlan, compare, evolve_compiled, evolve_exact,
                       evolve_trotter, plan)
from .resources import ResourceReport, estimate, tradeoff_sweep

__all__ = [
    "__version__", "FockConfig", "HybridState", "PotentialSpec", "load_uracil_dataset",
    "FourierPhaseApproximator", "FourierSeries", "fourier_coefficients", "select_series",
    "GqspProgram", "GqspSynthesizer", "complete", "find_angles", "refine_angles",
    "VibronicModel", "build_model", "assemble_matrix", "commutator_bound",
    "PopulationTrace", "TrotterPlan", "compare", "evolve_compiled", "evolve_exact",
    "evolve_trotter", "plan", "ResourceReport", "estimate", "tradeoff_sweep",
]
