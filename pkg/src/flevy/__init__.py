"""Simulation and finite-variation diagnostics for fractional Levy processes."""
from .criterion import CriterionReport, Verdict, fv_criterion, stable_threshold
from .errors import (FlevyError, InsufficientCoverage, InvalidParameter, PreconditionViolation,
                     Unsupported)
from .levy import (CompoundPoisson, IncrementGrid, LevyModel, Mixture, NoJumps, PathSample,
                   TruncatedStable, abs_moment, make_model, sample_increments, splice_two_sided,
                   tail_mass, uniform_grid)
from .synth import FlpPath, KernelKind, KernelSpec, kernel_weight, synthesize, truncation_radius

__version__ = "0.1.0"

__all__ = [
    "CompoundPoisson", "CriterionReport", "FlevyError", "FlpPath", "IncrementGrid",
    "InsufficientCoverage", "InvalidParameter", "KernelKind", "KernelSpec", "LevyModel",
    "Mixture", "NoJumps", "PathSample", "PreconditionViolation", "TruncatedStable",
    "Unsupported", "Verdict", "abs_moment", "fv_criterion", "kernel_weight", "make_model",
    "sample_increments", "splice_two_sided", "stable_threshold", "synthesize", "tail_mass",
    "truncation_radius", "uniform_grid",
]
