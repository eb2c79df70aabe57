"""Bergman kernel coefficients from Kähler-potential jets, with exact oracles and Gevrey diagnostics."""

from .jets import Jet
from .kernels import BACKEND
from .scalars import RATIONAL, CScalar, ScalarMode, bigfloat, parse_mode
from .potentials import (
    PotentialModel,
    bargmann_fock,
    fubini_study,
    radial_quartic,
    radial_series,
    from_config,
    diastasis,
)
from .recursion import CoefficientTable, compute_bm, sup_majorant
from .oracle import kernel_eval, monomial_norms
from .asymptotics import compare_with_oracle, eval_expansion, log_kernel_residual
from .growth import check_lower_bound, growth_fit, majorant_recursion
from .gevrey import build_cutoff, calibrated_extension, dbar_extension, extend, vanishing_rate_fit

__version__ = "0.1.0"

__all__ = [
    "Jet", "BACKEND", "RATIONAL", "CScalar", "ScalarMode", "bigfloat", "parse_mode",
    "PotentialModel", "bargmann_fock", "fubini_study", "radial_quartic", "radial_series",
    "from_config", "diastasis",
    "CoefficientTable", "compute_bm", "sup_majorant",
    "kernel_eval", "monomial_norms",
    "compare_with_oracle", "eval_expansion", "log_kernel_residual",
    "check_lower_bound", "growth_fit", "majorant_recursion",
    "build_cutoff", "calibrated_extension", "dbar_extension", "extend", "vanishing_rate_fit",
    "__version__",
]
