"""Robin and Steklov spectra, extremal metrics and FBMI certificates."""

__version__ = "0.1.0"

from .certify import cap_reference, degeneration_experiment, fbmi_certificate  # noqa: E402
from .config import EigenProblemSpec, FunctionalSpec, OptimizerConfig  # noqa: E402
from .functionals import (  # noqa: E402
    criticality_residual_theta,
    eval_functional,
    eval_general_family,
    grad_functional,
)
from .optimize import maximize_xi_plus, minimize_theta_criticality  # noqa: E402
from .spectra import dirichlet_spectrum, freq_steklov_spectrum, robin_spectrum  # noqa: E402

__all__ = [
    "EigenProblemSpec",
    "FunctionalSpec",
    "OptimizerConfig",
    "cap_reference",
    "criticality_residual_theta",
    "degeneration_experiment",
    "dirichlet_spectrum",
    "eval_functional",
    "eval_general_family",
    "fbmi_certificate",
    "freq_steklov_spectrum",
    "grad_functional",
    "maximize_xi_plus",
    "minimize_theta_criticality",
    "robin_spectrum",
]
