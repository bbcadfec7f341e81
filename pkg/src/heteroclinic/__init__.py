"""Heteroclinic connections of x'' = a(eps t) V'(x) between the wells -1 and +1,
computed by direct minimisation of a discrete action.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .potential import (  # noqa: E402
    Potential,
    QuarticPotential,
    TabulatedPotential,
    ModifiedPotential,
    make_quartic,
    load_tabulated,
    modify,
    well_constants,
)
from .coefficient import Coefficient, make_standard, load_tabulated_coefficient, verify_class  # noqa: E402
from .trajectory import Grid, Path, tanh_seed, tail_report, transition_interval, sup_bound_check  # noqa: E402
from .action import DiscreteAction, action, gradient, residual, dual_norm, action_report  # noqa: E402
from .solver import (  # noqa: E402
    SolveConfig,
    minimize,
    verify_solution,
    estimate_levels,
    epsilon_sweep,
    lambda_tau,
    default_seed,
)
from .oracle import level_quadrature, tanh_exact, profile_integrate, autonomous_oracle  # noqa: E402

__all__ = [
    "Potential", "QuarticPotential", "TabulatedPotential", "ModifiedPotential", "make_quartic",
    "load_tabulated", "modify", "well_constants", "Coefficient", "make_standard",
    "load_tabulated_coefficient", "verify_class", "Grid", "Path", "tanh_seed", "tail_report",
    "transition_interval", "sup_bound_check", "DiscreteAction", "action", "gradient", "residual",
    "dual_norm", "action_report", "SolveConfig", "minimize", "verify_solution", "estimate_levels",
    "epsilon_sweep", "lambda_tau", "default_seed", "level_quadrature", "tanh_exact",
    "profile_integrate", "autonomous_oracle",
]
