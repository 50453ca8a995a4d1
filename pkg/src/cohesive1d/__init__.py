"""Cohesive fracture energies from optimal damage profiles in one dimension."""

__version__ = "0.1.0"

from .cohesive_law import g, g0, g_mu, m_of_s, profile_alpha_beta, s_frac, s_of_m
from .model import CustomSampled, FamilyA, FamilyB, eval_h, validate_model
from .table import CohesiveLaw, default_s_grid, tabulate_law

__all__ = [
    "__version__",
    "FamilyA",
    "FamilyB",
    "CustomSampled",
    "eval_h",
    "validate_model",
    "g0",
    "g",
    "g_mu",
    "m_of_s",
    "s_of_m",
    "s_frac",
    "profile_alpha_beta",
    "CohesiveLaw",
    "tabulate_law",
    "default_s_grid",
]
