"""Numerical toolkit for the Lempert function of the spectral ball and the symmetrized polydisc."""

from . import errors
from .bounds import bharali_lower, disc_search_upper, lift_upper_cyclic, sandwich_report
from .config import RunConfig
from .discontinuity_lab import (PerturbationSpec, discontinuity_certificate, example_5_1,
                                example_5_2, green_vs_lempert_chain)
from .discs import AnalyticDisc, MatrixDisc
from .errors import *  # noqa: F403
from .gn_geometry import ball_radius_in_Gn, caratheodory_lb_G3, in_Gn
from .lifting import build_lift, degree_vector, lift_through, nilpotent_normal_form
from .matrix_core import companion, is_cyclic, sigma, spectral_data

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "AnalyticDisc", "MatrixDisc",
    "sigma", "companion", "is_cyclic", "spectral_data",
    "in_Gn", "ball_radius_in_Gn", "caratheodory_lb_G3",
    "bharali_lower", "disc_search_upper", "lift_upper_cyclic", "sandwich_report",
    "build_lift", "degree_vector", "lift_through", "nilpotent_normal_form",
    "PerturbationSpec", "discontinuity_certificate", "example_5_1", "example_5_2",
    "green_vs_lempert_chain",
] + [name for name in dir(errors) if name[0].isupper()]
