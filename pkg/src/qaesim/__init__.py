"""Noisy amplitude estimation with adaptive measurement bases."""

from .adaptive import AdaptiveConfig, run_four_param, run_two_step_adaptive
from .metrology import ccrb_theta_comp, qcrb_theta, qfim_closed
from .oracle import GroverSchedule, NoisyStateModel, SinOracle, build_a_sin

__all__ = [
    "AdaptiveConfig",
    "GroverSchedule",
    "NoisyStateModel",
    "SinOracle",
    "build_a_sin",
    "ccrb_theta_comp",
    "qcrb_theta",
    "qfim_closed",
    "run_four_param",
    "run_two_step_adaptive",
]
__version__ = "0.1.0"
