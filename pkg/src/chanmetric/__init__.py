"""Monotone metrics on quantum channel families and their estimation consequences."""

__version__ = "0.1.0"

from .channels import (
    Channel, ChannelFamily, ChannelTangent, apply, apply_adjoint, compose, cp_check, family_catalog,
    n_copy, tensor,
)
from .estim import Strategy, outcome_distribution, rate_scan, run_trials
from .metrics import (
    MetricReport, MixtureSimulation, classical_channel_min, cp_ball_radius, g_max_upper, g_min,
    g_min_measured, g_r_output, mixture_bound, parallel_scaling,
)
from .states import classical_fisher, measured_fisher, rld_fisher, sld, sld_fisher

__all__ = [
    "Channel", "ChannelFamily", "ChannelTangent", "MetricReport", "MixtureSimulation", "Strategy",
    "apply", "apply_adjoint", "classical_channel_min", "classical_fisher", "compose", "cp_ball_radius",
    "cp_check", "family_catalog", "g_max_upper", "g_min", "g_min_measured", "g_r_output",
    "measured_fisher", "mixture_bound", "n_copy", "outcome_distribution", "parallel_scaling",
    "rate_scan", "rld_fisher", "run_trials", "sld", "sld_fisher", "tensor",
]
