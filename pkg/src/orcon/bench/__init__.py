"""Benchmark problems and their start-point samplers."""

from .disjunctive import build_disjunctive, sample_disjunctive_starts
from .gap import (
    build_gap_domain,
    gap_closed_form,
    gap_domain_bruteforce,
    gap_domain_global,
    sample_gap_starts,
    sample_gap_vector,
)
from .heat import (
    HeatGridConfig,
    build_heat_control,
    heat_coarse_global_estimate,
    sample_heat_starts,
)
from .toys import build_toy_branch, build_toy_symmetric

__all__ = [
    "HeatGridConfig",
    "build_disjunctive",
    "build_gap_domain",
    "build_heat_control",
    "build_toy_branch",
    "build_toy_symmetric",
    "gap_closed_form",
    "gap_domain_bruteforce",
    "gap_domain_global",
    "heat_coarse_global_estimate",
    "sample_disjunctive_starts",
    "sample_gap_starts",
    "sample_gap_vector",
    "sample_heat_starts",
]
