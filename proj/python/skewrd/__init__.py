"""Discontinuous Galerkin solver for skew-gradient reaction-diffusion systems."""

from ._skewrd import (
    ConfigError,
    DgSpace,
    DomainError,
    Mesh,
    NumericalError,
    Stability,
    TwoComponentModel,
    analyze,
    classify_stability,
    deim_select,
    interval_mesh,
    pod_basis,
    preset_config,
    preset_names,
    run,
    simulate,
    steady_states,
    triangular_mesh,
    turing_thresholds,
)

__all__ = [
    "ConfigError",
    "DgSpace",
    "DomainError",
    "Mesh",
    "NumericalError",
    "Stability",
    "TwoComponentModel",
    "analyze",
    "classify_stability",
    "deim_select",
    "interval_mesh",
    "pod_basis",
    "preset_config",
    "preset_names",
    "run",
    "simulate",
    "steady_states",
    "triangular_mesh",
    "turing_thresholds",
]
