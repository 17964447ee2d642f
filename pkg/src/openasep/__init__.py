"""Stationary measures of the open asymmetric simple exclusion process."""

from .core import (
    CapacityError,
    ConfigDist,
    DensityPhase,
    ModelParams,
    NumericalError,
    Phase,
    Region,
    SignedMassError,
    ValidationError,
    WasepSpec,
    bernoulli_product,
    classify_phase,
    liggett_limit_density,
    make_params,
    params_from_uv,
    project,
    q_pochhammer,
    tv_distance,
    wasep_params,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigDist",
    "DensityPhase",
    "ModelParams",
    "NumericalError",
    "Phase",
    "Region",
    "SignedMassError",
    "ValidationError",
    "WasepSpec",
    "bernoulli_product",
    "classify_phase",
    "liggett_limit_density",
    "make_params",
    "params_from_uv",
    "project",
    "q_pochhammer",
    "tv_distance",
    "wasep_params",
    "__version__",
]
