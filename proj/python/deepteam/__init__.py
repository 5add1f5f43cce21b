"""Deep structured LQG teams with imperfect deep state sharing."""

from ._core import (
    ModelError,
    NumericalError,
    TeamModel,
    __version__,
    brute_force,
    convergence,
    exact_cost,
    load_model,
    model_from_json,
    normalize_influence,
    reference_model_s1,
    reference_model_s2,
    schedules_json,
    simulate,
    solve,
    validate,
)

__all__ = [
    "ModelError",
    "NumericalError",
    "TeamModel",
    "__version__",
    "brute_force",
    "convergence",
    "exact_cost",
    "load_model",
    "model_from_json",
    "normalize_influence",
    "reference_model_s1",
    "reference_model_s2",
    "schedules_json",
    "simulate",
    "solve",
    "validate",
]
