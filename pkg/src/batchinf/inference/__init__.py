from .closed_form import CIResult, last_only_ci, leftover_ci, leftover_estimate, zjm_ci
from .polyhedral import (
    TailCurve,
    polyhedral_ci,
    polyhedral_inference,
    polyhedral_test,
    polyhedral_transform,
)

__all__ = [
    "CIResult",
    "TailCurve",
    "last_only_ci",
    "leftover_ci",
    "leftover_estimate",
    "polyhedral_ci",
    "polyhedral_inference",
    "polyhedral_test",
    "polyhedral_transform",
    "zjm_ci",
]
