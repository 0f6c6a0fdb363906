"""Operator model on a truncated weighted domain."""

from engine.operators.bridge import CommutativeBridge, maximal_commutative
from engine.operators.operator_model import (
    BoundedSetFamily,
    BoxSet,
    Commutant,
    OperatorElement,
    OperatorModel,
    TruncatedDomain,
    VectorSet,
    admissible_check,
    cs_algebra,
    physical_seminorm,
    prop43_check,
    topology_order_check,
)

__all__ = [
    "BoundedSetFamily",
    "BoxSet",
    "Commutant",
    "CommutativeBridge",
    "OperatorElement",
    "OperatorModel",
    "TruncatedDomain",
    "VectorSet",
    "admissible_check",
    "cs_algebra",
    "maximal_commutative",
    "physical_seminorm",
    "prop43_check",
    "topology_order_check",
]
