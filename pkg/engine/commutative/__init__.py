"""Commutative model: C[0,1] completed under integral seminorms."""

from engine.commutative.base_algebra import BoundedFunction, CompactGrid, sup_norm
from engine.commutative.extended import INFINITY, ZERO, ExtendedValue
from engine.commutative.quasi_model import QuasiElement, QuasiModel, SeminormFamily, embed

__all__ = [
    "INFINITY",
    "ZERO",
    "BoundedFunction",
    "CompactGrid",
    "ExtendedValue",
    "QuasiElement",
    "QuasiModel",
    "SeminormFamily",
    "embed",
    "sup_norm",
]
