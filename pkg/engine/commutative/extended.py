"""Extended complex values C* = C u {inf} and grid-level helpers."""

import cmath
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from common.constants import DEFAULT_VALUE_BOUND, DEFAULT_WINDOW
from common.errors import InvariantViolation, SchemaError


@dataclass(frozen=True)
class ExtendedValue:
    """Either a finite complex number or the single point at infinity."""

    value: complex = 0j
    infinite: bool = False

    def __post_init__(self) -> None:
        if self.infinite:
            object.__setattr__(self, "value", 0j)
            return
        z = complex(self.value)
        if cmath.isnan(z) or not abs(z) < DEFAULT_VALUE_BOUND:
            raise InvariantViolation(f"finite payload out of range: {z}")
        object.__setattr__(self, "value", z)

    @classmethod
    def finite(cls, value: complex) -> "ExtendedValue":
        return cls(complex(value), False)

    @classmethod
    def infinity(cls) -> "ExtendedValue":
        return cls(0j, True)

    @property
    def is_finite(self) -> bool:
        return not self.infinite

    def __add__(self, other: "ExtendedValue") -> "ExtendedValue":
        if self.infinite or other.infinite:
            return INFINITY
        return ExtendedValue.finite(self.value + other.value)

    def __mul__(self, other: "ExtendedValue") -> "ExtendedValue":
        # 0 * inf = 0
        if self.infinite and other.infinite:
            return INFINITY
        if self.infinite:
            return ZERO if other.value == 0 else INFINITY
        if other.infinite:
            return ZERO if self.value == 0 else INFINITY
        return ExtendedValue.finite(self.value * other.value)

    def scale(self, factor: complex) -> "ExtendedValue":
        return self * ExtendedValue.finite(factor)

    def conjugate(self) -> "ExtendedValue":
        return self if self.infinite else ExtendedValue.finite(self.value.conjugate())

    def is_indeterminate_product(self, other: "ExtendedValue") -> bool:
        """True for inf*0 in either order."""
        return (self.infinite and other.is_finite and other.value == 0) or (
            other.infinite and self.is_finite and self.value == 0
        )

    def close_to(self, other: "ExtendedValue", tol: float) -> bool:
        if self.infinite or other.infinite:
            return self.infinite == other.infinite
        scale = max(1.0, abs(self.value), abs(other.value))
        return abs(self.value - other.value) <= tol * scale

    def to_json(self) -> Any:
        if self.infinite:
            return {"inf": True}
        if self.value.imag == 0.0:
            return self.value.real
        return [self.value.real, self.value.imag]

    @classmethod
    def from_json(cls, raw: Any) -> "ExtendedValue":
        if isinstance(raw, dict):
            if raw.get("inf") is True:
                return INFINITY
            raise SchemaError(f"unknown extended value {raw!r}")
        if isinstance(raw, list | tuple):
            if len(raw) != 2:
                raise SchemaError(f"complex value must be [re, im], got {raw!r}")
            return cls.finite(complex(float(raw[0]), float(raw[1])))
        if isinstance(raw, int | float) and not isinstance(raw, bool):
            if math.isinf(raw):
                return INFINITY
            return cls.finite(complex(float(raw)))
        # Pydantic-parsed InfinityValue
        if getattr(raw, "inf", None) is True:
            return INFINITY
        raise SchemaError(f"unreadable extended value {raw!r}")

    def __repr__(self) -> str:
        return "Infinity" if self.infinite else f"Finite({self.value!r})"


INFINITY = ExtendedValue(0j, True)
ZERO = ExtendedValue(0j, False)


def window_violation(mask: np.ndarray, window: int = DEFAULT_WINDOW) -> int | None:
    """Start index of the first run of ``window`` consecutive True entries, else None."""
    flags = np.asarray(mask, dtype=bool)
    if flags.size < window:
        return None
    run = np.convolve(flags.astype(np.int64), np.ones(window, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(run >= window)
    return int(hits[0]) if hits.size else None


def decode_values(raw: list[Any]) -> tuple[np.ndarray, np.ndarray]:
    """Decode a JSON value list into (complex values, infinity mask)."""
    decoded = [ExtendedValue.from_json(item) for item in raw]
    values = np.array([0j if v.infinite else v.value for v in decoded], dtype=np.complex128)
    mask = np.array([v.infinite for v in decoded], dtype=bool)
    return values, mask


def encode_values(values: np.ndarray, mask: np.ndarray | None = None) -> list[Any]:
    """Encode complex values plus an optional infinity mask as JSON."""
    out: list[Any] = []
    inf = np.zeros(len(values), dtype=bool) if mask is None else mask
    for z, is_inf in zip(values, inf, strict=True):
        if is_inf:
            out.append({"inf": True})
        elif z.imag == 0.0:
            out.append(float(z.real))
        else:
            out.append([float(z.real), float(z.imag)])
    return out
