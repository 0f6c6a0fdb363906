"""Scalar function catalog with declared growth at infinity.

Every entry knows its growth exponent ``g`` and leading coefficient ``c`` with
``f(lam) ~ c * lam**g`` as ``lam -> inf``. The calculus decides C_k membership
from ``g`` and the value at the point at infinity from ``(g, c)``.
"""

import json
from abc import ABC, abstractmethod
from collections.abc import Callable
from fractions import Fraction
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from common.errors import DomainError, SchemaError
from common.models.schema import TableFile
from engine.commutative.extended import INFINITY, ExtendedValue

NEG_INF = float("-inf")


class ScalarFunction(ABC):
    """A continuous function on (part of) the real line."""

    name: str = "f"

    @property
    @abstractmethod
    def growth(self) -> float:
        """Exponent g with f(lam) = O(lam**g) as lam -> inf; -inf for faster decay."""

    @property
    @abstractmethod
    def leading(self) -> complex:
        """Coefficient c with f(lam) ~ c * lam**g."""

    @abstractmethod
    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        ...

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        return np.isfinite(lam)

    def __call__(self, lam: np.ndarray | float) -> np.ndarray:
        arr = np.asarray(lam, dtype=np.float64)
        mask = self.defined_mask(arr)
        if not np.all(mask):
            bad = arr[~mask].ravel()[0]
            raise DomainError(f"{self.name} undefined at {bad!r}", {"value": float(bad)})
        return np.asarray(self._evaluate(arr), dtype=np.complex128)

    @property
    def is_bounded(self) -> bool:
        return self.growth <= 0

    def limit_at_infinity(self) -> ExtendedValue:
        """Continuous extension of f to lam = inf."""
        g, c = self.growth, self.leading
        if g > 0:
            return INFINITY if c != 0 else ExtendedValue.finite(0)
        if g < 0:
            return ExtendedValue.finite(0)
        return ExtendedValue.finite(c)

    def __mul__(self, other: "ScalarFunction") -> "ScalarFunction":
        return ProductFunction(self, other)

    def __add__(self, other: "ScalarFunction") -> "ScalarFunction":
        return SumFunction(self, other)

    def scaled(self, factor: complex) -> "ScalarFunction":
        return ScaledFunction(complex(factor), self)

    def __repr__(self) -> str:
        return self.name


class PowerFunction(ScalarFunction):
    """lam**q for rational q."""

    def __init__(self, q: float | Fraction) -> None:
        self.q = Fraction(q).limit_denominator(10**6)
        self.name = f"pow:{self.q}"

    @property
    def growth(self) -> float:
        return float(self.q)

    @property
    def leading(self) -> complex:
        return 1.0

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        ok = np.isfinite(lam)
        if self.q.denominator == 1 and self.q >= 0:
            return ok
        if self.q > 0:
            return ok & (lam >= 0)
        return ok & (lam > 0)

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        if self.q.denominator == 1 and self.q >= 0:
            return lam ** int(self.q)
        return np.power(lam, float(self.q))


class ResolventPower(ScalarFunction):
    """(1 + lam)**(-m)."""

    def __init__(self, m: float) -> None:
        if m < 0:
            raise DomainError(f"respow exponent must be >= 0, got {m}")
        self.m = float(m)
        self.name = f"respow:{m:g}"

    @property
    def growth(self) -> float:
        return -self.m

    @property
    def leading(self) -> complex:
        return 1.0

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        return np.isfinite(lam) & (lam > -1.0)

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return np.power(1.0 + lam, -self.m)


class ExponentialDecay(ScalarFunction):
    """exp(-c * lam), c > 0."""

    def __init__(self, rate: float = 1.0) -> None:
        if rate <= 0:
            raise DomainError(f"exp rate must be > 0, got {rate}")
        self.rate = float(rate)
        self.name = f"exp:{rate:g}"

    @property
    def growth(self) -> float:
        return NEG_INF

    @property
    def leading(self) -> complex:
        return 1.0

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * lam)


class Polynomial(ScalarFunction):
    """c0 + c1*lam + ... + cd*lam**d."""

    def __init__(self, coefficients: list[complex]) -> None:
        coeffs = [complex(c) for c in coefficients] or [0j]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = np.array(coeffs, dtype=np.complex128)
        self.name = "poly:" + json.dumps([_plain(c) for c in coeffs])

    @property
    def growth(self) -> float:
        if len(self.coefficients) == 1 and self.coefficients[0] == 0:
            return NEG_INF
        return float(len(self.coefficients) - 1)

    @property
    def leading(self) -> complex:
        return complex(self.coefficients[-1])

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(lam, self.coefficients)


class SampledTable(ScalarFunction):
    """Linear interpolation of a table, constant beyond its ends."""

    def __init__(self, xs: list[float], ys: list[float], label: str = "table") -> None:
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        self.name = f"table:{label}"

    @property
    def growth(self) -> float:
        return 0.0

    @property
    def leading(self) -> complex:
        return complex(self.ys[-1])

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return np.interp(lam, self.xs, self.ys)


class ProductFunction(ScalarFunction):
    def __init__(self, left: ScalarFunction, right: ScalarFunction) -> None:
        self.left = left
        self.right = right
        self.name = f"({left.name})*({right.name})"

    @property
    def growth(self) -> float:
        return self.left.growth + self.right.growth

    @property
    def leading(self) -> complex:
        return self.left.leading * self.right.leading

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        return self.left.defined_mask(lam) & self.right.defined_mask(lam)

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return self.left._evaluate(lam) * self.right._evaluate(lam)


class SumFunction(ScalarFunction):
    def __init__(self, left: ScalarFunction, right: ScalarFunction) -> None:
        self.left = left
        self.right = right
        self.name = f"({left.name})+({right.name})"

    @property
    def growth(self) -> float:
        return max(self.left.growth, self.right.growth)

    @property
    def leading(self) -> complex:
        g = self.growth
        return sum(
            (part.leading for part in (self.left, self.right) if part.growth == g),
            start=0j,
        )

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        return self.left.defined_mask(lam) & self.right.defined_mask(lam)

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return self.left._evaluate(lam) + self.right._evaluate(lam)


class ScaledFunction(ScalarFunction):
    def __init__(self, factor: complex, inner: ScalarFunction) -> None:
        self.factor = factor
        self.inner = inner
        self.name = f"{_plain(factor)}*({inner.name})"

    @property
    def growth(self) -> float:
        return NEG_INF if self.factor == 0 else self.inner.growth

    @property
    def leading(self) -> complex:
        return self.factor * self.inner.leading

    def defined_mask(self, lam: np.ndarray) -> np.ndarray:
        return self.inner.defined_mask(lam)

    def _evaluate(self, lam: np.ndarray) -> np.ndarray:
        return self.factor * self.inner._evaluate(lam)


def identity() -> ScalarFunction:
    """u1(lam) = lam."""
    return PowerFunction(1)


def constant(value: complex = 1.0) -> ScalarFunction:
    """u0(lam) = value."""
    return Polynomial([value])


def _plain(z: complex) -> float | list[float]:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _load_table(path: str) -> SampledTable:
    table = TableFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    return SampledTable(table.x, table.y, label=path)


def parse_function(
    text: str,
    table_loader: Callable[[str], SampledTable] = _load_table,
) -> ScalarFunction:
    """
    Parse a catalog name.

    Accepts ``pow:q`` (q may be a fraction such as ``1/2``), ``respow:m``,
    ``exp:c``, ``poly:[c0,c1,...]`` and ``table:<file>``.

    Raises:
        SchemaError: on an unknown or malformed name
    """
    kind, sep, arg = text.partition(":")
    if not sep:
        raise SchemaError(f"function '{text}' must look like kind:argument")
    try:
        if kind == "pow":
            return PowerFunction(Fraction(arg))
        if kind == "respow":
            return ResolventPower(float(Fraction(arg)))
        if kind == "exp":
            return ExponentialDecay(float(arg) if arg else 1.0)
        if kind == "poly":
            coeffs = json.loads(arg)
            if not isinstance(coeffs, list) or not coeffs:
                raise ValueError("poly needs a non-empty list")
            return Polynomial(
                [complex(*c) if isinstance(c, list) else complex(c) for c in coeffs]
            )
        if kind == "table":
            return table_loader(arg)
    except (ValueError, ZeroDivisionError, TypeError, DomainError, ValidationError) as e:
        raise SchemaError(f"bad function '{text}': {e}") from e
    raise SchemaError(f"unknown function kind '{kind}'")
