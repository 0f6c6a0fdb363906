"""The C*-algebra A0 of bounded functions on a sampled compact interval.

The grid points are the characters of A0: every nonzero multiplicative linear
functional is a point evaluation.
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.constants import (
    DEFAULT_HERMITIAN_TOL,
    DEFAULT_POSITIVITY_FLOOR,
    DEFAULT_POSITIVITY_TOL,
    DEFAULT_VALUE_BOUND,
)
from common.errors import InvariantViolation, NonHermitian
from engine.commutative.functions import ScalarFunction

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CompactGrid:
    """
    Sample points with trapezoid quadrature weights on [start, end].

    ``continuum`` marks grids that discretize an interval; isolated
    characters (the spectrum of a matrix) carry no sub-cell structure.
    """

    points: np.ndarray
    weights: np.ndarray
    start: float
    end: float
    continuum: bool = True

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if points.ndim != 1 or points.size < 2:
            raise InvariantViolation("grid needs at least 2 points")
        if points.shape != weights.shape:
            raise InvariantViolation("one quadrature weight per point required")
        if np.any(np.diff(points) <= 0):
            raise InvariantViolation("grid points must be strictly increasing")
        if np.any(weights <= 0):
            raise InvariantViolation("quadrature weights must be positive")
        measure = self.end - self.start
        if abs(weights.sum() - measure) > 1e-12 * measure:
            raise InvariantViolation(
                f"weights sum to {weights.sum()!r}, interval measure is {measure!r}"
            )
        object.__setattr__(self, "points", _frozen(points.copy()))
        object.__setattr__(self, "weights", _frozen(weights.copy()))

    @classmethod
    def uniform(cls, start: float = 0.0, end: float = 1.0, n: int = 4096) -> "CompactGrid":
        """n equispaced points including both endpoints, trapezoid weights."""
        if n < 2:
            raise InvariantViolation("grid needs at least 2 points")
        points = np.linspace(start, end, n)
        h = (end - start) / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2
        # Rescale away roundoff so the measure invariant holds tightly
        weights *= (end - start) / weights.sum()
        return cls(points, weights, float(start), float(end))

    @classmethod
    def discrete(cls, n: int) -> "CompactGrid":
        """n isolated characters with unit mass each, laid out on (-1/2, n - 1/2)."""
        return cls(np.arange(n, dtype=np.float64), np.ones(n), -0.5, n - 0.5, continuum=False)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.points)))

    @property
    def measure(self) -> float:
        return self.end - self.start

    def neighbours(self, index: int) -> list[int]:
        """Adjacent grid indices (the consecutive-point relation)."""
        return [j for j in (index - 1, index + 1) if 0 <= j < self.size]

    def window(self, index: int, radius: int = 1) -> slice:
        return slice(max(0, index - radius), min(self.size, index + radius + 1))

    def character(self, index: int) -> "Character":
        if not 0 <= index < self.size:
            raise InvariantViolation(f"character index {index} outside grid of {self.size}")
        return Character(index)

    def characters(self) -> list["Character"]:
        return [Character(i) for i in range(self.size)]


@dataclass(frozen=True)
class Character:
    """Point evaluation at a grid index."""

    index: int

    def __call__(self, x: "BoundedFunction") -> complex:
        if not 0 <= self.index < x.grid.size:
            raise InvariantViolation(f"character index {self.index} outside grid")
        return complex(x.values[self.index])


@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """An element of A0: one finite complex value per grid point."""

    grid: CompactGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.size,):
            raise InvariantViolation(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) >= DEFAULT_VALUE_BOUND):
            raise InvariantViolation("bounded function values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def constant(cls, grid: CompactGrid, value: complex = 1.0) -> "BoundedFunction":
        return cls(grid, np.full(grid.size, value, dtype=np.complex128))

    @classmethod
    def coordinate(cls, grid: CompactGrid) -> "BoundedFunction":
        """x(t) = t."""
        return cls(grid, grid.points.astype(np.complex128))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def is_hermitian(self, tol: float = DEFAULT_HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return bool(np.max(np.abs(self.values.imag)) <= tol * scale)

    def adjoint(self) -> "BoundedFunction":
        return BoundedFunction(self.grid, self.values.conj())

    def _other(self, other: "BoundedFunction | complex | float") -> np.ndarray | complex:
        if isinstance(other, BoundedFunction):
            if other.grid.size != self.grid.size:
                raise InvariantViolation("functions live on different grids")
            return other.values
        return complex(other)

    def __add__(self, other: "BoundedFunction | complex | float") -> "BoundedFunction":
        return BoundedFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: "BoundedFunction | complex | float") -> "BoundedFunction":
        return BoundedFunction(self.grid, self.values - self._other(other))

    def __neg__(self) -> "BoundedFunction":
        return BoundedFunction(self.grid, -self.values)

    def __mul__(self, other: "BoundedFunction | complex | float") -> "BoundedFunction":
        return BoundedFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"BoundedFunction(n={self.grid.size}, sup={sup_norm(self):.6g})"


def sup_norm(x: BoundedFunction) -> float:
    """C*-norm of A0: max over the grid of |x(t)|."""
    return float(np.max(np.abs(x.values)))


def _require_hermitian(x: BoundedFunction, tol: float) -> np.ndarray:
    if not x.is_hermitian(tol):
        worst = int(np.argmax(np.abs(x.values.imag)))
        raise NonHermitian(
            f"imaginary part {x.values.imag[worst]:.3e} at index {worst}",
            {"index": worst, "imag": float(x.values.imag[worst])},
        )
    return x.values.real


def decompose_hermitian(
    x: BoundedFunction,
    tol: float = DEFAULT_HERMITIAN_TOL,
) -> tuple[BoundedFunction, BoundedFunction, BoundedFunction]:
    """
    Split a hermitian x into positive parts.

    Returns:
        (x_plus, x_minus, abs_x) with x = x_plus - x_minus, x_plus * x_minus = 0
        and abs_x = x_plus + x_minus.

    Raises:
        NonHermitian: if the imaginary part exceeds tolerance
    """
    re = _require_hermitian(x, tol)
    plus = np.where(re > 0, re, 0.0)
    minus = np.where(re < 0, -re, 0.0)
    grid = x.grid
    return BoundedFunction(grid, plus), BoundedFunction(grid, minus), BoundedFunction(grid, plus + minus)


def continuous_calculus(
    x: BoundedFunction,
    h: ScalarFunction,
    tol: float = DEFAULT_HERMITIAN_TOL,
) -> BoundedFunction:
    """
    Apply h pointwise to a hermitian x.

    Raises:
        NonHermitian: if x is not hermitian
        DomainError: if h is undefined at some value of x
    """
    re = _require_hermitian(x, tol)
    return BoundedFunction(x.grid, h(re))


def is_positive(
    x: BoundedFunction,
    tol: float = DEFAULT_POSITIVITY_TOL,
    floor: float = DEFAULT_POSITIVITY_FLOOR,
) -> bool:
    """Membership in (A0)+ with relative tolerance."""
    if not x.is_hermitian():
        return False
    threshold = max(tol * sup_norm(x), floor)
    return bool(np.min(x.values.real) >= -threshold)
