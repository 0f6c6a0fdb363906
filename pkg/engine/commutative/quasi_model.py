"""Quasi elements of the weighted-L^p completion of A0.

A quasi element carries a finite complex value per grid point plus a mask of
points where it takes the value infinity. The infinity set must not fill any
window of three adjacent points.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np

from common.constants import (
    DEFAULT_CAUCHY_DECAY,
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_HERMITIAN_TOL,
    DEFAULT_INFINITY_MEASURE_CELLS,
    DEFAULT_POSITIVITY_FLOOR,
    DEFAULT_POSITIVITY_TOL,
    DEFAULT_SEMINORM_TOL,
    DEFAULT_VALUE_BOUND,
    DEFAULT_WINDOW,
    AlgebraKind,
)
from common.errors import InvariantViolation, NotQuasiPositive
from engine.commutative.base_algebra import BoundedFunction, CompactGrid, is_positive
from engine.commutative.extended import (
    INFINITY,
    ExtendedValue,
    encode_values,
    window_violation,
)
from engine.commutative.nets import limit_converged

logger = logging.getLogger(__name__)

# Pointwise map applied to the values of an element before integration
Mapping = Callable[[np.ndarray], np.ndarray]

# Largest gap between the near and far local exponents of a singular cell
GROWTH_AGREEMENT = 0.05


@dataclass(frozen=True, eq=False)
class SeminormSpec:
    """p_lambda(a) = (sum weight * quadweight * |a|^p)^(1/p)."""

    p: float
    weight: BoundedFunction

    def __post_init__(self) -> None:
        if self.p < 1.0:
            raise InvariantViolation(f"seminorm exponent must be >= 1, got {self.p}")
        if not self.weight.is_hermitian() or np.any(self.weight.real <= 0):
            raise InvariantViolation("seminorm weight must be strictly positive")


@dataclass(frozen=True, eq=False)
class SeminormFamily:
    """Finite family of weighted L^p seminorms defining the topology tau."""

    grid: CompactGrid
    specs: tuple[SeminormSpec, ...]
    infinity_measure_cells: int = DEFAULT_INFINITY_MEASURE_CELLS

    def __post_init__(self) -> None:
        if not self.specs:
            raise InvariantViolation("seminorm family needs at least one spec")
        for spec in self.specs:
            if spec.weight.grid.size != self.grid.size:
                raise InvariantViolation("seminorm weight lives on another grid")

    @classmethod
    def lebesgue(cls, grid: CompactGrid, p: float = 1.0) -> "SeminormFamily":
        return cls(grid, (SeminormSpec(p, BoundedFunction.constant(grid, 1.0)),))

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def max_exponent(self) -> float:
        return max(spec.p for spec in self.specs)

    def dominating_constant(self, index: int) -> float:
        """C_lambda with p_lambda(x) <= C_lambda * sup_norm(x)."""
        spec = self.specs[index]
        return float(np.sum(spec.weight.real * self.grid.weights) ** (1.0 / spec.p))

    def evaluate(
        self,
        index: int,
        values: np.ndarray,
        infinite: np.ndarray | None = None,
        cells: tuple["SingularCell", ...] = (),
        mapping: Mapping | None = None,
    ) -> float:
        """
        Quadrature of the finite part.

        Infinity points count as a null set while their total quadrature mass
        stays within ``infinity_measure_cells`` grid cells; beyond that the
        seminorm is +inf. Each singular cell replaces the half-cell trapezoid
        term next to its pole by the exact integral of the local power law,
        pushed through ``mapping`` when ``values`` is a function of the
        element that owns the cells.
        """
        spec = self.specs[index]
        w = spec.weight.real * self.grid.weights
        finite = np.ones(self.grid.size, dtype=bool)
        if infinite is not None and infinite.any():
            if self.grid.weights[infinite].sum() > self.infinity_measure_cells * self.grid.spacing:
                return float("inf")
            finite = ~infinite
        with np.errstate(over="ignore"):
            total = float(np.sum(w[finite] * np.abs(values[finite]) ** spec.p))
            for cell in cells:
                exact = cell.integral(spec.p, mapping)
                if not np.isfinite(exact):
                    return float("inf")
                trapezoid = 0.5 * cell.width * float(np.abs(values[cell.neighbour])) ** spec.p
                total += float(spec.weight.real[cell.neighbour]) * (exact - trapezoid)
        return float(max(total, 0.0) ** (1.0 / spec.p))

    def seminorms(
        self,
        values: np.ndarray,
        infinite: np.ndarray | None = None,
        cells: tuple["SingularCell", ...] = (),
        mapping: Mapping | None = None,
    ) -> list[float]:
        return [self.evaluate(i, values, infinite, cells, mapping) for i in range(len(self.specs))]

    def max_seminorm(
        self,
        values: np.ndarray,
        infinite: np.ndarray | None = None,
        cells: tuple["SingularCell", ...] = (),
        mapping: Mapping | None = None,
    ) -> float:
        return max(self.seminorms(values, infinite, cells, mapping))


def _log_nodes() -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on the panels of [0, LOG_DEPTH] in u = -log(s / width)."""
    x, w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    edges = np.concatenate(([0.0, 0.5], 2.0 ** np.arange(0, int(np.log2(LOG_DEPTH)) + 1)))
    nodes = [0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges, edges[1:], strict=False)]
    weights = [0.5 * (b - a) * w for a, b in zip(edges, edges[1:], strict=False)]
    return np.concatenate(nodes), np.concatenate(weights)


# Depth of the log-scaled quadrature; beyond it the identity tail is used
LOG_DEPTH = 512.0
GAUSS_ORDER = 16
_NODES, _WEIGHTS = _log_nodes()


@dataclass(frozen=True)
class SingularCell:
    """
    Local power law c |t - t0|^-alpha on the grid cell between a pole and its neighbour.

    ``mapping`` arguments must behave like the identity for large values.
    """

    pole: int
    neighbour: int
    width: float
    coefficient: float
    alpha: float

    def profile(self, s: np.ndarray) -> np.ndarray:
        return self.coefficient * np.asarray(s, dtype=np.float64) ** -self.alpha

    def scaled(self, factor: float) -> "SingularCell":
        return replace(self, coefficient=self.coefficient * abs(factor))

    def integral(self, p: float, mapping: Mapping | None = None) -> float:
        """Integral of |mapping(profile)|^p over the cell; +inf when alpha * p >= 1."""
        if self.coefficient == 0.0:
            return 0.0
        exponent = 1.0 - self.alpha * p
        if exponent <= 0.0:
            return float("inf")
        if mapping is None:
            return self.coefficient**p * self.width**exponent / exponent
        log_c = float(np.log(self.coefficient))
        log_s = np.log(self.width) - _NODES
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = np.exp(log_c - self.alpha * log_s)
            ratio = np.where(np.isfinite(v), np.abs(mapping(v)) / v, 1.0)
        ratio = np.nan_to_num(ratio, nan=1.0, posinf=1.0)
        body = float(np.sum(_WEIGHTS * ratio**p * np.exp(p * log_c + exponent * log_s)))
        tail = float(np.exp(p * log_c + exponent * (np.log(self.width) - LOG_DEPTH))) / exponent
        return body + tail


def singular_cells(a: "QuasiElement") -> tuple[SingularCell, ...]:
    """
    Power-law cells next to the infinity points of a.

    A side qualifies when its three nearest points are finite with magnitudes
    strictly decreasing away from the pole and the two local exponents agree
    within ``GROWTH_AGREEMENT``.
    """
    grid = a.grid
    if not grid.continuum or a.is_bounded:
        return ()
    magnitude = np.abs(a.values)
    cells: list[SingularCell] = []
    for pole in a.infinity_points:
        for step in (-1, 1):
            idx = [pole + step * k for k in (1, 2, 3)]
            if not all(0 <= j < grid.size for j in idx) or a.infinite[idx].any():
                continue
            m = magnitude[idx]
            if not m[0] > m[1] > m[2] > 0.0:
                continue
            d = np.abs(grid.points[idx] - grid.points[pole])
            near = float(np.log(m[0] / m[1]) / np.log(d[1] / d[0]))
            far = float(np.log(m[1] / m[2]) / np.log(d[2] / d[1]))
            if abs(near - far) > GROWTH_AGREEMENT:
                continue
            cells.append(SingularCell(pole, idx[0], float(d[0]), float(m[0] * d[0] ** near), near))
    return tuple(cells)


@dataclass(frozen=True, eq=False)
class QuasiElement:
    """
    Element of the completion: finite values plus an infinity mask.

    ``cells`` pins the power-law profile next to the infinity points; left
    as None it is estimated from the values, and sums or differences carry
    an empty profile.
    """

    grid: CompactGrid
    values: np.ndarray
    infinite: np.ndarray = field(default=None)  # type: ignore[assignment]
    cells: tuple[SingularCell, ...] | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.size,):
            raise InvariantViolation(f"expected {self.grid.size} values, got {values.shape}")
        mask = (
            np.zeros(self.grid.size, dtype=bool)
            if self.infinite is None
            else np.array(self.infinite, dtype=bool)
        )
        if mask.shape != values.shape:
            raise InvariantViolation("infinity mask does not match values")
        values[mask] = 0.0
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) >= DEFAULT_VALUE_BOUND):
            raise InvariantViolation("finite part must stay below the value bound")
        start = window_violation(mask, DEFAULT_WINDOW)
        if start is not None:
            raise InvariantViolation(
                f"infinity set fills {DEFAULT_WINDOW} adjacent points from index {start}",
                {"window_start": start},
            )
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "infinite", mask)

    @classmethod
    def zeros(cls, grid: CompactGrid) -> "QuasiElement":
        return cls(grid, np.zeros(grid.size, dtype=np.complex128))

    @classmethod
    def from_extended(cls, grid: CompactGrid, values: list[ExtendedValue]) -> "QuasiElement":
        mask = np.array([v.infinite for v in values], dtype=bool)
        return cls(grid, np.array([v.value for v in values], dtype=np.complex128), mask)

    @property
    def finite(self) -> np.ndarray:
        return ~self.infinite

    @property
    def is_bounded(self) -> bool:
        return not bool(self.infinite.any())

    @property
    def infinity_points(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.infinite)]

    @cached_property
    def hermitian(self) -> bool:
        finite = self.values[self.finite]
        if finite.size == 0:
            return True
        scale = max(1.0, float(np.max(np.abs(finite))))
        return bool(np.max(np.abs(finite.imag)) <= DEFAULT_HERMITIAN_TOL * scale)

    @cached_property
    def local_cells(self) -> tuple[SingularCell, ...]:
        if self.cells is not None:
            return tuple(c for c in self.cells if self.infinite[c.pole])
        return singular_cells(self)

    def value_at(self, index: int) -> ExtendedValue:
        if self.infinite[index]:
            return INFINITY
        return ExtendedValue.finite(self.values[index])

    def to_bounded(self) -> BoundedFunction:
        if not self.is_bounded:
            raise InvariantViolation(
                "element has infinity points", {"points": self.infinity_points[:10]}
            )
        return BoundedFunction(self.grid, self.values)

    def __add__(self, other: "QuasiElement | BoundedFunction") -> "QuasiElement":
        if isinstance(other, BoundedFunction):
            other = embed(other)
        return QuasiElement(self.grid, self.values + other.values, self.infinite | other.infinite, ())

    __radd__ = __add__

    def __sub__(self, other: "QuasiElement | BoundedFunction") -> "QuasiElement":
        if isinstance(other, BoundedFunction):
            other = embed(other)
        if other.infinite.any():
            # inf - inf and the sign of -inf are not representable
            raise InvariantViolation("cannot subtract an element with infinity points")
        return QuasiElement(self.grid, self.values - other.values, self.infinite, ())

    def scale(self, factor: complex) -> "QuasiElement":
        """Multiply by a scalar with 0 * inf = 0."""
        if factor == 0:
            return QuasiElement.zeros(self.grid)
        cells = tuple(c.scaled(abs(factor)) for c in self.local_cells)
        return QuasiElement(self.grid, self.values * factor, self.infinite, cells)

    def adjoint(self) -> "QuasiElement":
        return QuasiElement(self.grid, self.values.conj(), self.infinite, self.local_cells)

    def __mul__(self, other: BoundedFunction) -> "QuasiElement":
        return module_mult(other, self, "right")

    def __rmul__(self, other: BoundedFunction) -> "QuasiElement":
        return module_mult(other, self, "left")

    def allclose(self, other: "QuasiElement", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        if not np.array_equal(self.infinite, other.infinite):
            return False
        return bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol))

    def to_json(self) -> dict[str, Any]:
        return {"values": encode_values(self.values, self.infinite)}

    def __repr__(self) -> str:
        return f"QuasiElement(n={self.grid.size}, infinity_points={self.infinity_points[:5]})"


@dataclass(frozen=True, eq=False)
class QuasiModel:
    """Grid, topology and the subalgebra standing in for A0."""

    grid: CompactGrid
    family: SeminormFamily
    algebra_kind: str = AlgebraKind.BOUNDED
    lipschitz_bound: float | None = None
    elements: dict[str, QuasiElement] = field(default_factory=dict)
    name: str = "model"

    def __post_init__(self) -> None:
        if self.algebra_kind == AlgebraKind.LIPSCHITZ and not self.lipschitz_bound:
            raise InvariantViolation("lipschitz model needs a bound")

    def in_subalgebra(self, x: BoundedFunction, slack: float = 1e-12) -> bool:
        if self.algebra_kind == AlgebraKind.BOUNDED:
            return True
        assert self.lipschitz_bound is not None
        steps = np.abs(np.diff(x.values)) / np.diff(self.grid.points)
        return bool(np.max(steps) <= self.lipschitz_bound * (1.0 + slack))

    def in_unit_positive(self, x: BoundedFunction, tol: float = 1e-12) -> bool:
        """Membership in U(A0)+: positive, sup norm <= 1, inside the subalgebra."""
        return (
            is_positive(x)
            and float(np.max(np.abs(x.values))) <= 1.0 + tol
            and self.in_subalgebra(x)
        )

    def element(self, name: str) -> QuasiElement:
        try:
            return self.elements[name]
        except KeyError:
            known = ", ".join(sorted(self.elements)) or "none"
            raise KeyError(f"unknown element '{name}' (known: {known})") from None


def embed(x: BoundedFunction) -> QuasiElement:
    """A0 inside the completion."""
    return QuasiElement(x.grid, x.values)


def module_mult(
    x: BoundedFunction,
    a: QuasiElement,
    side: str = "left",
    family: "SeminormFamily | None" = None,
) -> QuasiElement:
    """
    x*a or a*x; both agree in the commutative model.

    With a family, every seminorm of the product must stay finite.

    Raises:
        InvariantViolation: if the product breaks the window rule or a seminorm diverges
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    # Stored value at infinity points is 0, so x(t) = 0 there yields Finite(0)
    values = x.values * a.values
    infinite = a.infinite & (x.values != 0)
    cells = tuple(c.scaled(float(np.abs(x.values[c.neighbour]))) for c in a.local_cells if infinite[c.pole])
    product = QuasiElement(a.grid, values, infinite, cells)
    if family is not None:
        check_seminorms(product, family)
    return product


def is_quasi_positive(
    a: QuasiElement,
    tol: float = DEFAULT_POSITIVITY_TOL,
    floor: float = DEFAULT_POSITIVITY_FLOOR,
) -> bool:
    """Hermitian with every finite value >= -tolerance; infinity counts as +inf."""
    if not a.hermitian:
        return False
    finite = a.values[a.finite].real
    if finite.size == 0:
        return True
    threshold = max(tol * float(np.max(np.abs(finite))), floor)
    return bool(np.min(finite) >= -threshold)


def require_quasi_positive(a: QuasiElement, what: str = "element") -> np.ndarray:
    """Real parts of a quasi-positive element, clipped at zero."""
    if not is_quasi_positive(a):
        finite = np.where(a.finite, a.values.real, np.inf)
        worst = int(np.argmin(finite))
        raise NotQuasiPositive(
            f"{what} is not quasi-positive (value {a.values[worst]!r} at index {worst})",
            {"index": worst, "value": complex(a.values[worst])},
        )
    return np.maximum(a.values.real, 0.0)


def invert_one_plus(a: QuasiElement) -> BoundedFunction:
    """(1 + a)^-1 with inf -> 0; lies in U(A0)+."""
    re = require_quasi_positive(a)
    out = np.where(a.infinite, 0.0, 1.0 / (1.0 + re))
    return BoundedFunction(a.grid, out)


def regularize(a: QuasiElement, eps: float) -> BoundedFunction:
    """a_eps = a (1 + eps a)^-1 with inf -> 1/eps."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    re = require_quasi_positive(a)
    out = np.where(a.infinite, 1.0 / eps, re / (1.0 + eps * re))
    return BoundedFunction(a.grid, out)


def seminorm(a: QuasiElement | BoundedFunction, family: SeminormFamily, lambda_idx: int = 0) -> float:
    """p_lambda of an element; +inf when the infinity set carries too much mass."""
    if not 0 <= lambda_idx < len(family):
        raise IndexError(f"seminorm index {lambda_idx} outside family of {len(family)}")
    if isinstance(a, BoundedFunction):
        return family.evaluate(lambda_idx, a.values)
    return family.evaluate(lambda_idx, a.values, a.infinite, a.local_cells)


def regularization_gap(a: QuasiElement, eps: float, family: SeminormFamily) -> float:
    """
    max_lambda p_lambda(a - a_eps).

    a - a_eps = eps a^2 (1 + eps a)^-1 is still infinite at the poles of a, so
    its cells are those of a pushed through the same map.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    re = require_quasi_positive(a)

    def gap(v: np.ndarray) -> np.ndarray:
        return v * (eps * v / (1.0 + eps * v))

    values = np.where(a.infinite, 0.0, gap(re))
    return family.max_seminorm(values, a.infinite, a.local_cells, gap)


def check_seminorms(a: QuasiElement, family: SeminormFamily) -> None:
    """Raise unless every seminorm of a is finite."""
    for index in range(len(family)):
        value = seminorm(a, family, index)
        if not value < DEFAULT_VALUE_BOUND:
            raise InvariantViolation(
                f"seminorm {index} diverges", {"lambda": index, "value": value}
            )


def wedge_ops(a: QuasiElement, b: QuasiElement, scalar: float = 1.0) -> QuasiElement:
    """
    scalar * a + b inside the quasi-positive wedge.

    Raises:
        NotQuasiPositive: if a or b is not quasi-positive
        InvariantViolation: if the combined infinity set breaks the window rule
    """
    if scalar < 0:
        raise ValueError(f"wedge scalar must be >= 0, got {scalar}")
    require_quasi_positive(a, "left operand")
    require_quasi_positive(b, "right operand")
    return a.scale(scalar) + b


def is_dominated(a: QuasiElement, b: BoundedFunction, tol: float = DEFAULT_POSITIVITY_TOL) -> bool:
    """a quasi-positive and b - a quasi-positive (a <= b pointwise, a finite)."""
    if not is_quasi_positive(a) or a.infinite.any():
        return False
    gap = b.values.real - a.values.real
    scale = max(float(np.max(np.abs(b.values))), float(np.max(np.abs(a.values))), 1e-300)
    return bool(np.min(gap) >= -tol * scale)


@dataclass
class PositivityWitness:
    """Truncation net min(a, 2^k) approximating a from inside (A0)+."""

    levels: list[float]
    distances: list[float]
    members_positive: bool
    converged: bool

    @property
    def holds(self) -> bool:
        return self.members_positive and self.converged


def positivity_witness(
    a: QuasiElement,
    family: SeminormFamily,
    levels: int = 40,
    tol: float = DEFAULT_SEMINORM_TOL,
) -> PositivityWitness:
    """Build the truncation net of a and test tau-convergence."""
    heights = [2.0**k for k in range(1, levels + 1)]
    distances: list[float] = []
    members_positive = a.hermitian
    re = a.values.real
    for height in heights:
        member = BoundedFunction(a.grid, np.where(a.infinite, height, np.minimum(re, height)))
        members_positive = members_positive and is_positive(member)
        gap = np.where(a.infinite, 0.0, re - member.values.real)

        def excess(v: np.ndarray, height: float = height) -> np.ndarray:
            return np.maximum(v - height, 0.0)

        distances.append(family.max_seminorm(gap, a.infinite, a.local_cells, excess))
    converged = limit_converged(distances, tol, DEFAULT_CAUCHY_DECAY, DEFAULT_CAUCHY_WINDOW)
    return PositivityWitness(heights, distances, bool(members_positive), converged)


def local_growth(a: QuasiElement) -> dict[int, float]:
    """
    Local growth exponent at each infinity point.

    On each side the two nearest finite, nonzero neighbours give
    alpha = log(|v1| / |v2|) / log(d2 / d1) for a ~ |t - t0|^-alpha.
    """
    points = a.grid.points
    magnitude = np.abs(a.values)
    exponents: dict[int, float] = {}
    for index in a.infinity_points:
        best = 0.0
        for step in (-1, 1):
            found: list[int] = []
            j = index + step
            while 0 <= j < a.grid.size and len(found) < 2:
                if not a.infinite[j] and magnitude[j] > 0:
                    found.append(j)
                j += step
            if len(found) < 2:
                continue
            d1 = abs(points[found[0]] - points[index])
            d2 = abs(points[found[1]] - points[index])
            alpha = float(np.log(magnitude[found[0]] / magnitude[found[1]]) / np.log(d2 / d1))
            best = max(best, alpha)
        exponents[index] = best
    return exponents
