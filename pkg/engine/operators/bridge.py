"""Maximal commutative subalgebra C*(a) of a positive operator element.

C*(a) is the diagonal algebra in an eigenbasis of (I + a)^-1. Its Gelfand
space is a discrete grid with one character per eigenvector, which hands the
element to the commutative calculus.
"""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg

from common.errors import InvariantViolation, NotQuasiPositive
from common.models.report import CheckResult, check
from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.calculus import apply_function, nth_root, partial_product
from engine.commutative.functions import ScalarFunction
from engine.commutative.quasi_model import QuasiElement, SeminormFamily
from engine.operators.operator_model import SUITE, OperatorElement

logger = logging.getLogger(__name__)

# relative gap below which (I + a)^-1 eigenvalues count as degenerate
DEGENERACY_TOL = 1e-10


def _canonical_basis(vectors: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """
    Replace each degenerate eigenspace basis by the Gram-Schmidt image of the
    standard basis vectors projected into it, taken in index order.
    """
    n = vectors.shape[0]
    out = vectors.copy()
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(eigenvalues[stop] - eigenvalues[start]) <= DEGENERACY_TOL * max(
            1.0, abs(eigenvalues[start])
        ):
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            projector = block @ block.conj().T
            chosen: list[np.ndarray] = []
            for i in range(n):
                candidate = projector[:, i].copy()
                for q in chosen:
                    candidate -= (q.conj() @ candidate) * q
                size = np.linalg.norm(candidate)
                if size > 1e-8:
                    chosen.append(candidate / size)
                if len(chosen) == stop - start:
                    break
            out[:, start:stop] = np.stack(chosen, axis=1)
        start = stop
    return out


@dataclass(frozen=True, eq=False)
class CommutativeBridge:
    """C*(a) with its Gelfand grid and the element a as a grid function."""

    element: OperatorElement
    basis: np.ndarray
    eigenvalues: np.ndarray
    grid: CompactGrid
    quasi: QuasiElement
    family: SeminormFamily

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    def lift(self, f: BoundedFunction | QuasiElement) -> OperatorElement:
        """Grid function on the characters -> operator in C*(a)."""
        values = f.to_bounded().values if isinstance(f, QuasiElement) else f.values
        matrix = (self.basis * values[None, :]) @ self.basis.conj().T
        return OperatorElement(matrix, self.element.domain)

    def coordinates(self, X: OperatorElement) -> np.ndarray:
        return self.basis.conj().T @ X.matrix @ self.basis

    def contains(self, X: OperatorElement, tol: float = 1e-10) -> bool:
        c = self.coordinates(X)
        off = c - np.diag(np.diag(c))
        return bool(np.max(np.abs(off), initial=0.0) <= tol * max(1.0, X.c_star_norm))

    def project(self, X: OperatorElement, tol: float = 1e-10) -> BoundedFunction:
        """
        Operator in C*(a) -> function on the characters.

        Raises:
            InvariantViolation: if X is not diagonal in the eigenbasis
        """
        if not self.contains(X, tol):
            raise InvariantViolation("operator is not in C*(a)")
        return BoundedFunction(self.grid, np.diag(self.coordinates(X)))

    def apply(self, f: ScalarFunction, n: int = 1) -> OperatorElement:
        return self.lift(apply_function(f, self.quasi, n, self.family))

    def root(self, n: int) -> OperatorElement:
        return self.lift(nth_root(self.quasi, n))

    def product(self, b: OperatorElement) -> OperatorElement:
        """a b through the partial product of the two grid functions."""
        values = self.project(b)
        other = QuasiElement(self.grid, values.values)
        return self.lift(partial_product(self.quasi, other, self.family))


def maximal_commutative(a: OperatorElement, tol: float = 1e-12) -> CommutativeBridge:
    """
    Build C*(a) for a hermitian positive semidefinite a.

    Raises:
        NotQuasiPositive: if a is not hermitian psd
    """
    if not a.is_hermitian(tol):
        raise NotQuasiPositive("operator element is not hermitian", {"norm": a.c_star_norm})
    hermitian = 0.5 * (a.matrix + a.matrix.conj().T)
    n = a.domain.dim
    # I + a is singular for eigenvalue -1, so positivity is settled before inverting
    spectrum = scipy.linalg.eigvalsh(hermitian)
    scale = max(1.0, float(np.max(np.abs(spectrum))))
    if spectrum.min() < -tol * scale:
        raise NotQuasiPositive(
            f"operator element has eigenvalue {spectrum.min():.3e}", {"eigenvalue": float(spectrum.min())}
        )
    resolvent = scipy.linalg.inv(np.eye(n) + hermitian)
    mu, vectors = scipy.linalg.eigh(0.5 * (resolvent + resolvent.conj().T))
    # largest resolvent eigenvalue first means smallest eigenvalue of a first
    order = np.argsort(-mu, kind="stable")
    mu, vectors = mu[order], vectors[:, order]
    vectors = _canonical_basis(vectors, mu)
    lam = np.maximum(np.real(np.einsum("ij,ik,kj->j", vectors.conj(), hermitian, vectors)), 0.0)
    grid = CompactGrid.discrete(n)
    logger.debug("built commutative bridge", extra={"dim": n, "max_eigenvalue": float(lam.max())})
    return CommutativeBridge(
        element=a,
        basis=vectors,
        eigenvalues=lam,
        grid=grid,
        quasi=QuasiElement(grid, lam),
        family=SeminormFamily.lebesgue(grid),
    )


def eigen_root(a: OperatorElement, n: int) -> np.ndarray:
    """a^(1/n) straight from an eigendecomposition of the hermitian part."""
    hermitian = 0.5 * (a.matrix + a.matrix.conj().T)
    lam, vectors = scipy.linalg.eigh(hermitian)
    return (vectors * np.maximum(lam, 0.0) ** (1.0 / n)) @ vectors.conj().T


def _relative(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs), initial=0.0)) / max(1.0, float(np.max(np.abs(rhs), initial=0.0)))


def bridge_check(
    elements: dict[str, OperatorElement],
    orders: tuple[int, ...] = (2, 3),
    tol: float = 1e-10,
) -> list[CheckResult]:
    """
    Round trip a -> grid function -> a, roots against the eigendecomposition
    and a.a through the partial product, for every positive element.
    """
    gaps: dict[str, float] = {"bridge_round_trip": 0.0, "bridge_roots": 0.0, "bridge_product": 0.0}
    witnesses: dict[str, dict[str, Any]] = {}

    def record(key: str, name: str, gap: float, **extra: Any) -> None:
        gaps[key] = max(gaps[key], gap)
        if gap > tol and key not in witnesses:
            witnesses[key] = {"element": name, "gap": gap, **extra}

    for name, a in elements.items():
        bridge = maximal_commutative(a)
        record("bridge_round_trip", name, _relative(bridge.lift(bridge.project(a)).matrix, a.matrix))
        for n in orders:
            record("bridge_roots", name, _relative(bridge.root(n).matrix, eigen_root(a, n)), n=n)
        record("bridge_product", name, _relative(bridge.product(a).matrix, a.matrix @ a.matrix))
    return [check(SUITE, key, key not in witnesses, gaps[key], witnesses.get(key)) for key in gaps]
