"""Seeded random elements for the verification suites."""

import numpy as np

from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.quasi_model import QuasiElement

MODES = 4


def _trig(grid: CompactGrid, rng: np.random.Generator) -> np.ndarray:
    """Smooth real function: a short random cosine series rescaled to [-1, 1]."""
    span = grid.points[-1] - grid.points[0]
    t = (grid.points - grid.points[0]) / span
    freqs = rng.integers(0, 6, size=MODES)
    phases = rng.uniform(0.0, 2 * np.pi, size=MODES)
    amps = rng.normal(size=MODES)
    out = np.sum(amps[:, None] * np.cos(2 * np.pi * freqs[:, None] * t + phases[:, None]), axis=0)
    top = float(np.max(np.abs(out)))
    return out / top if top > 0 else out


def random_bounded(grid: CompactGrid, rng: np.random.Generator, hermitian: bool = False) -> BoundedFunction:
    scale = rng.uniform(0.5, 2.0)
    re = scale * _trig(grid, rng)
    if hermitian:
        return BoundedFunction(grid, re)
    return BoundedFunction(grid, re + 1j * scale * _trig(grid, rng))


def random_positive(grid: CompactGrid, rng: np.random.Generator, top: float = 4.0) -> BoundedFunction:
    """Element of (A0)+ with sup norm at most ``top``."""
    base = _trig(grid, rng)
    return BoundedFunction(grid, rng.uniform(0.1, top) * base * base)


def random_unit_positive(grid: CompactGrid, rng: np.random.Generator) -> BoundedFunction:
    return random_positive(grid, rng, top=1.0)


def random_quasi_positive(
    grid: CompactGrid,
    rng: np.random.Generator,
    p_max: float = 1.0,
    singular: bool = True,
) -> QuasiElement:
    """
    Positive smooth part plus, optionally, one singular bump.

    The bump c * |t - t0|^-alpha sits at an interior grid point t0 which becomes
    the only infinity point. alpha stays below 1 / (2 p_max) so that products of
    two samples remain integrable in every seminorm.
    """
    smooth = random_positive(grid, rng).real
    if not singular:
        return QuasiElement(grid, smooth)
    index = int(rng.integers(1, grid.size - 1))
    alpha = rng.uniform(0.05, max(0.06, 1.0 / (2.0 * p_max) - 0.05))
    distance = np.abs(grid.points - grid.points[index])
    mask = np.zeros(grid.size, dtype=bool)
    mask[index] = True
    distance[index] = 1.0
    values = smooth + rng.uniform(0.1, 1.0) * distance ** (-alpha)
    return QuasiElement(grid, values, mask)
