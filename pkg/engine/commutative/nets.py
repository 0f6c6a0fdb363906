"""Deterministic schedules standing in for nets, and their convergence tests."""

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from common.constants import (
    DEFAULT_CAUCHY_DECAY,
    DEFAULT_CAUCHY_MAX_STEPS,
    DEFAULT_CAUCHY_TOL,
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_SCHEDULE_ALT_BASE,
    DEFAULT_SCHEDULE_BASE,
)


def eps_schedule(base: float = DEFAULT_SCHEDULE_BASE, steps: int = 20, first: int = 1) -> np.ndarray:
    """eps_k = base**-k for k = first .. first + steps - 1."""
    if base <= 1.0:
        raise ValueError(f"schedule base must exceed 1, got {base}")
    return base ** -np.arange(first, first + steps, dtype=np.float64)


def _ratios_decay(history: Sequence[float], decay: float, window: int) -> bool:
    if len(history) < window + 1:
        return False
    tail = history[-(window + 1):]
    for prev, cur in zip(tail, tail[1:], strict=False):
        if cur == 0.0:
            continue
        if prev == 0.0 or cur / prev > decay:
            return False
    return True


def cauchy_converged(
    history: Sequence[float],
    tol: float = DEFAULT_CAUCHY_TOL,
    decay: float = DEFAULT_CAUCHY_DECAY,
    window: int = DEFAULT_CAUCHY_WINDOW,
) -> bool:
    """Successive differences below tol with geometric decay over the last window."""
    return bool(history) and history[-1] < tol and _ratios_decay(history, decay, window)


def limit_converged(
    distances: Sequence[float],
    tol: float = DEFAULT_CAUCHY_TOL,
    decay: float = DEFAULT_CAUCHY_DECAY,
    window: int = DEFAULT_CAUCHY_WINDOW,
) -> bool:
    """
    Distances to a candidate limit tend to zero.

    Either the last distance is already below tol, or the distances decay
    geometrically over the last window (a cofinal tail of the schedule
    reaches every tolerance).
    """
    if not distances:
        return False
    return distances[-1] < tol or _ratios_decay(distances, decay, window)


def richardson(latest: np.ndarray, previous: np.ndarray, base: float) -> np.ndarray:
    """Extrapolate a sequence whose error is linear in eps = base**-k."""
    return (base * latest - previous) / (base - 1.0)


@dataclass(frozen=True)
class CauchySchedule:
    """A schedule eps_k = base**-k together with the Cauchy test applied to its net."""

    base: float = DEFAULT_SCHEDULE_BASE
    alt_base: float = DEFAULT_SCHEDULE_ALT_BASE
    tol: float = DEFAULT_CAUCHY_TOL
    decay: float = DEFAULT_CAUCHY_DECAY
    window: int = DEFAULT_CAUCHY_WINDOW
    max_steps: int = DEFAULT_CAUCHY_MAX_STEPS

    def __post_init__(self) -> None:
        if self.base <= 1.0 or self.alt_base <= 1.0:
            raise ValueError(f"schedule bases must exceed 1, got {self.base} and {self.alt_base}")
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        if self.window < 1 or self.max_steps <= self.window:
            raise ValueError(f"need 1 <= window < max_steps, got {self.window} and {self.max_steps}")

    def epsilons(self) -> np.ndarray:
        return eps_schedule(self.base, self.max_steps)

    def converged(self, history: Sequence[float], scale: float = 1.0) -> bool:
        return cauchy_converged(history, self.tol * scale, self.decay, self.window)

    def alternate(self) -> "CauchySchedule":
        """The same test along the alternative base."""
        return replace(self, base=self.alt_base, alt_base=self.base)
