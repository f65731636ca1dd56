"""Uniform time and space grids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * T / n`` for ``i = 0..n``."""

    T: float
    n: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"step count n must be a positive integer, got {self.n}")

    @property
    def tau(self) -> float:
        return self.T / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.tau * np.arange(self.n + 1, dtype=float)


@dataclass(frozen=True)
class SpaceGrid1D:
    """Interior nodes ``x_i = a + i h``, ``i = 1..N``, of the interval (a, b).

    The solution is taken to vanish at ``a``, ``b`` and everywhere outside.
    """

    a: float
    b: float
    N: int

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise DomainError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"need N >= 1 interior nodes, got {self.N}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(1, self.N + 1, dtype=float)
