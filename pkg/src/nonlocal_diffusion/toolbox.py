"""Scalar functions used for truncation and renormalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _level(K: float) -> None:
    if not K > 0:
        raise DomainError(f"truncation level must be positive, got {K}")


def truncate(r, K: float):
    """``T_K(r) = max(-K, min(K, r))``."""
    _level(K)
    return np.clip(r, -K, K)


def truncate_between(r, K: float, M: float):
    """``T_{K,M} = T_M - T_K`` for ``0 < K < M``."""
    if not 0 < K < M:
        raise DomainError(f"need 0 < K < M, got K={K}, M={M}")
    return truncate(r, M) - truncate(r, K)


def truncation_potential(u, K: float):
    """``Psi_K(u) = int_0^u T_K``."""
    _level(K)
    a = np.abs(u)
    return np.where(a <= K, 0.5 * a * a, K * a - 0.5 * K * K)


def cutoff(u, level: float):
    """``h_l(u) = min((l + 1 - |u|)^+, 1)``."""
    if level < 0:
        raise DomainError(f"cutoff level must be non-negative, got {level}")
    return np.minimum(np.maximum(level + 1.0 - np.abs(u), 0.0), 1.0)


@dataclass(frozen=True)
class SmoothAbs:
    """``H(y) = sqrt(y^2 + eps^2) - eps``, a convex regularization of ``|y|``."""

    eps: float

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.hypot(y, self.eps) - self.eps

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        return y / np.hypot(y, self.eps)

    def second_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return self.eps**2 / np.hypot(y, self.eps) ** 3


@dataclass(frozen=True)
class Ramp:
    """Odd C^1 function ``S`` with ``S' = 1`` on ``[-K, K]``.

    ``S'`` decays linearly to 0 over ``[K, K + delta]`` and vanishes
    beyond, so ``S(0) = 0``, ``0 <= S' <= 1`` and ``S' `` has compact support.
    """

    K: float
    delta: float = 1.0

    def __post_init__(self) -> None:
        _level(self.K)
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")

    @property
    def support(self) -> float:
        return self.K + self.delta

    def _excess(self, v):
        return np.clip(np.abs(v) - self.K, 0.0, self.delta)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        w = self._excess(v)
        core = np.minimum(np.abs(v), self.K)
        return np.sign(v) * (core + w - 0.5 * w * w / self.delta)

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        return np.clip((self.support - np.abs(v)) / self.delta, 0.0, 1.0)

    def antiderivative(self, v):
        """``G(v) = int_0^v S``, even and piecewise cubic."""
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        K, d = self.K, self.delta
        core = np.minimum(a, K)
        w = self._excess(v)
        past = np.maximum(a - self.support, 0.0)
        return (
            0.5 * core * core
            + K * w + 0.5 * w * w - w**3 / (6.0 * d)
            + (K + 0.5 * d) * past
        )
