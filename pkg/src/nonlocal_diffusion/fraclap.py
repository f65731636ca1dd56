"""Dense 1D discretization of the fractional Laplacian with zero exterior data.

Row ``i`` approximates the principal value integral

    P.V. int (u(x_i) - u(y)) |x_i - y|^{-1-2s} dy

for the piecewise-linear interpolant of the nodal values, extended by zero.
The kernel is integrated exactly against each hat function; the singular
cell uses the second-difference regularization.  No normalizing constant is
applied unless ``normalized=True``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gamma

from .errors import DomainError, UsageError
from .grids import SpaceGrid1D

__all__ = [
    "SpaceGrid1D",
    "NonlocalOperator",
    "assemble",
    "apply",
    "energy",
    "fractional_constant",
    "getoor_constant",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
# hat weights beyond this offset come from Gauss-Legendre instead of differences
_QUAD_FROM = 8


def _check_order(s: float) -> None:
    if not 0 < s < 1:
        raise DomainError(f"fractional order must lie in (0, 1), got {s}")


def _second_antiderivative(y, s):
    # G'' = y^{-1-2s}; the additive constant drops out of second differences
    c = 1.0 - 2.0 * s
    ly = np.log(y)
    if abs(c) < 1e-12:
        return -ly
    return -np.expm1(c * ly) / (2.0 * s * c)


def _hat_weights(N: int, s: float) -> np.ndarray:
    """``w[k] = int hat_k(y) y^{-1-2s} dy`` on the unit-spaced grid, ``k >= 1``.

    ``w[1]`` only counts the part of the hat on ``y >= 1``; the inner part is
    absorbed into the second-difference term.
    """
    w = np.zeros(max(N, 2))
    if N < 2:
        return w
    G = lambda y: _second_antiderivative(np.asarray(y, float), s)
    k = np.arange(2, min(N, _QUAD_FROM))
    if k.size:
        w[k] = G(k + 1.0) - 2.0 * G(k) + G(k - 1.0)
    k = np.arange(max(2, _QUAD_FROM), N)
    if k.size:
        # hat_k on [k-1, k+1]: map each half to [-1, 1]
        x01 = 0.5 * (_GL_X + 1.0)
        rise = (k[:, None] - 1.0 + x01[None, :]) ** (-1.0 - 2.0 * s) @ (_GL_W * x01)
        fall = (k[:, None] + x01[None, :]) ** (-1.0 - 2.0 * s) @ (_GL_W * (1.0 - x01))
        w[k] = 0.5 * (rise + fall)
    # half hat on [1, 2] plus the y^2 term of the singular cell spilling past 1
    dG1 = -1.0 / (2.0 * s)
    w[1] = G(2.0) - G(1.0) - dG1 + 1.0 / (2.0 - 2.0 * s)
    return w


@dataclass(frozen=True, eq=False)
class NonlocalOperator:
    s: float
    grid: SpaceGrid1D
    entries: np.ndarray = field(repr=False)
    normalized: bool = False

    @property
    def N(self) -> int:
        return self.grid.N


def fractional_constant(s: float) -> float:
    """``C_{1,s} = s 4^s Gamma(1/2 + s) / (sqrt(pi) Gamma(1 - s))``."""
    _check_order(s)
    return s * 4.0**s * gamma(0.5 + s) / (math.sqrt(math.pi) * gamma(1.0 - s))


def getoor_constant(s: float, normalized: bool = True) -> float:
    """Value of the operator on ``(1 - x^2)_+^s`` over ``(-1, 1)``."""
    _check_order(s)
    c = 4.0**s * gamma(1.0 + s) * gamma(0.5 + s) / math.sqrt(math.pi)
    return c if normalized else c / fractional_constant(s)


def assemble(grid: SpaceGrid1D, s: float, normalized: bool = False) -> NonlocalOperator:
    """Symmetric Toeplitz M-matrix for the operator on ``grid``."""
    _check_order(s)
    N, h = grid.N, grid.h
    col = -_hat_weights(N, s)[:N]
    col[0] = 1.0 / (1.0 - s) + 1.0 / s
    A = toeplitz(col) * h ** (-2.0 * s)
    if normalized:
        A *= fractional_constant(s)
    return NonlocalOperator(float(s), grid, A, normalized)


def _check_size(op: NonlocalOperator, u: np.ndarray) -> None:
    if u.shape[0] != op.N:
        raise UsageError(f"expected {op.N} nodal values, got {u.shape[0]}")


def apply(op: NonlocalOperator, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    _check_size(op, u)
    return op.entries @ u


def energy(op: NonlocalOperator, u) -> float:
    """Quadratic form ``u^T A u``; multiply by ``h`` for the integral energy."""
    u = np.asarray(u, dtype=float)
    _check_size(op, u)
    return float(u @ (op.entries @ u))
