"""Implicit L1-type scheme for ``d/dt (k * (u - u0)) + A u = f``.

With ``a_j`` the cell integrals of ``k`` and ``d_j = a_{j-1} - a_j``, the
discrete memory term at ``t_n`` is

    (1/tau) [a_0 (u^n - u^0) - sum_{j=1}^{n-1} d_{n-j} (u^j - u^0)].

For non-negative, non-increasing ``k`` all ``d_j >= 0``, and the system
matrix ``(a_0/tau) I + A`` is an M-matrix, so the scheme is monotone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DomainError, SchemeError, UsageError
from .fraclap import NonlocalOperator, assemble, energy
from .grids import SpaceGrid1D, TimeGrid
from .kernels import Kernel, KernelPairHandle
from .toolbox import truncate


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Kernel pair, operator order, grids and data.

    ``f`` may be given as ``(N,)`` (constant in time) or ``(n + 1, N)``;
    row 0 is never used by the scheme.  Signed data needs ``signed=True``.
    """

    pair: KernelPairHandle
    s: float
    grid: SpaceGrid1D
    time: TimeGrid
    f: np.ndarray = field(repr=False)
    u0: np.ndarray = field(repr=False)
    signed: bool = False
    normalized: bool = False

    def __post_init__(self) -> None:
        N, n = self.grid.N, self.time.n
        u0 = np.asarray(self.u0, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u0.shape != (N,):
            raise UsageError(f"u0 must have shape ({N},), got {u0.shape}")
        if f.shape == (N,):
            f = np.broadcast_to(f, (n + 1, N)).copy()
        if f.shape != (n + 1, N):
            raise UsageError(f"f must have shape ({N},) or ({n + 1}, {N}), got {f.shape}")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(u0))):
            raise DomainError("data must be finite")
        if not self.signed and (np.any(f < 0) or np.any(u0 < 0)):
            raise DomainError("f and u0 must be non-negative unless signed=True")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "u0", u0)

    @property
    def tau(self) -> float:
        return self.time.tau

    def with_data(self, f, u0, signed: bool | None = None) -> "ProblemData":
        return ProblemData(
            self.pair, self.s, self.grid, self.time, f, u0,
            self.signed if signed is None else signed, self.normalized,
        )

    def operator(self) -> NonlocalOperator:
        return assemble(self.grid, self.s, self.normalized)


@dataclass(frozen=True, eq=False)
class SchemeWeights:
    tau: float
    a: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)

    @classmethod
    def from_kernel(cls, k: Kernel, tau: float, n: int) -> "SchemeWeights":
        a = k.cell_integrals(tau, n)
        d = np.zeros(n)
        d[1:] = a[:-1] - a[1:]
        return cls(float(tau), a, d)


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    """``u[n]`` holds the nodal values at ``t_n``; ``u[0] = u0``."""

    u: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    tau: float
    h: float
    s: float
    kernel: dict
    step_residuals: np.ndarray = field(repr=False)


def memory_apply(weights: SchemeWeights, history, n: int) -> np.ndarray:
    """Discrete ``d/dt (k * (u - u0))`` at ``t_n`` from ``history[0..n]``."""
    if n < 1:
        raise UsageError("memory term is defined for n >= 1")
    history = np.asarray(history, dtype=float)
    if history.shape[0] < n + 1:
        raise UsageError(f"history has {history.shape[0]} entries, step {n} needs {n + 1}")
    if n > len(weights.a):
        raise UsageError(f"weights cover {len(weights.a)} steps, asked for {n}")
    u0 = history[0]
    out = weights.a[0] * (history[n] - u0)
    if n > 1:
        out = out - np.tensordot(weights.d[n - 1 : 0 : -1], history[1:n] - u0, axes=(0, 0))
    return out / weights.tau


def factorize(operator: NonlocalOperator, weights: SchemeWeights):
    """Cholesky factor of ``(a_0 / tau) I + A``."""
    M = operator.entries + (weights.a[0] / weights.tau) * np.eye(operator.N)
    try:
        return cho_factor(M, lower=True, check_finite=True)
    except LinAlgError as exc:
        raise SchemeError("system matrix is not positive definite") from exc


def step(problem: ProblemData, factor, weights: SchemeWeights, history, n: int) -> np.ndarray:
    """Solve for ``u^n`` given ``history[0..n-1]``."""
    history = np.asarray(history, dtype=float)
    if history.shape[0] < n:
        raise UsageError(f"step {n} needs {n} history entries, got {history.shape[0]}")
    tau, u0 = weights.tau, history[0]
    rhs = problem.f[n] + (weights.a[0] / tau) * u0
    if n > 1:
        rhs = rhs + np.tensordot(weights.d[n - 1 : 0 : -1], history[1:n] - u0, axes=(0, 0)) / tau
    return cho_solve(factor, rhs)


def solve(problem: ProblemData, operator: NonlocalOperator | None = None) -> DiscreteSolution:
    op = problem.operator() if operator is None else operator
    n, tau = problem.time.n, problem.tau
    weights = SchemeWeights.from_kernel(problem.pair.k, tau, n)
    if np.any(weights.d < 0):
        raise SchemeError("history weights must be non-negative")
    factor = factorize(op, weights)
    u = np.empty((n + 1, problem.grid.N))
    u[0] = problem.u0
    res = np.zeros(n + 1)
    for m in range(1, n + 1):
        u[m] = step(problem, factor, weights, u, m)
        r = memory_apply(weights, u, m) + op.entries @ u[m] - problem.f[m]
        res[m] = np.max(np.abs(r))
    return DiscreteSolution(
        u=u,
        x=problem.grid.nodes,
        t=problem.time.nodes,
        tau=tau,
        h=problem.grid.h,
        s=problem.s,
        kernel=problem.pair.describe(),
        step_residuals=res,
    )


def l1_space_time(u: np.ndarray, tau: float, h: float) -> float:
    """Right-endpoint rule in time, nodal rule in space; row 0 is skipped."""
    return float(tau * h * np.sum(np.abs(u[1:])))


def l1_space(v: np.ndarray, h: float) -> float:
    return float(h * np.sum(np.abs(v)))


@dataclass(frozen=True, eq=False)
class ApproximationSequence:
    """Solutions for truncated data ``(T_m f, T_m u0)``, one per level."""

    levels: tuple
    solutions: list = field(repr=False)
    violations: int
    max_violation: float
    min_value: float
    l1_norms: tuple
    l1_bound: float

    @property
    def monotone(self) -> bool:
        return self.violations == 0


def approx_driver(problem: ProblemData, levels) -> ApproximationSequence:
    """Solve with truncated data at each level and compare consecutive levels."""
    levels = tuple(float(m) for m in levels)
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] <= 0:
        raise UsageError("levels must be positive and strictly increasing")
    op = problem.operator()
    sols = []
    for m in levels:
        sub = problem.with_data(truncate(problem.f, m), truncate(problem.u0, m))
        sols.append(solve(sub, op))
    violations, worst = 0, 0.0
    for lo, hi in zip(sols, sols[1:]):
        gap = lo.u - hi.u
        violations += int(np.count_nonzero(gap > 0))
        worst = max(worst, float(np.max(gap, initial=0.0)))
    tau, h = problem.tau, problem.grid.h
    bound = problem.time.T * l1_space(problem.u0, h) + problem.pair.l.integral(
        problem.time.T
    ) * l1_space_time(problem.f, tau, h)
    return ApproximationSequence(
        levels=levels,
        solutions=sols,
        violations=violations,
        max_violation=worst,
        min_value=float(min(np.min(sol.u) for sol in sols)),
        l1_norms=tuple(l1_space_time(sol.u, tau, h) for sol in sols),
        l1_bound=float(bound),
    )


def energy_bound(solution: DiscreteSolution, problem: ProblemData, K: float) -> tuple[float, float]:
    """Both sides of the truncated energy estimate at level ``K``.

    Left: ``sum_n tau h E(T_K u^n)``.  Right: ``K |f| + K |k|_{L1(0,T)} |u0|``
    with the discrete norms of :func:`l1_space_time` and :func:`l1_space`.
    """
    op = problem.operator()
    tau, h = problem.tau, problem.grid.h
    lhs = tau * h * sum(energy(op, truncate(v, K)) for v in solution.u[1:])
    rhs = K * l1_space_time(problem.f, tau, h) + K * problem.pair.k.integral(
        problem.time.T
    ) * l1_space(problem.u0, h)
    return float(lhs), float(rhs)
