"""Certification of discrete solutions.

Checks the entropy inequality over a finite family of test tuples, the
discrete weak formulation, the two comparison estimates, and the kernel
identities for Yosida kernels.  Results are gathered in an
:class:`EntropyReport`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import UsageError
from .grids import TimeGrid
from .kernels import Kernel, sonine_residual, split_kernel
from .timestepper import (
    DiscreteSolution,
    ProblemData,
    SchemeWeights,
    l1_space,
    l1_space_time,
    solve,
)
from .toolbox import Ramp, SmoothAbs, truncate, truncation_potential
from .volterra import YosidaFamily, solve_s_lambda

SCHEMA_VERSION = 1

# Twice the largest r(tau) / tau^0.5 over n in {128, 256, 512, 1024}, where r is
# the all-node identity residual for k_lam (RL alpha = 0.5, lam = 0.1),
# H_eps (eps = 0.1) and reference_series(n); reproduced in the test suite.
IDENTITY_TOL_CONSTANT = 6.0

ENTROPY_ATOL = 1e-8
ENTROPY_RTOL = 1e-10
WEAK_RTOL = 1e-10
COMPARISON_ATOL = 1e-10
SIGN_ATOL = 1e-12
SONINE_TOL = 1e-3


def zeta_family(grid: TimeGrid, q: int) -> np.ndarray:
    """Samples of ``(1 - t/T)^q``; vanishes at ``T`` exactly."""
    z = (1.0 - grid.nodes / grid.T) ** q
    z[-1] = 0.0
    return z


def _conv_matrix(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Toeplitz ``L[n-1, j-1] = a[n-j]`` for ``1 <= j <= n``."""
    n = len(a)
    idx = np.arange(n)[:, None] - np.arange(n)[None, :]
    return np.where(idx >= 0, a[np.clip(idx, 0, None)], 0.0)


def _memory(a: np.ndarray, tau: float, v: np.ndarray) -> np.ndarray:
    """Backward difference of the discrete convolution ``C^n = sum a_{n-j} v_j``.

    ``v`` holds rows ``1..n``; returns ``(C^n - C^{n-1}) / tau`` for each row.
    """
    C = np.tensordot(_conv_matrix(a), v, axes=(1, 0))
    prev = np.zeros_like(C)
    prev[1:] = C[:-1]
    return (C - prev) / tau


def _check_zeta(zeta: np.ndarray, n: int) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (n + 1,):
        raise UsageError(f"zeta needs {n + 1} samples, got {zeta.shape}")
    scale = max(float(np.max(np.abs(zeta))), 1.0)
    if abs(zeta[-1]) > 1e-14 * scale:
        raise UsageError("zeta must vanish at the final time")
    if np.any(zeta < 0):
        raise UsageError("zeta must be non-negative")
    return zeta


def _phi_rows(phi, n: int, N: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape == (N,):
        return np.broadcast_to(phi, (n + 1, N))
    if phi.shape != (n + 1, N):
        raise UsageError(f"phi must have shape ({N},) or ({n + 1}, {N}), got {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise UsageError("phi must be bounded")
    return phi


@dataclass(frozen=True)
class EntropyTerms:
    memory_k1: float
    memory_k2: float
    energy: float
    source: float

    @property
    def residual(self) -> float:
        """LHS - RHS; non-positive when the inequality holds."""
        return self.memory_k1 + self.memory_k2 + self.energy - self.source

    @property
    def magnitude(self) -> float:
        return abs(self.memory_k1) + abs(self.memory_k2) + abs(self.energy) + abs(self.source)


def entropy_terms(
    solution: DiscreteSolution,
    problem: ProblemData,
    phi,
    zeta,
    S: Ramp,
    split: tuple[Kernel, Kernel],
) -> EntropyTerms:
    """The four terms of the entropy inequality for one test tuple.

    The ``k1`` term uses the closed-form antiderivative of ``S`` inside a
    discrete convolution with the cell integrals of ``k1``, integrated
    exactly against ``zeta_t`` (the convolution is held constant on each
    cell).  The other terms use right-endpoint sums in time.
    """
    u = solution.u
    n, N = u.shape[0] - 1, u.shape[1]
    tau, h = problem.tau, problem.grid.h
    zeta = _check_zeta(zeta, n)
    phi = _phi_rows(phi, n, N)
    k1, k2 = split
    if not math.isfinite(k2.value_at_zero):
        raise UsageError("the second part of the split must be bounded at 0")
    a1 = k1.cell_integrals(tau, n)
    a2 = k2.cell_integrals(tau, n)
    w = u[1:] - phi[1:]
    Sw = S(w)
    Phi = S.antiderivative(w) - S.antiderivative(u[0] - phi[1:])
    conv1 = np.tensordot(_conv_matrix(a1), Phi, axes=(1, 0))  # rows t_1..t_n
    dzeta = np.diff(zeta)  # zeta_{m+1} - zeta_m, m = 0..n-1
    t1 = -h * float(np.sum(dzeta[1:, None] * conv1[:-1]))
    D2 = _memory(a2, tau, u[1:] - u[0])
    zt = tau * zeta[1:, None]
    t2 = h * float(np.sum(zt * Sw * D2))
    Au = u[1:] @ problem.operator().entries
    t3 = h * float(np.sum(zt * Sw * Au))
    rhs = h * float(np.sum(zt * problem.f[1:] * Sw))
    return EntropyTerms(t1, t2, t3, rhs)


def entropy_residual(solution, problem, phi, zeta, S, split) -> float:
    return entropy_terms(solution, problem, phi, zeta, S, split).residual


def _weak_terms(solution, problem, phi):
    u = solution.u
    n, N = u.shape[0] - 1, u.shape[1]
    tau, h = problem.tau, problem.grid.h
    phi = _phi_rows(phi, n, N)[1:]
    a = problem.pair.k.cell_integrals(tau, n)
    mem = _memory(a, tau, u[1:] - u[0])
    Au = u[1:] @ problem.operator().entries
    per_step = tau * h * np.stack(
        [np.sum(phi * mem, axis=1), np.sum(phi * Au, axis=1), -np.sum(phi * problem.f[1:], axis=1)]
    )
    return per_step


def weak_residual(solution: DiscreteSolution, problem: ProblemData, phi) -> float:
    """``max_n |sum_{m<=n} tau h (phi.D[u-u0] + phi.Au - phi.f)_m|``."""
    per_step = _weak_terms(solution, problem, phi)
    return float(np.max(np.abs(np.cumsum(per_step.sum(axis=0))), initial=0.0))


def weak_scale(solution, problem, phi) -> float:
    """Sum of the absolute term contributions; the natural relative scale."""
    return float(np.sum(np.abs(_weak_terms(solution, problem, phi))))


@dataclass(frozen=True)
class ComparisonSlack:
    """``rhs - lhs`` for the positive-part and the L1 comparison estimates."""

    positive_lhs: float
    positive_rhs: float
    l1_lhs: float
    l1_rhs: float

    @property
    def positive_part(self) -> float:
        return self.positive_rhs - self.positive_lhs

    @property
    def l1(self) -> float:
        return self.l1_rhs - self.l1_lhs


def comparison_check(
    u1: DiscreteSolution, u2: DiscreteSolution, data1: ProblemData, data2: ProblemData
) -> ComparisonSlack:
    if u1.u.shape != u2.u.shape or not (
        np.allclose(u1.t, u2.t, rtol=1e-12, atol=0) and np.allclose(u1.x, u2.x, rtol=1e-12, atol=1e-14)
    ):
        raise UsageError("solutions live on different grids")
    tau, h, T = u1.tau, u1.h, data1.time.T
    l_norm = data1.pair.l.integral(T)
    du = u1.u - u2.u
    du0 = data1.u0 - data2.u0
    df = data1.f - data2.f
    pos = np.maximum
    return ComparisonSlack(
        positive_lhs=l1_space_time(pos(du, 0.0), tau, h),
        positive_rhs=T * l1_space(pos(du0, 0.0), h) + l_norm * l1_space_time(pos(df, 0.0), tau, h),
        l1_lhs=l1_space_time(du, tau, h),
        l1_rhs=T * l1_space(du0, h) + l_norm * l1_space_time(df, tau, h),
    )


def _kernel_samples(k_s, tau: float | None):
    if isinstance(k_s, YosidaFamily):
        return k_s.klambda_values, k_s.grid.tau
    if isinstance(k_s, Kernel):
        raise UsageError("pass kernel samples or a Yosida family, not a raw kernel")
    arr = np.asarray(k_s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise UsageError("kernel samples must be finite (singular kernels are rejected)")
    if tau is None:
        raise UsageError("tau is required with raw kernel samples")
    return arr, float(tau)


def _cells_from_samples(kappa: np.ndarray, tau: float) -> np.ndarray:
    # exact cell integrals of the piecewise-linear interpolant
    return 0.5 * tau * (kappa[:-1] + kappa[1:])


def _bregman(H, dH, a, b):
    return H(a) - H(b) - dH(b) * (a - b)


def identity_sides(H: Callable, dH: Callable, u, k_s, tau: float | None = None):
    """Both sides of the fundamental identity at ``t_1..t_n``.

    Left: ``H'(u_n) D[u]_n`` with ``D`` the discrete derivative of the
    convolution with the piecewise-linear kernel.  Right: ``D[H(u)]_n`` plus
    ``(H'(u_n) u_n - H(u_n)) k(t_n)`` plus the remainder integral, where the
    remainder is a Stieltjes sum against ``-dk`` on the sample grid.
    """
    kappa, tau = _kernel_samples(k_s, tau)
    u = np.asarray(u, dtype=float)
    n = len(u) - 1
    if len(kappa) < n + 1:
        raise UsageError(f"kernel samples cover {len(kappa) - 1} steps, series has {n}")
    kappa = kappa[: n + 1]
    a = _cells_from_samples(kappa, tau)
    Hu, dHu = H(u), dH(u)
    lhs = dHu[1:] * _memory(a, tau, u[1:])
    drop = kappa[:-1] - kappa[1:]  # -dk over lag cell m = 1..n
    rem = np.empty(n)
    for i in range(1, n + 1):
        # u is right-continuous on cells: lag cell m sees u_{i-m+1}
        lagged = u[i:0:-1]
        rem[i - 1] = drop[:i] @ _bregman(H, dH, lagged, u[i])
    rhs = _memory(a, tau, Hu[1:]) + (dHu[1:] * u[1:] - Hu[1:]) * kappa[1:] + rem
    return lhs, rhs


def fundamental_identity_residual(
    H, dH, u, k_s, tau: float | None = None, t_min: float = 0.0
) -> float:
    """``max |LHS - RHS|`` of the fundamental identity over nodes ``t_n >= t_min``.

    Near ``t = 0`` the derivative of a Yosida kernel behaves like
    ``t^(alpha - 1)``, so the pointwise error on the first nodes decays like
    ``tau^alpha``; away from 0 it is first order.  ``t_min > 0`` restricts
    the maximum to a fixed interior window.
    """
    lhs, rhs = identity_sides(H, dH, u, k_s, tau)
    _, step = _kernel_samples(k_s, tau)
    t = step * np.arange(1, len(lhs) + 1)
    keep = t >= t_min - 1e-12 * step
    if not np.any(keep):
        raise UsageError(f"no nodes at or after t_min={t_min}")
    return float(np.max(np.abs(lhs - rhs)[keep]))


def identity_tolerance(tau: float, alpha: float = 0.5, constant: float = IDENTITY_TOL_CONSTANT) -> float:
    """``C tau^{min(1, 1 - alpha)}``."""
    return constant * tau ** min(1.0, 1.0 - alpha)


def convexity_gap(H, dH, u, u0: float, k_s, tau: float | None = None) -> np.ndarray:
    """``H'(u) D[u - u0] - D[H(u) - H(u0)]`` at ``t_1..t_n``; ``>= 0`` for convex ``H``."""
    kappa, tau = _kernel_samples(k_s, tau)
    u = np.asarray(u, dtype=float)
    n = len(u) - 1
    a = _cells_from_samples(kappa[: n + 1], tau)
    return dH(u[1:]) * _memory(a, tau, u[1:] - u0) - _memory(a, tau, H(u[1:]) - H(u0))


@dataclass(frozen=True)
class TruncationCheck:
    identity_residual: float
    min_gap: float
    holds: bool


def truncation_identity_check(u, K: float, family: YosidaFamily, atol: float = SIGN_ATOL) -> TruncationCheck:
    """Identity and inequality for ``H = Psi_K``, ``H' = T_K`` with ``k = k_lam``."""
    H = lambda v: truncation_potential(v, K)
    dH = lambda v: truncate(v, K)
    lhs, rhs = identity_sides(H, dH, u, family)
    u = np.asarray(u, dtype=float)
    kappa, tau = family.klambda_values, family.grid.tau
    a = _cells_from_samples(kappa[: len(u)], tau)
    gap = dH(u[1:]) * _memory(a, tau, u[1:]) - _memory(a, tau, H(u[1:]))
    min_gap = float(np.min(gap))
    return TruncationCheck(float(np.max(np.abs(lhs - rhs))), min_gap, min_gap >= -atol)


def reference_series(n: int, T: float = 1.0, seed: int = 7, knots: int = 9) -> np.ndarray:
    """Random piecewise-linear series on fixed knots, sampled at ``n + 1`` nodes."""
    rng = np.random.default_rng(seed)
    kx = np.linspace(0.0, T, knots)
    ky = rng.uniform(-1.0, 1.0, knots)
    return np.interp(np.linspace(0.0, T, n + 1), kx, ky)


@dataclass
class CheckResult:
    name: str
    suite: str
    residual: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class EntropyReport:
    checks: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def add(self, name, suite, residual, tolerance, **detail) -> CheckResult:
        res = CheckResult(name, suite, float(residual), float(tolerance), bool(residual <= tolerance), detail)
        self.checks.append(res)
        return res

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "passed": self.passed,
            "grid": self.grid,
            "tolerances": self.tolerances,
            "coverage": self.coverage,
            "failures": [c.name for c in self.failures()],
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=False)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


SUITES = ("entropy", "weak", "comparison", "identities")


def bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """Smooth bump supported in ``|x - center| < width`` with peak 1."""
    r = (x - center) / width
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def default_test_fields(solution: DiscreteSolution, problem: ProblemData) -> dict:
    x = problem.grid.nodes
    a, b = problem.grid.a, problem.grid.b
    peak = float(np.max(np.abs(solution.u)))
    return {
        "zero": np.zeros_like(x),
        "bump": 0.5 * peak * bump(x, 0.5 * (a + b), 0.25 * (b - a)),
        "snapshot": truncate(solution.u[-1], 1.0),
    }


def _entropy_suite(report, solution, problem, levels, cuts, scale):
    T = problem.time.T
    fields = default_test_fields(solution, problem)
    zetas = {f"q{q}": zeta_family(problem.time, q) for q in (1, 2)}
    tuples = 0
    for cut in cuts:
        split = split_kernel(problem.pair.k, cut * T, T)
        for K in levels:
            S = Ramp(K, 1.0)
            for pname, phi in fields.items():
                for zname, zeta in zetas.items():
                    terms = entropy_terms(solution, problem, phi, zeta, S, split)
                    tol = scale * (ENTROPY_ATOL + ENTROPY_RTOL * terms.magnitude)
                    report.add(
                        f"entropy[K={K:g},phi={pname},zeta={zname},cut={cut:g}T]",
                        "entropy",
                        terms.residual,
                        tol,
                        **asdict(terms),
                    )
                    tuples += 1
    report.coverage["entropy"] = {
        "tuples": tuples,
        "levels": list(levels),
        "phis": list(fields),
        "zetas": list(zetas),
        "split_cuts": [c * T for c in cuts],
        "ramp_width": 1.0,
    }


def _weak_suite(report, solution, problem, scale):
    rng = np.random.default_rng(0)
    fields = {"ones": np.ones(problem.grid.N), "random": rng.uniform(-1.0, 1.0, problem.grid.N)}
    for name, phi in fields.items():
        res = weak_residual(solution, problem, phi)
        tol = scale * WEAK_RTOL * max(weak_scale(solution, problem, phi), 1e-300)
        report.add(f"weak[phi={name}]", "weak", res, tol)


def _comparison_suite(report, solution, problem, scale):
    other = problem.with_data(0.5 * problem.f, 0.5 * problem.u0)
    sol2 = solve(other)
    for tag, (s1, d1, s2, d2) in {
        "full-vs-half": (solution, problem, sol2, other),
        "half-vs-full": (sol2, other, solution, problem),
    }.items():
        sl = comparison_check(s1, s2, d1, d2)
        tol = scale * COMPARISON_ATOL * max(1.0, sl.positive_rhs, sl.l1_rhs)
        report.add(f"comparison-positive[{tag}]", "comparison", -sl.positive_part, tol, **asdict(sl))
        report.add(f"comparison-l1[{tag}]", "comparison", -sl.l1, tol, **asdict(sl))


def _identity_suite(report, solution, problem, scale, lam=0.1):
    fam = solve_s_lambda(problem.pair, lam, problem.time)
    H = SmoothAbs(0.1)
    u = solution.u
    picks = sorted({int(np.argmax(u[-1])), problem.grid.N // 2})
    for i in picks:
        series = u[:, i]
        gap = convexity_gap(H, H.derivative, series, series[0], fam)
        report.add(f"convexity[node={i}]", "identities", -float(np.min(gap)), scale * SIGN_ATOL)
        tc = truncation_identity_check(series, 1.0, fam)
        report.add(f"truncation[node={i},K=1]", "identities", -tc.min_gap, scale * SIGN_ATOL)
    n = problem.time.n
    res = sonine_residual(problem.pair, problem.time.nodes[1:], cells=max(n, 64))
    report.add("sonine", "identities", res, scale * SONINE_TOL)


def run_verification(
    solution: DiscreteSolution,
    problem: ProblemData,
    suites: Iterable[str] = SUITES,
    *,
    tolerance_scale: float = 1.0,
    levels=(1.0, 5.0),
    split_cuts=(0.125, 0.25, 0.5),
) -> EntropyReport:
    suites = list(suites)
    if not suites:
        raise UsageError("no verification suites selected")
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {list(SUITES)}")
    if solution.u.shape != (problem.time.n + 1, problem.grid.N):
        raise UsageError("solution does not match the problem grids")
    report = EntropyReport(
        grid={
            "N": problem.grid.N,
            "a": problem.grid.a,
            "b": problem.grid.b,
            "n": problem.time.n,
            "T": problem.time.T,
            "s": problem.s,
            "kernel": problem.pair.describe(),
        },
        tolerances={
            "scale": tolerance_scale,
            "entropy_atol": ENTROPY_ATOL,
            "entropy_rtol": ENTROPY_RTOL,
            "weak_rtol": WEAK_RTOL,
            "comparison_atol": COMPARISON_ATOL,
            "sign_atol": SIGN_ATOL,
            "sonine": SONINE_TOL,
        },
    )
    if "entropy" in suites:
        _entropy_suite(report, solution, problem, levels, split_cuts, tolerance_scale)
    if "weak" in suites:
        _weak_suite(report, solution, problem, tolerance_scale)
    if "comparison" in suites:
        _comparison_suite(report, solution, problem, tolerance_scale)
    if "identities" in suites:
        _identity_suite(report, solution, problem, tolerance_scale)
    return report
