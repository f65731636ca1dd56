"""Yosida resolvent kernels from scalar Volterra equations.

For a pair ``(k, l)`` and ``lam > 0`` the function ``s`` solves

    s(t) + (l * s)(t) / lam = 1,

and ``k_lam = s / lam`` is a bounded, non-increasing approximation of ``k``.
The derivative ``r = -s'`` is singular at 0, so it is only ever represented
through its cell integrals ``s(t_i) - s(t_{i+1})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import rgamma

from .errors import DomainError, UsageError
from .grids import TimeGrid
from .kernels import Kernel, KernelPairHandle, product_weights


@dataclass(frozen=True, eq=False)
class YosidaFamily:
    """Samples of ``s_lam`` on a uniform grid.

    ``mesh`` and ``mesh_values`` hold the internal graded mesh the equation
    was marched on; the uniform samples are a subset of it.
    """

    lam: float
    grid: TimeGrid
    s_values: np.ndarray = field(repr=False)
    mesh: np.ndarray = field(repr=False)
    mesh_values: np.ndarray = field(repr=False)
    pair: KernelPairHandle = field(repr=False)

    @property
    def klambda_values(self) -> np.ndarray:
        return self.s_values / self.lam

    @property
    def r_increments(self) -> np.ndarray:
        """``int_{t_i}^{t_{i+1}} r_lam = s(t_i) - s(t_{i+1})``."""
        return self.s_values[:-1] - self.s_values[1:]


def _composite_mesh(l: Kernel, lam: float, grid: TimeGrid, grading: float, floor: float):
    """Geometric refinement towards 0 plus subdivision of the early uniform cells.

    Returns the mesh and the positions of the uniform nodes inside it.
    """
    tau, n = grid.tau, grid.n
    t_min = tau
    while l.integral(t_min) / lam > floor and t_min > 1e-300:
        t_min *= 0.5
    pieces = [np.zeros(1)]
    if t_min < tau:
        m = math.ceil(math.log(tau / t_min) / math.log1p(grading))
        pieces.append(tau * np.exp(-math.log(tau / t_min) * np.arange(m, 0, -1) / m))
    index = np.empty(n + 1, dtype=int)
    index[0] = 0
    count = sum(len(p) for p in pieces)
    for i in range(1, n + 1):
        index[i] = count
        sub = math.ceil(1.0 / (grading * i)) if i < n else 1
        pieces.append(tau * (i + np.arange(sub) / sub))
        count += sub
    return np.concatenate(pieces), index


def _march(l: Kernel, lam: float, mesh: np.ndarray) -> np.ndarray:
    # product trapezoid: s is linear on each mesh cell, l integrated exactly
    h = np.diff(mesh)
    s = np.empty_like(mesh)
    s[0] = 1.0
    for i in range(1, len(mesh)):
        ti = mesh[i]
        wp, wq = product_weights(l, ti - mesh[1 : i + 1], ti - mesh[:i], h[:i])
        acc = wq @ s[:i] + wp[:-1] @ s[1:i]
        s[i] = (1.0 - acc / lam) / (1.0 + wp[-1] / lam)
    return s


def solve_s_lambda(
    pair: KernelPairHandle,
    lam: float,
    grid: TimeGrid,
    *,
    grading: float = 0.05,
    floor: float = 1e-12,
) -> YosidaFamily:
    """March ``s + (l * s) / lam = 1`` and sample on ``grid``.

    Parameters
    ----------
    grading
        Relative cell growth of the internal mesh.  The mesh is geometric
        down to the time where ``(1 * l) / lam`` drops below ``floor`` and
        the first uniform cells are subdivided to width ``<= grading * t``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not 0 < grading < 1:
        raise DomainError(f"grading must lie in (0, 1), got {grading}")
    mesh, index = _composite_mesh(pair.l, lam, grid, grading, floor)
    values = _march(pair.l, lam, mesh)
    return YosidaFamily(float(lam), grid, values[index].copy(), mesh, values, pair)


def yosida_kernel(family: YosidaFamily) -> np.ndarray:
    """``k_lam(t_i) = s_lam(t_i) / lam``."""
    return family.klambda_values


# accuracy target of the marching scheme (sup norm on s_lam)
SOLVER_TOL = 1e-4


def l1_distance(family: YosidaFamily) -> float:
    """``int_0^T |k_lam - k|`` on the internal mesh.

    ``k`` is integrated exactly per cell and ``k_lam`` by the trapezoid rule.
    """
    mesh, s = family.mesh, family.mesh_values
    ik = np.diff(family.pair.k.integral(mesh))
    ikl = 0.5 * (s[:-1] + s[1:]) * np.diff(mesh) / family.lam
    return float(np.sum(np.abs(ikl - ik)))


def substitution_residual(family: YosidaFamily) -> float:
    """``max_i |s(t_i) + (l * s)(t_i) / lam - 1|`` over the uniform nodes.

    The convolution is rebuilt from the full product-trapezoid row at each
    node, independently of the sequential marching update.
    """
    mesh, s, lam = family.mesh, family.mesh_values, family.lam
    h = np.diff(mesh)
    worst = 0.0
    for i in np.searchsorted(mesh, family.grid.nodes[1:]):
        ti = mesh[i]
        wp, wq = product_weights(family.pair.l, ti - mesh[1 : i + 1], ti - mesh[:i], h[:i])
        conv = wq @ s[:i] + wp @ s[1 : i + 1]
        worst = max(worst, abs(s[i] + conv / lam - 1.0))
    return worst


def k_conv_r(family: YosidaFamily) -> np.ndarray:
    """``(k * r_lam)(t_i)`` as a Stieltjes sum against ``-ds_lam`` on the mesh.

    Each mesh cell contributes ``(s_j - s_{j+1})`` times the mean of ``k``
    over the matching lag interval, so the singularity of ``k`` is integrated
    exactly.  Agrees with ``k_lam`` to the accuracy of the mesh.
    """
    k = family.pair.k
    mesh, s = family.mesh, family.mesh_values
    out = np.empty(family.grid.n + 1)
    out[0] = 1.0 / family.lam
    for pos, i in enumerate(np.searchsorted(mesh, family.grid.nodes[1:]), start=1):
        ti = mesh[i]
        lo = ti - mesh[1 : i + 1]
        hi = ti - mesh[:i]
        mean_k = (k.integral(hi) - k.integral(np.maximum(lo, 0.0))) / np.diff(mesh[: i + 1])
        out[pos] = (s[:i] - s[1 : i + 1]) @ mean_k
    return out


def _ml_series(alpha: float, x: float) -> float:
    total, n = 0.0, 0
    z = -x
    while True:
        term = z**n * rgamma(alpha * n + 1.0)
        total += term
        if n > 5 and abs(term) < 1e-16 * abs(total):
            return total
        n += 1
        if n > 500:
            return total


def _ml_asymptotic(alpha: float, x: float) -> float:
    # E_a(-x) ~ sum_{k>=1} (-1)^{k+1} x^{-k} / Gamma(1 - a k).  The terms
    # oscillate through zeros of 1/Gamma, so truncation follows the smooth
    # envelope x^{-k} Gamma(a k) / pi, which is smallest near a k ~ x^{1/a}.
    total, prev = 0.0, math.inf
    lx = math.log(x)
    for k in range(1, 400):
        env = math.lgamma(alpha * k) - k * lx
        if env > prev:
            break
        prev = env
        total += (-1.0) ** (k + 1) * x ** (-k) * rgamma(1.0 - alpha * k)
        if total != 0.0 and env < math.log(1e-17 * abs(total)):
            break
    return total


def _ml_integral(alpha: float, x: float) -> float:
    # E_a(-x) = sin(a pi)/(a pi) int_0^inf exp(-(x r)^{1/a}) / (r^2 + 2 r cos(a pi) + 1) dr
    c = math.cos(alpha * math.pi)
    ia = 1.0 / alpha

    def f(r):
        return math.exp(-((x * r) ** ia)) / (r * r + 2.0 * r * c + 1.0)

    val, _ = integrate.quad(f, 0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return math.sin(alpha * math.pi) / (alpha * math.pi) * val


def _ml_scalar(alpha: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if alpha == 1.0:
        return math.exp(-x)
    if x <= 1.0:
        return _ml_series(alpha, x)
    if x ** (1.0 / alpha) >= 40.0:
        return _ml_asymptotic(alpha, x)
    return _ml_integral(alpha, x)


def mittag_leffler(alpha: float, z):
    """``E_alpha(z)`` for ``0 < alpha <= 1`` and real ``z <= 0``.

    Uses the power series for ``|z| <= 1``, the optimally truncated
    algebraic expansion once ``|z|**(1/alpha) >= 40`` and otherwise the
    Laplace-type integral of the completely monotone branch.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr <= 0)):
        raise DomainError("only the branch z <= 0 is supported")
    out = np.array([_ml_scalar(float(alpha), -float(v)) for v in arr.ravel()]).reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def time_regularize(v, family_mu: YosidaFamily) -> np.ndarray:
    """``v_mu(t_i) = int_{t_i}^T r_mu(s - t_i) v(s) ds`` as a Stieltjes sum.

    ``v`` has shape ``(n + 1, ...)`` on the family's grid; cell ``m`` of the
    lag carries the weight ``s_mu(t_m) - s_mu(t_{m+1})`` against the cell
    average of ``v``.
    """
    v = np.asarray(v, dtype=float)
    n = family_mu.grid.n
    if v.shape[0] != n + 1:
        raise UsageError(f"field has {v.shape[0]} time samples, grid has {n + 1}")
    rho = family_mu.r_increments
    avg = 0.5 * (v[:-1] + v[1:])
    out = np.zeros_like(v)
    for i in range(n):
        out[i] = np.tensordot(rho[: n - i], avg[i:], axes=(0, 0))
    return out


@dataclass(frozen=True)
class K1Fit:
    """Empirical fit of ``0 <= k_lam <= C1 k + C2`` on the grid nodes ``t > 0``."""

    C1: float
    C2: float
    min_klambda: float
    violation: bool
    max_excess_over_k: float

    def bound_holds(self, c1: float, c2: float) -> bool:
        return self.max_excess_over_k <= 0.0 if (c1, c2) == (1.0, 0.0) else False


def check_K1(family: YosidaFamily, k: Kernel) -> K1Fit:
    """Minimal ``C1`` with ``C2 = k_lam(T)``; flags ``k_lam < 0``."""
    t = family.grid.nodes[1:]
    kl = family.klambda_values[1:]
    kv = k(t)
    c2 = float(kl[-1])
    ratio = np.where(kv > 0, (kl - c2) / np.where(kv > 0, kv, 1.0), 0.0)
    c1 = max(float(np.max(ratio)), 0.0)
    return K1Fit(
        C1=c1,
        C2=c2,
        min_klambda=float(np.min(family.klambda_values)),
        violation=bool(np.any(family.klambda_values < 0)),
        max_excess_over_k=float(np.max(kl - kv)),
    )


@dataclass(frozen=True)
class K2Fit:
    """Fit of ``-k_lam' <= -C1 k' + C2`` at cell midpoints (first cell excluded)."""

    C1: float
    C2: float
    min_neg_derivative: float
    midpoints: np.ndarray = field(repr=False)
    derivative_gap: np.ndarray = field(repr=False)


def check_K2(family: YosidaFamily, k: Kernel) -> K2Fit:
    """Uses ``-k_lam'`` on cell ``j`` as ``r_increments[j] / (lam tau)``."""
    tau = family.grid.tau
    neg_dkl = family.r_increments / (family.lam * tau)
    mid = tau * (np.arange(family.grid.n) + 0.5)
    neg_dk = -k.derivative(mid)
    inner = slice(1, None)
    c2 = float(neg_dkl[-1])
    d = neg_dk[inner]
    ratio = np.where(d > 0, (neg_dkl[inner] - c2) / np.where(d > 0, d, 1.0), 0.0)
    return K2Fit(
        C1=max(float(np.max(ratio, initial=0.0)), 0.0),
        C2=c2,
        min_neg_derivative=float(np.min(neg_dkl)),
        midpoints=mid[inner],
        derivative_gap=np.abs(neg_dkl[inner] - d),
    )
