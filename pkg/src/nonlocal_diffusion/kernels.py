"""Memory kernels for the time-nonlocal term and their Sonine partners.

A kernel ``k`` is admissible when it is non-negative, non-increasing and has
a partner ``l`` with ``(k * l)(t) = 1`` for all ``t > 0``.  Every kernel here
exposes its first and second antiderivatives in closed form, so that cell
integrals and product-integration weights never evaluate a singular kernel
at ``t = 0``.
"""
from __future__ import annotations

import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, UsageError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
# cells farther than this many widths from the singular end use Gauss-Legendre
_FAR_RATIO = 20.0


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _unwrap(val, scalar):
    return float(val) if scalar else val


def eval_g(beta: float, t):
    """Power kernel ``g_beta(t) = t**(beta-1) / Gamma(beta)`` for ``t > 0``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    arr, scalar = _as_array(t)
    if np.any(~(arr > 0)):
        raise DomainError("g_beta is only evaluated at t > 0")
    return _unwrap(arr ** (beta - 1.0) / math.gamma(beta), scalar)


def _g_closed(beta: float, t: np.ndarray) -> np.ndarray:
    # g_beta on t >= 0 for beta > 1, where g_beta(0) = 0
    return np.power(t, beta - 1.0) / math.gamma(beta)


def _check_nonneg(arr: np.ndarray) -> None:
    if np.any(~(arr >= 0)):
        raise DomainError("kernel integrals need t >= 0")


@dataclass(frozen=True)
class CellIntegrals:
    """``values[j] = int_{j tau}^{(j+1) tau} k``, ``j = 0..n-1``."""

    tau: float
    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.values)


class Kernel(ABC):
    """Non-negative, non-increasing kernel on (0, inf)."""

    singular: bool = True
    smooth: bool = True

    @abstractmethod
    def _value(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _integral(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _integral2(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _derivative(self, t: np.ndarray) -> np.ndarray: ...

    @property
    @abstractmethod
    def value_at_zero(self) -> float:
        """Right limit ``k(0+)``; ``inf`` for singular kernels."""

    def __call__(self, t):
        arr, scalar = _as_array(t)
        if np.any(~(arr > 0)):
            raise DomainError("kernels are evaluated at t > 0 only")
        return _unwrap(self._value(arr), scalar)

    def integral(self, t):
        """``int_0^t k``."""
        arr, scalar = _as_array(t)
        _check_nonneg(arr)
        return _unwrap(self._integral(arr), scalar)

    def integral2(self, t):
        """``int_0^t int_0^r k``, the second antiderivative vanishing at 0."""
        arr, scalar = _as_array(t)
        _check_nonneg(arr)
        return _unwrap(self._integral2(arr), scalar)

    def derivative(self, t):
        arr, scalar = _as_array(t)
        if np.any(~(arr > 0)):
            raise DomainError("kernel derivatives are evaluated at t > 0 only")
        return _unwrap(self._derivative(arr), scalar)

    def cell_integrals(self, tau: float, n: int) -> np.ndarray:
        edges = tau * np.arange(n + 1, dtype=float)
        # exact cell integrals of a non-increasing kernel are non-increasing;
        # clamp the rounding of the differences so history weights stay >= 0
        return np.minimum.accumulate(np.maximum(np.diff(self._integral(edges)), 0.0))


class _Power(Kernel):
    """Shared implementation for ``g_beta``."""

    beta: float

    def _check(self) -> None:
        if not self.beta > 0:
            raise DomainError(f"power kernel needs beta > 0, got {self.beta}")

    @property
    def singular(self) -> bool:  # type: ignore[override]
        return self.beta < 1

    @property
    def value_at_zero(self) -> float:
        if self.beta < 1:
            return math.inf
        return 1.0 if self.beta == 1 else 0.0

    def _value(self, t):
        return t ** (self.beta - 1.0) / math.gamma(self.beta)

    def _integral(self, t):
        return _g_closed(self.beta + 1.0, t)

    def _integral2(self, t):
        return _g_closed(self.beta + 2.0, t)

    def _derivative(self, t):
        b = self.beta
        return (b - 1.0) * t ** (b - 2.0) / math.gamma(b)

    def cell_integrals(self, tau: float, n: int) -> np.ndarray:
        # tau^b/Gamma(b+1) * ((j+1)^b - j^b), written to avoid cancellation
        b = self.beta
        j = np.arange(n, dtype=float)
        diff = np.ones(n)
        jj = j[1:]
        diff[1:] = jj**b * np.expm1(b * np.log1p(1.0 / jj))
        return tau**b / math.gamma(b + 1.0) * diff


@dataclass(frozen=True)
class PowerLaw(_Power):
    """``g_beta`` for arbitrary ``beta > 0``."""

    beta: float

    def __post_init__(self) -> None:
        self._check()


@dataclass(frozen=True)
class RiemannLiouville(_Power):
    """Fractional kernel ``k = g_{1-alpha}``, ``0 < alpha < 1``."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def beta(self) -> float:  # type: ignore[override]
        return 1.0 - self.alpha


def _exp_moments(beta: float, mu: float, t: np.ndarray, jmax: int):
    """``M_j(t) = int_0^t s^j e^{-mu s} g_beta(s) ds`` for ``j = 0..jmax``."""
    out = []
    x = mu * t
    for j in range(jmax + 1):
        c = math.exp(math.lgamma(beta + j) - math.lgamma(beta)) * mu ** (-beta - j)
        out.append(c * gammainc(beta + j, x))
    return out


def _exp_integrals(beta: float, mu: float, t: np.ndarray):
    """First and second antiderivatives of ``g_beta(t) e^{-mu t}``.

    Also returns the third one, needed by the partner kernel.
    """
    m0, m1, m2 = _exp_moments(beta, mu, t, 2)
    e1 = m0
    e2 = t * m0 - m1
    e3 = 0.5 * t * t * m0 - t * m1 + 0.5 * m2
    return e1, e2, e3


def _check_exp_params(alpha: float, mu_w: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not mu_w > 0:
        raise DomainError(f"mu_w must be positive, got {mu_w}")


@dataclass(frozen=True)
class ExpWeighted(Kernel):
    """``k(t) = g_{1-alpha}(t) e^{-mu_w t}``."""

    alpha: float
    mu_w: float

    def __post_init__(self) -> None:
        _check_exp_params(self.alpha, self.mu_w)

    value_at_zero = math.inf

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha

    def _value(self, t):
        return t ** (self.beta - 1.0) / math.gamma(self.beta) * np.exp(-self.mu_w * t)

    def _integral(self, t):
        return _exp_integrals(self.beta, self.mu_w, t)[0]

    def _integral2(self, t):
        return _exp_integrals(self.beta, self.mu_w, t)[1]

    def _derivative(self, t):
        b, mu = self.beta, self.mu_w
        g = t ** (b - 1.0) / math.gamma(b)
        return np.exp(-mu * t) * ((b - 1.0) / t - mu) * g


@dataclass(frozen=True)
class ExpWeightedPartner(Kernel):
    """Partner of :class:`ExpWeighted`.

    ``l(t) = g_alpha(t) e^{-mu_w t} + mu_w int_0^t g_alpha(s) e^{-mu_w s} ds``;
    the integral term is an incomplete gamma function.
    """

    alpha: float
    mu_w: float

    def __post_init__(self) -> None:
        _check_exp_params(self.alpha, self.mu_w)

    value_at_zero = math.inf

    def _value(self, t):
        a, mu = self.alpha, self.mu_w
        return t ** (a - 1.0) / math.gamma(a) * np.exp(-mu * t) + mu ** (1.0 - a) * gammainc(a, mu * t)

    def _integral(self, t):
        e1, e2, _ = _exp_integrals(self.alpha, self.mu_w, t)
        return e1 + self.mu_w * e2

    def _integral2(self, t):
        _, e2, e3 = _exp_integrals(self.alpha, self.mu_w, t)
        return e2 + self.mu_w * e3

    def _derivative(self, t):
        a = self.alpha
        return np.exp(-self.mu_w * t) * (a - 1.0) * t ** (a - 2.0) / math.gamma(a)


@dataclass(frozen=True, eq=False)
class Tabulated(Kernel):
    """Piecewise-constant kernel taking the left sample value on each interval.

    The value ``values[0]`` is used on ``(0, times[1])`` and ``values[-1]``
    beyond the last sample, which keeps monotonicity exact.
    """

    times: np.ndarray
    values: np.ndarray

    singular = False
    smooth = False

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.size == 0 or t.size != v.size:
            raise UsageError("tabulated kernel needs matching, non-empty time and value columns")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise DomainError("tabulated times must be non-negative and strictly increasing")
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise DomainError("tabulated values must be non-negative and non-increasing")
        edges = np.concatenate(([0.0], t[1:]))
        widths = np.diff(edges)
        c1 = np.concatenate(([0.0], np.cumsum(v[:-1] * widths)))
        c2 = np.concatenate(([0.0], np.cumsum(c1[:-1] * widths + 0.5 * v[:-1] * widths**2)))
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_c1", c1)
        object.__setattr__(self, "_c2", c2)

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Read a two-column ``t, value`` table; a header row is optional."""
        rows = []
        with open(Path(path), newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0 and not rows:
                        continue
                    raise UsageError(f"{path}: cannot parse row {i + 1}: {row}") from None
        if not rows:
            raise UsageError(f"{path}: no data rows")
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def value_at_zero(self) -> float:
        return float(self.values[0])

    def _locate(self, t):
        return np.clip(np.searchsorted(self._edges, t, side="right") - 1, 0, len(self._edges) - 1)

    def _value(self, t):
        return self.values[self._locate(t)]

    def _integral(self, t):
        i = self._locate(t)
        return self._c1[i] + self.values[i] * (t - self._edges[i])

    def _integral2(self, t):
        i = self._locate(t)
        dt = t - self._edges[i]
        return self._c2[i] + self._c1[i] * dt + 0.5 * self.values[i] * dt**2

    def _derivative(self, t):
        if self.times.size < 2:
            return np.zeros_like(t)
        slopes = np.diff(self.values) / np.diff(self.times)
        mids = 0.5 * (self.times[1:] + self.times[:-1])
        return np.interp(t, mids, slopes)


@dataclass(frozen=True, eq=False)
class Capped(Kernel):
    """``min(k(t), k(t_cut))``: the bounded part of a split."""

    base: Kernel
    t_cut: float

    singular = False
    smooth = False

    @property
    def cap(self) -> float:
        return float(self.base(self.t_cut))

    @property
    def value_at_zero(self) -> float:
        return self.cap

    def _value(self, t):
        return np.minimum(self.base._value(t), self.cap)

    def _integral(self, t):
        tc, c = self.t_cut, self.cap
        tail = self.base._integral(np.maximum(t, tc)) - self.base._integral(np.asarray(tc))
        return c * np.minimum(t, tc) + np.where(t > tc, tail, 0.0)

    def _integral2(self, t):
        tc, c = self.t_cut, self.cap
        b1 = self.base._integral(np.asarray(tc))
        b2 = self.base._integral2(np.asarray(tc))
        tt = np.maximum(t, tc)
        after = 0.5 * c * tc**2 + c * tc * (tt - tc) + self.base._integral2(tt) - b2 - b1 * (tt - tc)
        return np.where(t > tc, after, 0.5 * c * t**2)

    def _derivative(self, t):
        return np.where(t < self.t_cut, 0.0, self.base._derivative(t))


@dataclass(frozen=True, eq=False)
class Excess(Kernel):
    """``k - min(k, k(t_cut))``: the singular part of a split, zero after ``t_cut``."""

    base: Kernel
    t_cut: float

    smooth = False

    @property
    def singular(self) -> bool:  # type: ignore[override]
        return self.base.singular

    @property
    def value_at_zero(self) -> float:
        return self.base.value_at_zero - Capped(self.base, self.t_cut).cap

    def _value(self, t):
        return np.maximum(self.base._value(t) - Capped(self.base, self.t_cut).cap, 0.0)

    def _integral(self, t):
        return self.base._integral(t) - Capped(self.base, self.t_cut)._integral(t)

    def _integral2(self, t):
        return self.base._integral2(t) - Capped(self.base, self.t_cut)._integral2(t)

    def _derivative(self, t):
        return np.where(t < self.t_cut, self.base._derivative(t), 0.0)


def split_kernel(k: Kernel, t_cut: float, T: float) -> tuple[Kernel, Kernel]:
    """Split ``k = k1 + k2`` with ``k2 = min(k, k(t_cut))`` bounded.

    Returns ``(k1, k2)``.
    """
    if not 0 < t_cut < T:
        raise DomainError(f"t_cut must lie in (0, T={T}), got {t_cut}")
    return Excess(k, t_cut), Capped(k, t_cut)


@dataclass(frozen=True)
class KernelPairHandle:
    """A kernel ``k`` with its Sonine partner ``l``.

    ``lp_exponent`` is an exponent ``p > 1`` with ``l`` in ``L^p(0, T)``;
    it is metadata only.
    """

    k: Kernel
    l: Kernel
    lp_exponent: float

    def describe(self) -> dict:
        k = self.k
        if isinstance(k, RiemannLiouville):
            return {"family": "rl", "alpha": k.alpha}
        if isinstance(k, ExpWeighted):
            return {"family": "exp", "alpha": k.alpha, "mu_w": k.mu_w}
        return {"family": type(k).__name__.lower()}


def _lp_for(alpha: float) -> float:
    # l ~ t^{alpha-1} is in L^p for p < 1/(1-alpha); record the midpoint
    return 0.5 * (1.0 + 1.0 / (1.0 - alpha))


def make_pair(k: Kernel, partner: Kernel | None = None) -> KernelPairHandle:
    """Attach the Sonine partner to a kernel.

    Analytic families know their partner; a :class:`Tabulated` kernel needs
    one supplied explicitly.
    """
    if isinstance(k, RiemannLiouville):
        return KernelPairHandle(k, PowerLaw(k.alpha), _lp_for(k.alpha))
    if isinstance(k, ExpWeighted):
        return KernelPairHandle(k, ExpWeightedPartner(k.alpha, k.mu_w), _lp_for(k.alpha))
    if partner is None:
        raise UsageError(f"{type(k).__name__} kernels need an explicit partner")
    lp = math.inf if not partner.singular else 2.0
    return KernelPairHandle(k, partner, lp)


def cell_integrals(k: Kernel, tau: float, n: int) -> CellIntegrals:
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return CellIntegrals(float(tau), k.cell_integrals(float(tau), int(n)))


def product_weights(kernel: Kernel, p: np.ndarray, q: np.ndarray, h: np.ndarray | None = None):
    """Weights for ``int_p^q kernel(u) f(u) du ~ wp f(p) + wq f(q)``.

    The kernel is integrated exactly against the linear interpolant of ``f``
    when the cell touches the singular end; far cells of a smooth kernel use
    4-point Gauss-Legendre, which avoids the cancellation of differencing
    large antiderivatives.  ``h`` overrides ``q - p`` when the caller knows
    the cell width more accurately.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    h = q - p if h is None else np.asarray(h, dtype=float)
    wp = np.empty_like(p)
    wq = np.empty_like(p)
    far = (p > _FAR_RATIO * h) if kernel.smooth else np.zeros(p.shape, bool)
    near = ~far
    if np.any(near):
        pn, qn, hn = p[near], np.maximum(q[near], 0.0), h[near]
        pn = np.maximum(pn, 0.0)
        g1p = kernel._integral(pn)
        i0 = kernel._integral(qn) - g1p
        # int_p^q k(u) (q - u) du / h
        left = (kernel._integral2(qn) - kernel._integral2(pn) - hn * g1p) / hn
        wp[near] = left
        wq[near] = i0 - left
    if np.any(far):
        hf = 0.5 * h[far]
        mid = p[far] + hf
        u = mid[:, None] + hf[:, None] * _GL_X[None, :]
        kv = kernel._value(u) * _GL_W[None, :]
        wp[far] = hf * (kv @ (0.5 * (1.0 - _GL_X)))
        wq[far] = hf * (kv @ (0.5 * (1.0 + _GL_X)))
    return wp, wq


def convolve_kernels(k: Kernel, l: Kernel, t: float, cells: int) -> float:
    """``(k * l)(t)`` by product integration split at ``t / 2``.

    On ``(0, t/2)`` the factor ``l(s)`` is integrated exactly against the
    interpolant of ``k(t - s)``; on the other half the roles are swapped, so
    each singular endpoint is always handled by an exact integral.
    """
    m = max(cells // 2, 1)
    edges = np.linspace(0.0, 0.5 * t, m + 1)
    p, q = edges[:-1], edges[1:]
    total = 0.0
    for sing, reg in ((l, k), (k, l)):
        wp, wq = product_weights(sing, p, q)
        fv = reg._value(t - edges)
        total += wp @ fv[:-1] + wq @ fv[1:]
    return float(total)


def sonine_values(pair: KernelPairHandle, grid, cells: int | None = None) -> np.ndarray:
    """``(k * l)(t_i)`` on a strictly increasing grid in ``(0, T]``."""
    t = np.asarray(grid, dtype=float).ravel()
    if t.size == 0:
        raise UsageError("sonine check needs a non-empty grid")
    if t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise DomainError("grid must be strictly increasing in (0, T]")
    m = t.size if cells is None else int(cells)
    return np.array([convolve_kernels(pair.k, pair.l, ti, m) for ti in t])


def sonine_residual(pair: KernelPairHandle, grid, cells: int | None = None) -> float:
    """``max_i |(k * l)(t_i) - 1|``; each convolution uses ``cells`` sub-cells
    (default: the grid size)."""
    return float(np.max(np.abs(sonine_values(pair, grid, cells) - 1.0)))
