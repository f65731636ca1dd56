"""Reference values computed independently of the package.

Nothing here imports ``nonlocal_diffusion``; the oracles use plain floats,
mpmath or scipy quadrature on the defining integrals.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate

# Lanczos approximation, g = 7, n = 9
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS[0]
    t = x + 7.5
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (x + i)
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def erfcx_cf(x: float, iters: int = 20000) -> float:
    """``exp(x^2) erfc(x)`` for ``x > 0`` from the continued fraction (modified Lentz).

    Converges slowly for small ``x``; intended for ``x >= 0.5``.
    """
    if x <= 0:
        raise ValueError("continued fraction oracle needs x > 0")
    # erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tiny = 1e-300
    f = x
    C, D = f, 0.0
    for j in range(1, iters):
        a = 0.5 * j
        D = x + a * D
        D = 1.0 / (D if D != 0 else tiny)
        C = x + a / C
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / (math.sqrt(math.pi) * f)


def ml_series(alpha: float, z: float, dps: int = 60) -> float:
    """``E_alpha(z)`` by its power series in extended precision.

    Working precision grows with ``|z|`` so the alternating cancellation is
    absorbed; terms are summed until they fall below the target.
    """
    x = abs(z)
    if x ** (1.0 / alpha) > 300.0:
        raise ValueError("series oracle would need too many digits; use ml_quad")
    extra = int(x ** (1.0 / alpha) / math.log(10)) + 10 if x > 0 else 0
    with mpmath.workdps(dps + extra):
        zz, aa = mpmath.mpf(z), mpmath.mpf(alpha)
        total = mpmath.mpf(0)
        n = 0
        small = 0
        while True:
            term = zz**n / mpmath.gamma(aa * n + 1)
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps) * max(abs(total), mpmath.mpf(10) ** (-dps)):
                small += 1
                if small > 3:
                    break
            else:
                small = 0
            n += 1
        return float(total)


def ml_quad(alpha: float, x: float, dps: int = 50) -> float:
    """``E_alpha(-x)`` from the Laplace inversion of ``s^(alpha-1) / (s^alpha + x)``.

    Folding the contour onto the negative real axis leaves a real integral
    against ``e^{-r}``, evaluated by mpmath tanh-sinh quadrature.  On
    ``(0, 1)`` the substitution ``r = w^(1/alpha)`` removes the ``r^(alpha-1)``
    singularity, which holds most of the mass for small ``alpha``.  For
    ``alpha`` near 1 with small ``x`` the integrand degenerates to a spike;
    use :func:`ml_series` there.
    """
    # the peak of the integrand sits near x^(1/alpha); keep digits beyond it
    dps += max(0, int(math.log10(x) / alpha))
    with mpmath.workdps(dps):
        a, xx = mpmath.mpf(alpha), mpmath.mpf(x)
        c = mpmath.cos(a * mpmath.pi)
        sn = mpmath.sin(a * mpmath.pi)

        def den(ra):
            return ra * ra + 2 * xx * ra * c + xx * xx

        def outer(r):
            ra = r**a
            return mpmath.exp(-r) * ra / r * xx * sn / den(ra)

        def inner(w):
            return mpmath.exp(-(w ** (1 / a))) * xx * sn / den(w) / a

        peak = xx ** (1 / a)
        pts = sorted({mpmath.mpf(1), mpmath.mpf(10)} | {p for p in (peak / 2, peak, 2 * peak) if p > 1})
        head = mpmath.quad(inner, [0, 1])
        tail = mpmath.quad(outer, pts + [mpmath.inf])
        return float((head + tail) / mpmath.pi)


def ml_half(x: float) -> float:
    """``E_{1/2}(-x) = exp(x^2) erfc(x)``; the series covers ``x < 0.5``."""
    if x < 0.5:
        return float(ml_series(0.5, -x))
    return erfcx_cf(x)


def g(beta: float, t):
    return np.asarray(t, dtype=float) ** (beta - 1.0) / math.gamma(beta)


def quad_conv(k, l, t: float, m: int = 10) -> float:
    """``int_0^t k(t - s) l(s) ds`` by adaptive quadrature.

    Split at ``t / 2``; on each half the singular factor's argument is
    substituted as ``w^m``, which turns ``u^(beta - 1)`` into the smooth
    ``w^(m beta - 1)``.
    """
    h = 0.5 * t
    top = h ** (1.0 / m)

    def left(w):
        s = w**m
        return float(k(t - s)) * float(l(s)) * m * w ** (m - 1) if s > 0 else 0.0

    def right(w):
        u = w**m
        return float(k(u)) * float(l(t - u)) * m * w ** (m - 1) if u > 0 else 0.0

    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
    return integrate.quad(left, 0.0, top, **opts)[0] + integrate.quad(right, 0.0, top, **opts)[0]


def quad_integral(f, a: float, b: float, kinks=()) -> float:
    """``int_a^b f``, split at any ``kinks`` inside the interval."""
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = [a] + sorted(k for k in kinks if a < k < b) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    return sign * total


def pv_laplacian(u, x: float, s: float, support=(-1.0, 1.0), breaks=(), y0: float = 1e-4) -> float:
    """Unnormalized ``int (u(x) - u(y)) |x - y|^{-1-2s} dy`` by adaptive quadrature.

    The principal value is folded onto ``y > 0``:
    ``int_0^inf (2u(x) - u(x+y) - u(x-y)) y^{-1-2s} dy``.  On ``(0, y0)``
    the bracket is replaced by ``-u''(x) y^2`` (second derivative from a
    five-point stencil), which avoids the cancellation at tiny ``y``.  ``u``
    vanishes outside ``support``; kinks are passed as breakpoints.
    """
    lo, hi = support
    d = 1e-2
    u2 = (-u(x + 2 * d) + 16 * u(x + d) - 30 * u(x) + 16 * u(x - d) - u(x - 2 * d)) / (12 * d * d)
    head = -u2 * y0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    pts = {hi - x, x - lo} | {abs(b - x) for b in breaks}
    pts = sorted(p for p in pts if p > y0)

    def integrand(y):
        return (2.0 * u(x) - u(x + y) - u(x - y)) * y ** (-1.0 - 2.0 * s)

    edges = [y0] + pts
    total = head
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=500, epsabs=1e-11, epsrel=1e-10)
        total += val
    # beyond the support only 2u(x) survives
    total += 2.0 * u(x) * edges[-1] ** (-2.0 * s) / (2.0 * s)
    return total


def brute_force_inverse(M: np.ndarray) -> np.ndarray:
    """Dense inverse by Gauss-Jordan elimination, no pivoting beyond partial."""
    n = M.shape[0]
    A = np.hstack([M.astype(float), np.eye(n)])
    for c in range(n):
        p = c + int(np.argmax(np.abs(A[c:, c])))
        A[[c, p]] = A[[p, c]]
        A[c] /= A[c, c]
        for r in range(n):
            if r != c:
                A[r] -= A[r, c] * A[c]
    return A[:, n:]
