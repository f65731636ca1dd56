import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_diffusion.errors import DomainError
from nonlocal_diffusion.toolbox import (
    Ramp,
    SmoothAbs,
    cutoff,
    truncate,
    truncate_between,
    truncation_potential,
)

import oracles

reals = st.floats(-50, 50, allow_nan=False)
levels = st.floats(0.01, 20)


@given(r=reals, K=levels)
def test_truncate_bounds(r, K):
    t = truncate(r, K)
    assert abs(t) <= K
    assert t == r if abs(r) <= K else t == np.sign(r) * K


@given(r=reals, K=levels)
def test_truncate_odd_and_idempotent(r, K):
    assert truncate(-r, K) == -truncate(r, K)
    assert truncate(truncate(r, K), K) == truncate(r, K)


@given(a=reals, b=reals, K=levels)
def test_truncate_monotone_lipschitz(a, b, K):
    lo, hi = min(a, b), max(a, b)
    assert truncate(lo, K) <= truncate(hi, K)
    assert abs(truncate(a, K) - truncate(b, K)) <= abs(a - b)


@given(r=reals, K=levels, extra=st.floats(0.01, 10))
def test_truncate_between(r, K, extra):
    M = K + extra
    v = truncate_between(r, K, M)
    assert abs(v) <= M - K + 1e-12
    assert v == 0 if abs(r) <= K else np.sign(v) == np.sign(r)


def test_truncate_between_domain():
    with pytest.raises(DomainError):
        truncate_between(1.0, 2.0, 1.0)


@pytest.mark.parametrize("K", [0.0, -1.0])
def test_level_domain(K):
    with pytest.raises(DomainError):
        truncate(1.0, K)
    with pytest.raises(DomainError):
        truncation_potential(1.0, K)
    with pytest.raises(DomainError):
        Ramp(K)


@given(u=reals, K=levels)
def test_potential_is_integral_of_truncation(u, K):
    ref = oracles.quad_integral(lambda r: float(truncate(r, K)), 0.0, u, kinks=(-K, K))
    assert truncation_potential(u, K) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@given(u=reals, K=levels)
def test_potential_bounds(u, K):
    p = truncation_potential(u, K)
    assert 0 <= p <= K * abs(u) + 1e-12
    assert p <= 0.5 * u * u + 1e-12


@given(u=reals, level=st.floats(0, 10))
def test_cutoff(u, level):
    h = cutoff(u, level)
    assert 0 <= h <= 1
    if abs(u) <= level:
        assert h == pytest.approx(1.0, abs=1e-15)
    if abs(u) >= level + 1:
        assert h == 0


def test_cutoff_domain():
    with pytest.raises(DomainError):
        cutoff(1.0, -0.5)


@given(y=reals, eps=st.floats(1e-3, 2))
def test_smooth_abs(y, eps):
    H = SmoothAbs(eps)
    assert 0 <= H(y) <= abs(y) + 1e-12
    assert abs(H.derivative(y)) <= 1
    assert H.second_derivative(y) > 0


def test_smooth_abs_derivatives_by_differences():
    H = SmoothAbs(0.3)
    y = np.linspace(-2, 2, 41)
    d = 1e-6
    np.testing.assert_allclose(H.derivative(y), (H(y + d) - H(y - d)) / (2 * d), atol=1e-8)
    np.testing.assert_allclose(
        H.second_derivative(y), (H.derivative(y + d) - H.derivative(y - d)) / (2 * d), atol=1e-6
    )


def test_smooth_abs_domain():
    with pytest.raises(DomainError):
        SmoothAbs(0.0)


@settings(max_examples=200)
@given(v=reals, K=st.floats(0.1, 10), delta=st.floats(0.1, 3))
def test_ramp_properties(v, K, delta):
    S = Ramp(K, delta)
    assert S(0.0) == 0
    assert S(-v) == -S(v)
    assert 0 <= S.derivative(v) <= 1
    if abs(v) <= K:
        assert S(v) == pytest.approx(v)
    if abs(v) >= K + delta:
        assert S.derivative(v) == 0
        assert abs(S(v)) == pytest.approx(K + 0.5 * delta)


@settings(max_examples=60, deadline=None)
@given(v=st.floats(-12, 12), K=st.floats(0.1, 5), delta=st.floats(0.1, 3))
def test_ramp_antiderivative_by_quadrature(v, K, delta):
    S = Ramp(K, delta)
    ref = oracles.quad_integral(lambda r: float(S(r)), 0.0, v, kinks=(-K - delta, -K, K, K + delta))
    assert float(S.antiderivative(v)) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_ramp_is_c1():
    S = Ramp(1.5, 0.5)
    y = np.linspace(-3, 3, 601)
    d = 1e-7
    np.testing.assert_allclose(S.derivative(y), (S(y + d) - S(y - d)) / (2 * d), atol=1e-6)
    for knot in (1.5, 2.0):
        assert S.derivative(knot - 1e-9) == pytest.approx(S.derivative(knot + 1e-9), abs=1e-7)
