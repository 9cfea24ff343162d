import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppbvortex.errors import InvalidSpec, UnsupportedDegree
from ppbvortex.wavefield import (CONVERGING, CORNER_MP, CORNER_PM, DIVERGING, MAX_DEGREE,
                                 PhysicalParams, SignPair, WaveExpression, WaveTerm,
                                 basis_term, eigenvalue, eigenvalue_1d, hermite_pm,
                                 pde_residual, u1d)

SIGNS = (DIVERGING, CONVERGING, CORNER_PM, CORNER_MP)


def test_low_order_hermite_closed_forms():
    xi = np.linspace(-2, 2, 9)
    for s in (1, -1):
        assert np.allclose(hermite_pm(0, s, xi), 1)
        assert np.allclose(hermite_pm(1, s, xi), 2 * xi)
        assert np.allclose(hermite_pm(2, s, xi), 4 * xi**2 - 2j * s)
        assert np.allclose(hermite_pm(3, s, xi), 8 * xi**3 - 12j * s * xi)


@given(st.integers(0, 12), st.sampled_from([1, -1]), st.floats(-3, 3))
def test_hermite_matches_rotated_physicists_polynomial(n, s, xi):
    # H_n^s(xi) = exp(i s n pi/4) H_n(exp(-i s pi/4) xi)
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1
    z = np.exp(-1j * s * np.pi / 4) * xi
    ref = np.exp(1j * s * n * np.pi / 4) * np.polynomial.hermite.hermval(z, coeffs)
    got = complex(hermite_pm(n, s, xi))
    assert abs(got - ref) <= 1e-9 * max(1.0, abs(ref))


def test_degree_validation():
    with pytest.raises(UnsupportedDegree):
        hermite_pm(MAX_DEGREE + 1, 1, 0.0)
    with pytest.raises(UnsupportedDegree):
        WaveTerm(1.0, -1, 0)
    with pytest.raises(InvalidSpec):
        hermite_pm(2, 0, 0.0)


def test_params_and_beta():
    p = PhysicalParams(m=2.0, hbar=0.5, gamma=3.0)
    assert p.beta == pytest.approx(math.sqrt(12.0))
    with pytest.raises(InvalidSpec):
        PhysicalParams(m=-1.0)


def test_sign_pair_kinds():
    assert DIVERGING.kind != CONVERGING.kind
    assert CORNER_PM.kind == CORNER_MP.kind
    assert isinstance(CORNER_PM, SignPair)


@pytest.mark.parametrize("signs", SIGNS)
def test_eigenvalue_matches_sum_of_1d(signs):
    for nx in range(4):
        for ny in range(4):
            e = eigenvalue(WaveTerm(1.0, nx, ny, signs))
            ref = eigenvalue_1d(nx, signs[0]).value + eigenvalue_1d(ny, signs[1]).value
            assert e.value == pytest.approx(ref)
            assert e.real == 0


def test_corner_diagonal_terms_have_zero_energy():
    for n in range(5):
        assert eigenvalue(WaveTerm(1.0, n, n, CORNER_PM)).is_zero
    assert not eigenvalue(WaveTerm(1.0, 1, 0, CORNER_PM)).is_zero


def test_term_is_product_of_1d_factors():
    x = np.linspace(-1.5, 1.5, 7)
    y = np.linspace(-1.0, 2.0, 7)
    p = PhysicalParams(m=1.0, hbar=1.0, gamma=2.0)
    term = WaveTerm(0.5 - 1j, 2, 3, CORNER_MP, params=p)
    ref = (0.5 - 1j) * u1d(2, -1, x, p) * u1d(3, 1, y, p)
    assert np.allclose(term.value(x, y), ref)


def test_basic_flow_closed_form():
    x, y = np.meshgrid(np.linspace(-1.3, 1.3, 11), np.linspace(-1.1, 1.7, 11))
    expr = WaveExpression.of([WaveTerm(0.25, 2, 2), WaveTerm(-1.0, 0, 0)])
    ref = (4 * x**2 * y**2 + 2j * (x**2 - y**2)) * np.exp(0.5j * (x**2 - y**2))
    assert np.allclose(expr.value(x, y), ref, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.sampled_from(SIGNS),
       st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi))
def test_pde_residual_small(nx, ny, signs, x, y, alpha):
    term = WaveTerm(1.0, nx, ny, signs, alpha=alpha)
    assert float(pde_residual(term, x, y)) < 1e-5


def test_pde_residual_coarse_stencil_is_visibly_worse():
    term = WaveTerm(1.0, 4, 3, CORNER_PM)
    x = np.array([1.2, -0.7])
    y = np.array([0.5, 1.6])
    fine = pde_residual(term, x, y).max()
    coarse = pde_residual(term, x, y, h=0.1, order=2).max()
    assert fine < 1e-6 < coarse


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.sampled_from(SIGNS),
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 6.28))
def test_gradient_matches_finite_difference(nx, ny, signs, x, y, alpha):
    term = WaveTerm(1.0 + 0.5j, nx, ny, signs, alpha=alpha)
    h = 1e-6
    gx, gy = term.gradient(x, y)
    fx = (term.value(x + h, y) - term.value(x - h, y)) / (2 * h)
    fy = (term.value(x, y + h) - term.value(x, y - h)) / (2 * h)
    scale = 1 + abs(gx) + abs(gy)
    assert abs(gx - fx) < 1e-6 * scale
    assert abs(gy - fy) < 1e-6 * scale


def test_rotation_by_quarter_turn_swaps_axes():
    t = WaveTerm(1.0, 2, 1, CORNER_PM, alpha=math.pi / 2)
    plain = WaveTerm(1.0, 2, 1, CORNER_PM)
    x, y = 0.3, -0.7
    # xi = y, eta = -x
    assert complex(t.value(x, y)) == pytest.approx(complex(plain.value(y, -x)))


def test_time_factor_and_activation():
    p = PhysicalParams(gamma=2.0)
    t = WaveTerm(1.0, 1, 0, CORNER_PM, t0=0.0, params=p)
    assert t.time_factor(-0.1) == 0.0
    assert t.time_factor(0.0) == 1.0
    assert t.time_factor(0.5) == pytest.approx(math.exp(-1.0 * 2.0 * 0.5))
    assert complex(t.value(0.2, 0.3, -1.0)) == 0


def test_expression_arithmetic_and_amplitude():
    a = WaveExpression.of([basis_term(2, 2, coefficient=0.25)])
    b = WaveExpression.of([basis_term(0, 0, coefficient=-1.0)])
    e = a + b
    x, y = 0.4, -0.9
    assert complex(e.value(x, y)) == pytest.approx(complex(a.value(x, y) + b.value(x, y)))
    s = e * (3 + 4j)
    assert s.amplitude == 3 + 4j
    assert [t.coefficient for t in s.terms] == [t.coefficient for t in e.terms]
    assert complex(s.value(x, y)) == pytest.approx((3 + 4j) * complex(e.value(x, y)))
    assert len(list(s)) == 2
    assert complex((e - e).value(x, y)) == pytest.approx(0)


def test_mixed_params_rejected():
    with pytest.raises(InvalidSpec):
        WaveExpression.of([WaveTerm(1.0, 0, 0), WaveTerm(1.0, 0, 0, params=PhysicalParams(m=2))])


def test_dtype_generic_long_double():
    term = WaveTerm(1.0, 3, 2, DIVERGING)
    x = np.array([0.3], dtype=np.longdouble)
    v = term.value(x, x)
    assert v.dtype == np.clongdouble
    assert complex(v[0]) == pytest.approx(complex(term.value(0.3, 0.3)))
