import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppbvortex.errors import ContourThroughNode, InvalidSpec
from ppbvortex.hydro import (circulation, com_velocity, flow_field, flow_sample,
                             winding_number)
from ppbvortex.wavefield import (CORNER_PM, DIVERGING, PhysicalParams, WaveExpression,
                                 WaveTerm)


class Power:
    """``(x + i y)^l`` or ``(x - i y)^|l|`` around a centre; a vortex of charge ``l``."""

    def __init__(self, l, center=(0.0, 0.0), params=PhysicalParams()):
        self.l, self.center, self.params = l, center, params

    def value_and_gradient(self, x, y):
        z = (np.asarray(x) - self.center[0]) + 1j * (np.asarray(y) - self.center[1])
        if self.l >= 0:
            w, d = z, 1
        else:
            w, d = np.conj(z), -1j
        n = abs(self.l)
        psi = w**n
        dpsi = n * w ** (n - 1) if n else 0 * w
        # d/dx w = 1, d/dy w = i (or -i for the conjugate)
        return psi, dpsi, dpsi * (1j if d == 1 else d)


class PlaneWave:
    def __init__(self, kx, ky, params=PhysicalParams()):
        self.kx, self.ky, self.params = kx, ky, params

    def value_and_gradient(self, x, y):
        psi = np.exp(1j * (self.kx * np.asarray(x) + self.ky * np.asarray(y)))
        return psi, 1j * self.kx * psi, 1j * self.ky * psi


def test_plane_wave_velocity_is_hbar_k_over_m():
    p = PhysicalParams(m=2.0, hbar=0.5)
    fs = flow_sample(PlaneWave(3.0, -1.0, p), 0.2, 0.4)
    assert fs.velocity == pytest.approx((0.5 * 3.0 / 2.0, 0.5 * -1.0 / 2.0))
    assert fs.density == pytest.approx(1.0)
    assert fs.valid


@pytest.mark.parametrize("l", [-3, -2, -1, 1, 2, 4])
def test_circulation_quantized_for_point_vortex(l):
    p = PhysicalParams(m=1.5, hbar=0.7)
    c = circulation(Power(l, (0.1, -0.2), p), (0.1, -0.2), 0.3)
    assert c.winding == l
    assert c.value == pytest.approx(l * 2 * math.pi * 0.7 / 1.5, rel=1e-10)
    assert c.defect < 1e-10


def test_contour_away_from_vortex_has_no_winding():
    assert winding_number(Power(2, (1.0, 1.0)), (0.0, 0.0), 0.5) == 0


def test_contour_through_node_raises():
    class NodalLine:
        params = PhysicalParams()

        def value_and_gradient(self, x, y):
            x = np.asarray(x, dtype=float)
            return x + 0j, np.ones_like(x) + 0j, np.zeros_like(x) + 0j

    # psi = x vanishes on the y axis, which every circle about the origin crosses
    with pytest.raises(ContourThroughNode):
        circulation(NodalLine(), (0.0, 0.0), 0.5, n_samples=8)


def test_invalid_radius():
    with pytest.raises(InvalidSpec):
        circulation(Power(1), (0, 0), 0.0)


def test_velocity_invalid_at_node():
    fs = flow_sample(Power(1), 0.0, 0.0)
    assert not fs.valid
    assert math.isnan(fs.velocity[0])


def test_flow_field_shapes_and_current():
    expr = WaveExpression.of([WaveTerm(1.0, 1, 2, CORNER_PM), WaveTerm(0.3j, 0, 1, DIVERGING)])
    x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 4))
    f = flow_field(expr, x, y, 0.3)
    assert f.density.shape == (4, 5)
    ok = f.valid
    assert np.allclose(f.current[0][ok], f.density[ok] * f.velocity[0][ok])


def test_amplitude_does_not_change_velocity():
    expr = WaveExpression.of([WaveTerm(0.25, 2, 2), WaveTerm(-1.0, 0, 0)])
    x, y = np.meshgrid(np.linspace(-1.9, 1.9, 9), np.linspace(-1.9, 1.9, 9))
    a = flow_field(expr, x, y)
    b = flow_field(expr * (3 + 4j), x, y)
    assert np.array_equal(a.velocity[0][a.valid], b.velocity[0][a.valid])
    assert np.allclose(b.density, 25 * a.density)


def _state(rng):
    terms = [WaveTerm(complex(*rng.normal(size=2)), int(rng.integers(0, 3)),
                      int(rng.integers(0, 3)), CORNER_PM) for _ in range(2)]
    return WaveExpression.of(terms)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_com_velocity_is_mean_of_constituents(seed, n):
    rng = np.random.default_rng(seed)
    states = [_state(rng) for _ in range(n)]
    x, y = rng.uniform(-1, 1, size=2)
    com = com_velocity(states, x, y)
    parts = [flow_sample(s, x, y) for s in states]
    if not all(p.valid for p in parts):
        assert not com.valid
        return
    for i in range(2):
        mean = sum(p.velocity[i] for p in parts) / n
        assert com.velocity[i] == pytest.approx(mean, rel=1e-10, abs=1e-10)


def test_com_velocity_matches_product_phase_gradient():
    # velocity of the product wave with total mass N m, by finite differences of its phase
    rng = np.random.default_rng(3)
    states = [_state(rng) for _ in range(3)]
    x, y, h = 0.3, -0.2, 1e-6
    phase = lambda a, b: np.angle(np.prod([complex(s.value(a, b)) for s in states]))
    vx = (phase(x + h, y) - phase(x - h, y)) / (2 * h) / 3
    vy = (phase(x, y + h) - phase(x, y - h)) / (2 * h) / 3
    com = com_velocity(states, x, y)
    assert com.velocity == pytest.approx((vx, vy), rel=1e-6)


def test_com_velocity_rejects_mixed_params():
    a = WaveExpression.of([WaveTerm(1.0, 0, 0)])
    b = WaveExpression.of([WaveTerm(1.0, 0, 0, params=PhysicalParams(m=2))],
                          PhysicalParams(m=2))
    with pytest.raises(InvalidSpec):
        com_velocity([a, b], 0.0, 0.0)
    with pytest.raises(InvalidSpec):
        com_velocity([], 0.0, 0.0)
