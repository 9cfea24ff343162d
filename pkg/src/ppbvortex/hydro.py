"""Density, probability current, quantum velocity and circulation.

For a wavefunction ``psi`` the current is ``j = (hbar/m) Im(conj(psi) grad psi)``
and the velocity ``v = j / |psi|^2 = grad(S)/m`` with ``S = hbar arg(psi)``.
Around a closed contour the circulation is ``l * 2 pi hbar / m`` where ``l`` is
the number of times the phase winds (counterclockwise positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ContourThroughNode, InvalidSpec, NumericalError
from .wavefield import PhysicalParams, WaveExpression

DENSITY_EPS = 1e-14
DEFAULT_SAMPLES = 720
MAX_SAMPLES = 1 << 16
SHRINK_RETRIES = 3


def field_params(expr) -> PhysicalParams:
    """Physical parameters of a wave expression or zero-energy wave."""
    if isinstance(expr, WaveExpression):
        return expr.params
    family = getattr(expr, "family", None)
    if family is not None:
        return family.params
    return getattr(expr, "params", PhysicalParams())


def value_and_gradient(expr, x, y, t: float = 0.0):
    """``(psi, dpsi/dx, dpsi/dy)`` for any supported field object."""
    if isinstance(expr, WaveExpression):
        return expr.value_and_gradient(x, y, t)
    # time-independent fields (zero-energy waves) take only coordinates
    return expr.value_and_gradient(x, y)


@dataclass(frozen=True)
class FlowSample:
    """Hydrodynamic quantities at one or many points.

    ``velocity`` is NaN wherever ``valid`` is false.
    """

    density: np.ndarray
    current: tuple
    velocity: tuple
    valid: np.ndarray


def _flow(psi, gx, gy, params: PhysicalParams, eps: float) -> FlowSample:
    density = np.abs(psi) ** 2
    scale = params.hbar / params.m
    cpsi = np.conj(psi)
    jx = scale * np.imag(cpsi * gx)
    jy = scale * np.imag(cpsi * gy)
    valid = density > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        vx = np.where(valid, jx / np.where(valid, density, 1.0), np.nan)
        vy = np.where(valid, jy / np.where(valid, density, 1.0), np.nan)
    return FlowSample(density, (jx, jy), (vx, vy), valid)


def flow_field(expr, x, y, t: float = 0.0, eps: float = DENSITY_EPS) -> FlowSample:
    """Vectorised :func:`flow_sample` over arrays of points.

    A global amplitude cancels from the velocity, so it is computed from the
    unit-amplitude field and only density and current carry ``|amplitude|^2``.
    """
    amp = getattr(expr, "amplitude", 1)
    if isinstance(expr, WaveExpression) and amp != 1:
        base = _flow(*replace(expr, amplitude=1).value_and_gradient(x, y, t), expr.params, 0.0)
        w = abs(amp) ** 2
        density = w * base.density
        valid = density > eps
        vx = np.where(valid, base.velocity[0], np.nan)
        vy = np.where(valid, base.velocity[1], np.nan)
        return FlowSample(density, (w * base.current[0], w * base.current[1]), (vx, vy), valid)
    psi, gx, gy = value_and_gradient(expr, x, y, t)
    return _flow(psi, gx, gy, field_params(expr), eps)


def flow_sample(expr, x: float, y: float, t: float = 0.0, eps: float = DENSITY_EPS) -> FlowSample:
    """Density, current and velocity at a single point.

    The velocity is only defined where the density exceeds ``eps``; elsewhere
    the sample is flagged invalid.
    """
    fs = flow_field(expr, x, y, t, eps)
    return FlowSample(float(fs.density), (float(fs.current[0]), float(fs.current[1])),
                      (float(fs.velocity[0]), float(fs.velocity[1])), bool(fs.valid))


@dataclass(frozen=True)
class Circulation:
    """Result of a contour integral of the velocity.

    ``defect`` is ``|value / quantum - winding|``, the quantization error of the
    quadrature; ``radius`` and ``n_samples`` are those finally used.
    """

    value: float
    winding: int
    quantum: float
    radius: float
    n_samples: int
    defect: float


def _contour(expr, center, radius, t, n):
    theta = 2 * np.pi * np.arange(n) / n
    ct, st = np.cos(theta), np.sin(theta)
    x = center[0] + radius * ct
    y = center[1] + radius * st
    psi, gx, gy = value_and_gradient(expr, x, y, t)
    return psi, gx, gy, ct, st


def _integrate(expr, center, radius, t, n_start, eps, params):
    quantum = 2 * np.pi * params.hbar / params.m
    n = n_start
    while True:
        psi, gx, gy, ct, st = _contour(expr, center, radius, t, n)
        density = np.abs(psi) ** 2
        if np.any(density <= eps):
            return None
        steps = np.angle(np.roll(psi, -1) / psi)
        # tangential velocity times arc length element; periodic trapezoid rule
        tangential = np.imag(np.conj(psi) * (-st * gx + ct * gy)) / density
        value = params.hbar / params.m * radius * tangential.sum() * (2 * np.pi / n)
        winding = int(round(steps.sum() / (2 * np.pi)))
        defect = abs(value / quantum - winding)
        if (np.max(np.abs(steps)) < np.pi / 2 and defect < 1e-10) or n >= MAX_SAMPLES:
            if np.max(np.abs(steps)) >= np.pi:
                raise NumericalError("phase increments not resolved at the sample cap")
            return Circulation(float(value), winding, float(quantum), float(radius), n,
                               float(defect))
        n *= 2


def circulation(expr, center: Sequence[float], radius: float, t: float = 0.0,
                n_samples: int = DEFAULT_SAMPLES, eps: float = DENSITY_EPS) -> Circulation:
    """Circulation of the velocity field around a circle.

    The integral uses the periodic trapezoid rule with ``n_samples`` points,
    doubled (up to ``2**16``) until every sampled phase step is below ``pi/2``
    and the result is quantized to ``1e-10``.  If a sample lands on a density
    zero the radius is halved, at most three times.

    Raises
    ------
    ContourThroughNode
        If the contour still meets a density zero after all retries.
    """
    if not radius > 0:
        raise InvalidSpec(f"radius must be positive, got {radius!r}")
    params = field_params(expr)
    r = float(radius)
    for _ in range(SHRINK_RETRIES + 1):
        res = _integrate(expr, center, r, t, int(n_samples), eps, params)
        if res is not None:
            return res
        r *= 0.5
    raise ContourThroughNode(
        f"contour around {tuple(center)} meets a density zero down to radius {2 * r!r}")


def winding_number(expr, center: Sequence[float], radius: float, t: float = 0.0) -> int:
    """Integer phase winding of ``psi`` around the circle."""
    return circulation(expr, center, radius, t).winding


def com_velocity(states: Sequence, x_c: float, y_c: float, t: float = 0.0,
                 eps: float = DENSITY_EPS) -> FlowSample:
    """Centre-of-mass flow of a product of single-particle states.

    All factors are evaluated at the centre of mass ``(x_c, y_c)`` with the total
    mass ``M = N m``; the velocity is then the mean of the single-particle
    velocities.  The sample is invalid if any factor's density is below ``eps``.
    """
    if len(states) == 0:
        raise InvalidSpec("need at least one single-particle state")
    params = field_params(states[0])
    for s in states[1:]:
        if field_params(s) != params:
            raise InvalidSpec("all states must share PhysicalParams")
    n = len(states)
    log_grad_x = 0j
    log_grad_y = 0j
    ok = True
    prod = 1 + 0j
    for s in states:
        psi, gx, gy = (complex(np.asarray(v)) for v in value_and_gradient(s, x_c, y_c, t))
        if abs(psi) ** 2 <= eps:
            ok = False
            prod = 0j
            continue
        prod *= psi
        log_grad_x += gx / psi
        log_grad_y += gy / psi
    mass = n * params.m
    density = abs(prod) ** 2
    if not ok:
        nan = math.nan
        return FlowSample(density, (0.0, 0.0), (nan, nan), False)
    vx = params.hbar / mass * log_grad_x.imag
    vy = params.hbar / mass * log_grad_y.imag
    return FlowSample(density, (density * vx, density * vy), (vx, vy), density > 0)
