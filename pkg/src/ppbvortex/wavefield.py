"""Eigenfunctions of the two-dimensional parabolic potential barrier.

The barrier is ``V = -m gamma^2 (x^2 + y^2) / 2``.  Its separable eigenfunctions
are products of the one-dimensional solutions

    u_n^s(x) = exp(i s beta^2 x^2 / 2) H_n^s(beta x),   beta = sqrt(m gamma / hbar)

with ``s = +1`` (outgoing) or ``s = -1`` (incoming).  Each carries the purely
imaginary eigenvalue ``-i s (n + 1/2) hbar gamma``, so a product term with signs
``(sx, sy)`` decays or grows as ``exp(-(sx (nx + 1/2) + sy (ny + 1/2)) gamma t)``.
Terms with ``sx = -sy`` and ``nx = ny`` have exactly zero energy.

Everything here is vectorised over ``x`` and ``y`` and keeps the floating
precision of its inputs (pass ``np.longdouble`` arrays for extended precision).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np

from . import _fd
from .errors import InvalidSpec, UnsupportedDegree

MAX_DEGREE = 16


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, reduced Planck constant and barrier curvature ``gamma``."""

    m: float = 1.0
    hbar: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("m", "hbar", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidSpec(f"{name} must be positive and finite, got {value!r}")

    @property
    def beta(self) -> float:
        return math.sqrt(self.m * self.gamma / self.hbar)

    def to_dict(self) -> dict:
        return {"m": self.m, "hbar": self.hbar, "gamma": self.gamma}


@dataclass(frozen=True)
class ComplexEnergy:
    """Eigenvalue ``real + i*imag``; a negative ``imag`` means decay."""

    real: float
    imag: float

    @property
    def value(self) -> complex:
        return complex(self.real, self.imag)

    @property
    def is_zero(self) -> bool:
        return self.real == 0 and self.imag == 0

    def time_factor(self, t, hbar: float = 1.0):
        """``exp(-i E t / hbar)``; real when the energy is purely imaginary."""
        growth = np.exp(self.imag * np.asarray(t) / hbar)
        if self.real == 0:
            return growth
        return growth * np.exp(-1j * self.real * np.asarray(t) / hbar)


class SignPair(NamedTuple):
    sx: int
    sy: int

    @property
    def kind(self) -> str:
        if self.sx == self.sy:
            return "diverging" if self.sx > 0 else "converging"
        return "corner"


DIVERGING = SignPair(1, 1)
CONVERGING = SignPair(-1, -1)
CORNER_PM = SignPair(1, -1)
CORNER_MP = SignPair(-1, 1)


def _real_type(*arrays):
    rt = np.result_type(*arrays, np.float64)
    if not np.issubdtype(rt, np.floating):
        rt = np.result_type(rt, np.float64)
    return rt


def _complex_type(rt):
    return np.result_type(rt, np.complex64)


def _check_degree(n):
    if int(n) != n or n < 0:
        raise UnsupportedDegree(f"degree must be a nonnegative integer, got {n!r}")
    if n > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {n} above validated range (max {MAX_DEGREE})")
    return int(n)


def _check_sign(s):
    if s not in (1, -1):
        raise InvalidSpec(f"sign must be +1 or -1, got {s!r}")
    return int(s)


def _hermite_pair(n: int, sign: int, xi):
    """Return ``(H_n^s(xi), H_{n-1}^s(xi))`` with ``H_{-1} = 0``.

    Substituting ``z = exp(-i s pi/4) xi`` into the physicists' recurrence
    ``H_{k+1}(z) = 2 z H_k(z) - 2 k H_{k-1}(z)`` and multiplying through by
    ``exp(i s (k+1) pi/4)`` gives ``H^s_{k+1} = 2 xi H^s_k - 2 k (i s) H^s_{k-1}``,
    which has exact coefficients.
    """
    xi = np.asarray(xi)
    ct = _complex_type(_real_type(xi))
    i_s = np.asarray(1j * sign, dtype=ct)
    prev = np.zeros(xi.shape, dtype=ct)
    cur = np.ones(xi.shape, dtype=ct)
    for k in range(n):
        prev, cur = cur, 2 * xi * cur - 2 * k * i_s * prev
    return cur, prev


def hermite_pm(n: int, sign: int, xi):
    """Rotated Hermite polynomial ``H_n^s(xi) = e^{i s n pi/4} H_n(e^{-i s pi/4} xi)``."""
    n = _check_degree(n)
    sign = _check_sign(sign)
    return _hermite_pair(n, sign, xi)[0]


def u1d(n: int, sign: int, x, params: PhysicalParams = PhysicalParams()):
    """One-dimensional barrier eigenfunction ``exp(i s beta^2 x^2/2) H_n^s(beta x)``."""
    n = _check_degree(n)
    sign = _check_sign(sign)
    x = np.asarray(x)
    rt = _real_type(x)
    bx = np.sqrt(rt.type(params.m) * rt.type(params.gamma) / rt.type(params.hbar)) * x
    ct = _complex_type(rt)
    return np.exp(np.asarray(0.5j * sign, dtype=ct) * bx * bx) * _hermite_pair(n, sign, bx)[0]


def eigenvalue_1d(n: int, sign: int, params: PhysicalParams = PhysicalParams()) -> ComplexEnergy:
    """``-i s (n + 1/2) hbar gamma`` for ``u1d(n, sign)``."""
    n = _check_degree(n)
    sign = _check_sign(sign)
    return ComplexEnergy(0.0, -sign * (n + 0.5) * params.hbar * params.gamma)


@dataclass(frozen=True)
class WaveTerm:
    """``coefficient * theta(t - t0) * U^{sx sy}_{nx ny}(xi, eta) * exp(-i E t / hbar)``.

    ``(xi, eta)`` is ``(x, y)`` rotated by ``alpha``:
    ``xi = cos(a) x + sin(a) y``, ``eta = -sin(a) x + cos(a) y``.
    The step function is right-continuous (active for ``t >= t0``).
    """

    coefficient: complex = 1.0
    nx: int = 0
    ny: int = 0
    signs: SignPair = CORNER_PM
    alpha: float = 0.0
    t0: float = -math.inf
    params: PhysicalParams = field(default_factory=PhysicalParams)

    def __post_init__(self):
        object.__setattr__(self, "nx", _check_degree(self.nx))
        object.__setattr__(self, "ny", _check_degree(self.ny))
        sx, sy = self.signs
        object.__setattr__(self, "signs", SignPair(_check_sign(sx), _check_sign(sy)))
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def decay_number(self) -> float:
        """``sx (nx + 1/2) + sy (ny + 1/2)``; the energy is ``-i`` times this in ``hbar gamma``."""
        sx, sy = self.signs
        return sx * (self.nx + 0.5) + sy * (self.ny + 0.5)

    @property
    def energy(self) -> ComplexEnergy:
        return eigenvalue(self)

    def active(self, t) -> bool:
        return t >= self.t0

    def time_factor(self, t):
        if not self.active(t):
            return 0.0
        rate = self.decay_number
        if rate == 0:
            return 1.0
        return math.exp(-rate * self.params.gamma * t)

    def scaled(self, factor: complex) -> "WaveTerm":
        return replace(self, coefficient=self.coefficient * factor)

    def value(self, x, y, t: float = 0.0):
        return _term_eval(self, x, y, t, want_grad=False)[0]

    def gradient(self, x, y, t: float = 0.0):
        _, gx, gy = _term_eval(self, x, y, t, want_grad=True)
        return gx, gy


def eigenvalue(term: WaveTerm) -> ComplexEnergy:
    """Complex energy of a basis term; independent of rotation and coefficient."""
    rate = term.decay_number
    if rate == 0:
        return ComplexEnergy(0.0, 0.0)
    return ComplexEnergy(0.0, -rate * term.params.hbar * term.params.gamma)


def _term_eval(term: WaveTerm, x, y, t, want_grad: bool):
    x = np.asarray(x)
    y = np.asarray(y)
    rt = _real_type(x, y)
    ct = _complex_type(rt)
    shape = np.broadcast_shapes(x.shape, y.shape)
    tf = term.time_factor(t)
    if tf == 0.0:
        zero = np.zeros(shape, dtype=ct)
        return zero, zero, zero
    p = term.params
    beta = np.sqrt(rt.type(p.m) * rt.type(p.gamma) / rt.type(p.hbar))
    if term.alpha != 0.0:
        ca = np.cos(rt.type(term.alpha))
        sa = np.sin(rt.type(term.alpha))
        xi = ca * x + sa * y
        eta = -sa * x + ca * y
    else:
        xi, eta = x, y
    sx, sy = term.signs
    bx = beta * xi
    by = beta * eta
    hx, hx1 = _hermite_pair(term.nx, sx, bx)
    hy, hy1 = _hermite_pair(term.ny, sy, by)
    half_i = np.asarray(0.5j, dtype=ct)
    phase = np.exp(half_i * (sx * bx * bx + sy * by * by))
    amp = np.asarray(term.coefficient, dtype=ct) * rt.type(tf) * phase
    value = amp * hx * hy
    if not want_grad:
        return np.broadcast_to(value, shape), None, None
    i_ = np.asarray(1j, dtype=ct)
    # d/dxi [exp(i s b^2 xi^2/2) H_n^s(b xi)] = b exp(...) (i s b xi H_n^s + 2 n H_{n-1}^s)
    dpx = beta * (i_ * sx * bx * hx + 2 * term.nx * hx1)
    dpy = beta * (i_ * sy * by * hy + 2 * term.ny * hy1)
    dxi = amp * dpx * hy
    deta = amp * hx * dpy
    if term.alpha != 0.0:
        gx = ca * dxi - sa * deta
        gy = sa * dxi + ca * deta
    else:
        gx, gy = dxi, deta
    return (np.broadcast_to(value, shape), np.broadcast_to(gx, shape),
            np.broadcast_to(gy, shape))


@dataclass(frozen=True)
class WaveExpression:
    """Finite superposition of :class:`WaveTerm` sharing one set of parameters.

    ``amplitude`` is an overall complex factor.  Multiplying an expression by
    a scalar only changes it, so the normalisation never perturbs the relative
    coefficients that the velocity field depends on.
    """

    terms: tuple = ()
    params: PhysicalParams = field(default_factory=PhysicalParams)
    amplitude: complex = 1.0

    def __post_init__(self):
        terms = tuple(self.terms)
        for term in terms:
            if not isinstance(term, WaveTerm):
                raise InvalidSpec(f"not a WaveTerm: {term!r}")
            if term.params != self.params:
                raise InvalidSpec("all terms must share the expression's PhysicalParams")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    def expanded(self) -> tuple:
        """Terms with the overall amplitude folded into their coefficients."""
        if self.amplitude == 1:
            return self.terms
        return tuple(t.scaled(self.amplitude) for t in self.terms)

    @classmethod
    def of(cls, terms: Iterable[WaveTerm], params: PhysicalParams | None = None):
        terms = tuple(terms)
        if params is None:
            params = terms[0].params if terms else PhysicalParams()
        return cls(terms, params)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.expanded())

    def __add__(self, other):
        if isinstance(other, WaveTerm):
            other = WaveExpression((other,), other.params)
        if not isinstance(other, WaveExpression):
            return NotImplemented
        if other.params != self.params:
            raise InvalidSpec("cannot add expressions with different PhysicalParams")
        if self.amplitude == other.amplitude:
            return WaveExpression(self.terms + other.terms, self.params, self.amplitude)
        return WaveExpression(self.expanded() + other.expanded(), self.params)

    def __mul__(self, factor):
        if not isinstance(factor, (int, float, complex, np.number)):
            return NotImplemented
        return WaveExpression(self.terms, self.params, self.amplitude * complex(factor))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def rotated(self, alpha: float) -> "WaveExpression":
        """Same terms evaluated at coordinates rotated by a further ``alpha``."""
        return WaveExpression(tuple(replace(t, alpha=t.alpha + alpha) for t in self.terms),
                              self.params, self.amplitude)

    def activated(self, t0: float) -> "WaveExpression":
        """Every term switched on at ``t0``."""
        return WaveExpression(tuple(replace(t, t0=t0) for t in self.terms), self.params,
                              self.amplitude)

    def value(self, x, y, t: float = 0.0):
        return evaluate(self, x, y, t)

    def gradient(self, x, y, t: float = 0.0):
        return gradient(self, x, y, t)

    def value_and_gradient(self, x, y, t: float = 0.0):
        x = np.asarray(x)
        y = np.asarray(y)
        ct = _complex_type(_real_type(x, y))
        shape = np.broadcast_shapes(x.shape, y.shape)
        v = np.zeros(shape, dtype=ct)
        gx = np.zeros(shape, dtype=ct)
        gy = np.zeros(shape, dtype=ct)
        for term in self.terms:
            tv, tx, ty = _term_eval(term, x, y, t, want_grad=True)
            v = v + tv
            gx = gx + tx
            gy = gy + ty
        if self.amplitude != 1:
            a = np.asarray(self.amplitude, dtype=ct)
            v, gx, gy = a * v, a * gx, a * gy
        return v, gx, gy


def basis_term(nx: int, ny: int, signs=CORNER_PM, coefficient: complex = 1.0,
               params: PhysicalParams | None = None, **kw) -> WaveTerm:
    """Shorthand for ``coefficient * U^{signs}_{nx ny}``."""
    return WaveTerm(coefficient, nx, ny, SignPair(*signs), params=params or PhysicalParams(), **kw)


def evaluate(expr: WaveExpression, x, y, t: float = 0.0):
    """Sum of all active terms at ``(x, y, t)``; zero for an empty expression."""
    x = np.asarray(x)
    y = np.asarray(y)
    ct = _complex_type(_real_type(x, y))
    out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=ct)
    for term in expr.terms:
        out = out + _term_eval(term, x, y, t, want_grad=False)[0]
    if expr.amplitude != 1:
        out = np.asarray(expr.amplitude, dtype=ct) * out
    return out


def gradient(expr: WaveExpression, x, y, t: float = 0.0):
    """Analytic ``(d psi/dx, d psi/dy)``."""
    _, gx, gy = expr.value_and_gradient(x, y, t)
    return gx, gy


def pde_residual(term: WaveTerm, x, y, t: float = 0.0, h: float | None = None,
                 order: int = 6, dtype=np.longdouble):
    """Relative residual of the barrier Schrodinger equation for one term.

    Returns ``|(-hbar^2/2m) Lap psi - V psi - E psi| / (1 + |E psi|)`` with the
    Laplacian from central differences of the given ``order`` and spacing
    ``h`` (default ``1e-3 / beta``), evaluated in ``dtype``.
    """
    p = term.params
    if h is None:
        h = 1e-3 / p.beta
    x = np.asarray(x, dtype=dtype)
    y = np.asarray(y, dtype=dtype)
    rt = _real_type(x, y)

    def f(a, b):
        return _term_eval(term, a, b, t, want_grad=False)[0]

    psi = f(x, y)
    lap = _fd.laplacian(f, x, y, h, order=order)
    m, hbar, gamma = rt.type(p.m), rt.type(p.hbar), rt.type(p.gamma)
    energy = np.asarray(term.energy.value, dtype=psi.dtype)
    lhs = -(hbar * hbar / (2 * m)) * lap - (m * gamma * gamma / 2) * (x * x + y * y) * psi
    res = np.abs(lhs - energy * psi) / (1 + np.abs(energy * psi))
    return res.astype(np.float64)
