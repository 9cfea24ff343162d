"""Zero-energy solutions shared by the family of central potentials
``V_a(rho) = -a^2 g_a rho^(2(a-1))``.

The conformal map ``zeta_a = z^a`` (``z = x + i y``) turns the zero-energy
equation for ``V_a`` into the free-particle equation in the ``(u_a, v_a)``
plane with energy ``g_a``.  Writing ``psi = f(u, v) exp(+-i k_a u)`` with
``k_a = sqrt(2 m g_a) / hbar`` leaves

    Lap_a f +- 2 i k_a df/du = 0,

which has polynomial solutions.  For ``a = 2`` and ``g_2 = m gamma^2 / 8`` the
potential is the parabolic barrier and the polynomials coincide with the
products ``H_n^+-(beta x) H_n^-+(beta y)`` of the barrier's zero-energy terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

from . import _fd
from .errors import DomainError, InvalidSpec, NotApplicable, UnsupportedDegree
from .wavefield import MAX_DEGREE, PhysicalParams, _hermite_pair

AXES = ("u", "v")


@dataclass(frozen=True)
class PotentialFamily:
    """``V_a = -a^2 g_a rho^(2(a-1))`` with optional energy shift for ``a = 1``.

    For ``a = 1`` the potential is the constant ``-g_1`` and any real energy can
    be absorbed into ``g_1 + energy``; other members only admit zero energy.
    """

    a: float
    g: float
    energy: float = 0.0
    params: PhysicalParams = field(default_factory=PhysicalParams)

    def __post_init__(self):
        if self.a == 0 or not math.isfinite(self.a):
            raise InvalidSpec(f"a must be finite and nonzero, got {self.a!r}")
        if self.energy != 0 and self.a != 1:
            raise NotApplicable("nonzero energy is only solvable for a = 1")

    @property
    def effective_g(self) -> float:
        return self.g + self.energy

    @property
    def k(self) -> float:
        g = self.effective_g
        if not g > 0:
            raise InvalidSpec(f"k_a needs g_a (+ E) > 0, got {g!r}")
        return math.sqrt(2 * self.params.m * g) / self.params.hbar

    def potential(self, x, y):
        rho2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        return -self.a ** 2 * self.g * rho2 ** (self.a - 1)

    @classmethod
    def ppb(cls, params: PhysicalParams = PhysicalParams()) -> "PotentialFamily":
        """The ``a = 2`` member equal to the barrier ``-m gamma^2 rho^2 / 2``."""
        return cls(2.0, params.m * params.gamma ** 2 / 8, params=params)


@dataclass(frozen=True)
class MappedCoords:
    u: np.ndarray
    v: np.ndarray


def conformal_map(a: float, x, y) -> MappedCoords:
    """``(rho^a cos(a phi), rho^a sin(a phi))`` on the principal branch ``phi in (-pi, pi]``.

    Integer powers are evaluated exactly through complex multiplication. The
    origin is rejected for negative or non-integer ``a``.
    """
    x = np.asarray(x, dtype=np.result_type(x, float))
    y = np.asarray(y, dtype=np.result_type(y, float))
    if a == 0:
        raise InvalidSpec("a must be nonzero")
    integral = float(a).is_integer() and a > 0
    if integral:
        zeta = (x + 1j * y) ** int(a)
        return MappedCoords(zeta.real, zeta.imag)
    rho = np.hypot(x, y)
    if np.any(rho == 0):
        raise DomainError("the origin is a branch point for non-integer or negative a")
    phi = np.arctan2(y, x)
    # arctan2 gives -pi on the negative axis with y = -0.0; fold onto (-pi, pi]
    phi = np.where(phi == -np.pi, np.pi, phi)
    ra = rho ** a
    return MappedCoords(ra * np.cos(a * phi), ra * np.sin(a * phi))


@dataclass(frozen=True)
class ZeroEnergyPolySolution:
    """Polynomial ``f(u, v) = sum coeffs[i, j] u^i v^j`` for axis ``u``.

    For ``axis == "v"`` the roles of ``u`` and ``v`` are swapped everywhere,
    including the plane-wave factor.
    """

    degree: int
    axis: str
    sign: int
    k: float
    coeffs: np.ndarray

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidSpec(f"axis must be 'u' or 'v', got {self.axis!r}")
        if self.sign not in (1, -1):
            raise InvalidSpec(f"sign must be +1 or -1, got {self.sign!r}")
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _along(self, u, v):
        return (u, v) if self.axis == "u" else (v, u)

    def f(self, u, v):
        a, b = self._along(np.asarray(u), np.asarray(v))
        return P.polyval2d(a, b, self.coeffs)

    def f_derivatives(self, u, v):
        """``(f, df/da, d2f/da2 + d2f/db2)`` with ``a`` the propagation axis."""
        a, b = self._along(np.asarray(u), np.asarray(v))
        c = self.coeffs
        da = P.polyder(c, axis=0)
        lap = P.polyder(c, 2, axis=0)
        lap = _pad_add(lap, P.polyder(c, 2, axis=1))
        return (P.polyval2d(a, b, c), P.polyval2d(a, b, da), P.polyval2d(a, b, lap))

    def wave_uv(self, u, v):
        """``f(u, v) exp(+-i k a)`` in the mapped plane."""
        a, _ = self._along(np.asarray(u), np.asarray(v))
        return self.f(u, v) * np.exp(1j * self.sign * self.k * a)

    def eq4_residual(self, u, v):
        """Exact ``|Lap f +- 2 i k df/da|`` from the polynomial coefficients."""
        _, fa, lap = self.f_derivatives(u, v)
        return np.abs(lap + 2j * self.sign * self.k * fa)


def _pad_add(a, b):
    shape = tuple(max(s, t) for s, t in zip(a.shape, b.shape))
    out = np.zeros(shape, dtype=np.result_type(a, b))
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out


def poly_solution(n: int, axis: str = "u", sign: int = 1, k: float = 1.0) -> ZeroEnergyPolySolution:
    """Closed forms ``f_0 = 1``, ``f_1 = 4 k v``, ``f_2 = 4(4 k^2 v^2 + 1 +- 4 i k u)``."""
    if n not in (0, 1, 2):
        raise UnsupportedDegree(f"closed form only for n <= 2, got {n!r}; use ppb_lift")
    c = np.zeros((2, 3), dtype=complex)
    if n == 0:
        c[0, 0] = 1
    elif n == 1:
        c[0, 1] = 4 * k
    else:
        c[0, 0] = 4
        c[0, 2] = 16 * k * k
        c[1, 0] = 16j * sign * k
    return ZeroEnergyPolySolution(n, axis, sign, k, c)


def _hermite_coeffs(n: int, sign: int) -> np.ndarray:
    """Power-series coefficients of ``H_n^s``."""
    prev = np.zeros(1, dtype=complex)
    cur = np.ones(1, dtype=complex)
    for j in range(n):
        nxt = np.zeros(j + 2, dtype=complex)
        nxt[1:] += 2 * cur
        nxt[: len(prev)] -= 2 * j * 1j * sign * prev
        prev, cur = cur, nxt
    return cur


def ppb_lift(n: int, sign: int = 1, k: float = 0.5, axis: str = "u") -> ZeroEnergyPolySolution:
    """Degree-``n`` polynomial ``H_n^s(q x) H_n^-s(q y)``, ``q = sqrt(2k)``, rewritten in ``(u_2, v_2)``.

    The product is expanded in ``z, conj(z)``. Only even powers survive, which
    are then powers of ``zeta = z^2 = u + i v`` and its conjugate.
    """
    if int(n) != n or n < 0 or n > MAX_DEGREE:
        raise UnsupportedDegree(f"ppb_lift supports 0 <= n <= {MAX_DEGREE}, got {n!r}")
    if sign not in (1, -1):
        raise InvalidSpec(f"sign must be +1 or -1, got {sign!r}")
    n = int(n)
    hx = _hermite_coeffs(n, sign)
    hy = _hermite_coeffs(n, -sign)
    deg = 2 * n
    # x = (z + zb)/2, y = (z - zb)/(2i) as polynomials in (z, zb)
    xp = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    yp = np.array([[0, 0.5j], [-0.5j, 0]], dtype=complex)
    zz = np.zeros((deg + 1, deg + 1), dtype=complex)
    xpow = np.ones((1, 1), dtype=complex)
    for p in range(n + 1):
        ypow = np.ones((1, 1), dtype=complex)
        for q in range(n + 1):
            coef = hx[p] * hy[q]
            if coef != 0:
                term = _poly2_mul(xpow, ypow)
                zz[: term.shape[0], : term.shape[1]] += coef * term
            ypow = _poly2_mul(ypow, yp)
        xpow = _poly2_mul(xpow, xp)
    scale = np.abs(zz).max()
    odd = zz[1::2, :].copy(), zz[:, 1::2].copy()
    if max(np.abs(odd[0]).max(initial=0), np.abs(odd[1]).max(initial=0)) > 1e-9 * scale:
        raise AssertionError("product is not a polynomial in z^2")  # pragma: no cover
    zeta = zz[::2, ::2]
    # zeta = u + i v, conj(zeta) = u - i v
    m = n
    uv = np.zeros((m + 1, m + 1), dtype=complex)
    for A in range(zeta.shape[0]):
        for B in range(zeta.shape[1]):
            c = zeta[A, B]
            if c == 0:
                continue
            for r in range(A + 1):
                for s in range(B + 1):
                    # (u + iv)^A (u - iv)^B, choose r v's from the first, s from the second
                    w = comb(A, r) * comb(B, s) * (1j) ** r * (-1j) ** s
                    uv[A - r + B - s, r + s] += c * w
    q2 = 2 * k
    powers = q2 ** (np.arange(m + 1)[:, None] + np.arange(m + 1)[None, :])
    uv = uv * powers
    uv[np.abs(uv) < 1e-12 * np.abs(uv).max()] = 0
    return ZeroEnergyPolySolution(n, axis, sign, k, uv)


def _poly2_mul(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
    for i in range(b.shape[0]):
        for j in range(b.shape[1]):
            if b[i, j] != 0:
                out[i : i + a.shape[0], j : j + a.shape[1]] += b[i, j] * a
    return out


def lift_direct(n: int, sign: int, k: float, u, v):
    """Evaluate the PPB product at ``(x, y) = sqrt(u + i v)`` (principal root).

    Independent of :func:`ppb_lift`'s symbolic expansion; used as its oracle.
    """
    z = np.sqrt(np.asarray(u) + 1j * np.asarray(v))
    q = math.sqrt(2 * k)
    return _hermite_pair(n, sign, q * z.real)[0] * _hermite_pair(n, -sign, q * z.imag)[0]


def corrupted_f1(k: float = 1.0, axis: str = "u", sign: int = 1) -> ZeroEnergyPolySolution:
    """Negative control: ``4 k u`` in place of ``f_1``; not a solution."""
    c = np.zeros((2, 1), dtype=complex)
    c[1, 0] = 4 * k
    return ZeroEnergyPolySolution(1, axis, sign, k, c)


@dataclass(frozen=True)
class ZeroEnergyWave:
    """``f(u_a, v_a) exp(+-i k_a u_a)`` pulled back to the ``(x, y)`` plane."""

    solution: ZeroEnergyPolySolution
    family: PotentialFamily

    def __post_init__(self):
        k = self.family.k
        if not math.isclose(k, self.solution.k, rel_tol=1e-12):
            raise InvalidSpec(f"solution built for k={self.solution.k!r} but family has k={k!r}")

    def value(self, x, y):
        m = conformal_map(self.family.a, x, y)
        return self.solution.wave_uv(m.u, m.v)

    __call__ = value

    def value_and_gradient(self, x, y):
        """Value and ``(d/dx, d/dy)``; the map is holomorphic so ``dzeta/dz = a z^(a-1)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sol = self.solution
        mc = conformal_map(self.family.a, x, y)
        u, v = mc.u, mc.v
        c = sol.coeffs
        a_, b_ = sol._along(u, v)
        phase = np.exp(1j * sol.sign * sol.k * a_)
        f = P.polyval2d(a_, b_, c)
        fa = P.polyval2d(a_, b_, P.polyder(c, axis=0))
        fb = P.polyval2d(a_, b_, P.polyder(c, axis=1))
        d_along = (fa + 1j * sol.sign * sol.k * f) * phase
        d_across = fb * phase
        du, dv = (d_along, d_across) if sol.axis == "u" else (d_across, d_along)
        a = self.family.a
        w = a * (x + 1j * y) ** (a - 1) if float(a).is_integer() and a >= 1 else \
            a * np.exp((a - 1) * np.log(x + 1j * y))
        # u_x = Re w, v_x = Im w, u_y = -Im w, v_y = Re w
        gx = du * w.real + dv * w.imag
        gy = -du * w.imag + dv * w.real
        return f * phase, gx, gy


def zero_energy_wave(sol: ZeroEnergyPolySolution, a: float, g_a: float, x, y,
                     params: PhysicalParams = PhysicalParams(), energy: float = 0.0):
    """Evaluate ``f(u_a, v_a) exp(+-i k_a u_a)`` at ``(x, y)``."""
    return ZeroEnergyWave(sol, PotentialFamily(a, g_a, energy, params)).value(x, y)


def check_pde_residual(sol: ZeroEnergyPolySolution, a: float, g_a: float, points,
                       params: PhysicalParams = PhysicalParams(), energy: float = 0.0,
                       h: float = 1e-3, space: str = "uv") -> float:
    """Max of ``|(-hbar^2/2m) Lap psi - (g_a + E) psi| / (1 + |(g_a + E) psi|)`` over ``points``.

    ``space="uv"`` differentiates in the mapped plane with ``points`` given as
    ``(u, v)`` pairs.  ``space="xy"`` checks the original equation
    ``(-hbar^2/2m) Lap psi + V_a psi = E psi`` at ``(x, y)`` points through the
    map, normalised by ``1 + |V_a psi|``.  Both use a sixth-order stencil in
    extended precision.
    """
    fam = PotentialFamily(a, g_a, energy, params)
    pts = np.asarray(points, dtype=np.longdouble).reshape(-1, 2)
    p, q = pts[:, 0], pts[:, 1]
    hb2m = np.longdouble(params.hbar) ** 2 / (2 * np.longdouble(params.m))
    if space == "uv":
        if not math.isclose(fam.k, sol.k, rel_tol=1e-12):
            raise InvalidSpec("solution k does not match the family")
        g = np.longdouble(fam.effective_g)
        psi = _wave_uv_ld(sol, p, q)
        lap = _fd.laplacian(lambda s, t: _wave_uv_ld(sol, s, t), p, q, h, order=6)
        res = np.abs(-hb2m * lap - g * psi) / (1 + np.abs(g * psi))
    elif space == "xy":
        wave = ZeroEnergyWave(sol, fam)
        f = lambda s, t: _wave_xy_ld(wave, s, t)
        psi = f(p, q)
        lap = _fd.laplacian(f, p, q, h, order=6)
        rho2 = p * p + q * q
        vpsi = -np.longdouble(a) ** 2 * np.longdouble(g_a) * rho2 ** np.longdouble(a - 1) * psi
        res = np.abs(-hb2m * lap + vpsi - np.longdouble(energy) * psi) / (1 + np.abs(vpsi))
    else:
        raise InvalidSpec(f"space must be 'uv' or 'xy', got {space!r}")
    return float(np.max(res))


def _polyval2d_ld(a, b, c):
    # Horner in extended precision; coefficients are exact small numbers
    out = np.zeros(np.broadcast_shapes(np.shape(a), np.shape(b)), dtype=np.clongdouble)
    for i in range(c.shape[0] - 1, -1, -1):
        row = np.zeros_like(out)
        for j in range(c.shape[1] - 1, -1, -1):
            row = row * b + np.clongdouble(c[i, j])
        out = out * a + row
    return out


def _wave_uv_ld(sol, u, v):
    a, b = sol._along(u, v)
    phase = np.exp(np.clongdouble(1j) * sol.sign * np.longdouble(sol.k) * a)
    return _polyval2d_ld(a, b, sol.coeffs) * phase


def _wave_xy_ld(wave, x, y):
    a = wave.family.a
    if float(a).is_integer() and a > 0:
        zeta = (x + np.clongdouble(1j) * y) ** int(a)
        u, v = zeta.real, zeta.imag
    else:
        rho = np.hypot(x, y)
        phi = np.arctan2(y, x)
        u = rho ** np.longdouble(a) * np.cos(np.longdouble(a) * phi)
        v = rho ** np.longdouble(a) * np.sin(np.longdouble(a) * phi)
    return _wave_uv_ld(wave.solution, u, v)
