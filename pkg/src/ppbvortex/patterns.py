"""Named vortex patterns and their analytic nodal loci.

Stable patterns are superpositions of zero-energy corner-flow terms; the
time-dependent ones switch on a decaying term at ``t = 0``.  With
``X = beta^2 x^2`` and ``Y = beta^2 y^2`` the nodal points of M3 and M4 reduce
to a single transcendental equation in ``Y`` which is solved here by
bracketing and bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, NoRootInInterval, NotApplicable
from .wavefield import (CONVERGING, CORNER_PM, DIVERGING, PhysicalParams, WaveExpression,
                        WaveTerm)

BISECT_TOL = 1e-12
M4_SCAN_STEP = 1e-4


class PatternName(str, enum.Enum):
    BASIC = "BASIC"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"

    @classmethod
    def parse(cls, name) -> "PatternName":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper().replace("-", ""))
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise InvalidSpec(f"unknown pattern {name!r}; valid presets: {valid}") from None


TIME_DEPENDENT = {PatternName.M1, PatternName.M2, PatternName.M3, PatternName.M4}


@dataclass(frozen=True)
class PatternSpec:
    """Parameters of a named pattern.

    ``variant`` flips the sign of ``c^2`` in S1 and selects the converging
    ``U^{--}`` source in M4 when ``-1``.  M4 always uses ``c = 1/2``.
    """

    name: PatternName
    c: float = 0.5
    b: float | None = None
    alpha: float | None = None
    variant: int = 1
    params: PhysicalParams = field(default_factory=PhysicalParams)

    def __post_init__(self):
        name = PatternName.parse(self.name)
        object.__setattr__(self, "name", name)
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidSpec(f"c must be positive and finite, got {self.c!r}")
        if self.variant not in (1, -1):
            raise InvalidSpec(f"variant must be +1 or -1, got {self.variant!r}")
        if self.variant == -1 and name not in (PatternName.S1, PatternName.M4):
            raise InvalidSpec("variant -1 only exists for S1 and M4")
        if name is PatternName.S2:
            if self.alpha is None:
                object.__setattr__(self, "alpha", math.pi / 2)
            if not (0 < self.alpha < 2 * math.pi):
                raise InvalidSpec(f"S2 needs 0 < alpha < 2 pi, got {self.alpha!r}")
        elif self.alpha is not None:
            raise InvalidSpec("alpha only applies to S2")
        if name is PatternName.M4:
            if self.b is None or not (math.isfinite(self.b) and self.b > 0):
                raise InvalidSpec(f"M4 needs a positive b, got {self.b!r}")
            if self.c != 0.5:
                raise InvalidSpec("M4 is defined for c = 1/2 only")
        elif self.b is not None:
            raise InvalidSpec("b only applies to M4")

    @property
    def beta(self) -> float:
        return self.params.beta

    def c_of_t(self, t: float) -> float:
        """``c^2 exp(-gamma t)`` as used by M3."""
        return self.c ** 2 * math.exp(-self.params.gamma * t)

    def b_of_t(self, t: float) -> float:
        """``b^2 exp(-gamma t)`` as used by M4."""
        if self.b is None:
            raise NotApplicable("b(t) only exists for M4")
        return self.b ** 2 * math.exp(-self.params.gamma * t)

    def to_dict(self) -> dict:
        return {"name": self.name.value, "c": self.c, "b": self.b, "alpha": self.alpha,
                "variant": self.variant, "params": self.params.to_dict()}


def _term(spec, coef, nx, ny, signs=CORNER_PM, t0=-math.inf):
    return WaveTerm(coef, nx, ny, signs, t0=t0, params=spec.params)


def basic_flow(params: PhysicalParams = PhysicalParams()) -> WaveExpression:
    """``U_22 / 4 - U_00`` (corner-flow signs), with a non-vortex node at the origin."""
    return WaveExpression((WaveTerm(0.25, 2, 2, CORNER_PM, params=params),
                           WaveTerm(-1.0, 0, 0, CORNER_PM, params=params)), params)


def build(spec: PatternSpec) -> WaveExpression:
    """Wave expression of the pattern; time-dependent terms switch on at ``t = 0``."""
    p = spec.params
    base = basic_flow(p)
    c = spec.c
    name = spec.name
    one = lambda *terms: WaveExpression(terms, p)
    if name is PatternName.BASIC:
        return base
    if name is PatternName.S1:
        return base + one(_term(spec, -spec.variant * c ** 2, 1, 1))
    if name is PatternName.S2:
        s1 = base + one(_term(spec, -spec.variant * c ** 2, 1, 1))
        return s1 + s1.rotated(spec.alpha)
    if name is PatternName.S3:
        return 0.25 * base + one(_term(spec, -c ** 4, 0, 0))
    if name is PatternName.M1:
        return 0.5 * base + one(_term(spec, -c ** 3, 1, 0, t0=0.0))
    if name is PatternName.M2:
        return base + one(_term(spec, -2j * c ** 2, 0, 0, t0=0.0),
                          _term(spec, -c ** 2, 2, 0, t0=0.0))
    if name is PatternName.M3:
        return 0.25 * base + one(_term(spec, -c ** 2, 0, 0, DIVERGING, t0=0.0))
    if name is PatternName.M4:
        source = DIVERGING if spec.variant == 1 else CONVERGING
        s3 = 0.25 * base + one(_term(spec, -c ** 4, 0, 0))
        return 16 * s3 + one(_term(spec, spec.b ** 2, 0, 0, source, t0=0.0))
    raise InvalidSpec(f"unhandled pattern {name!r}")  # pragma: no cover


def m2_limit(spec: PatternSpec) -> WaveExpression:
    """The ``t -> infinity`` limit of M2: ``Phi_B - 2 i c^2 U_00``."""
    return basic_flow(spec.params) + WaveExpression(
        (_term(spec, -2j * spec.c ** 2, 0, 0),), spec.params)


# ---------------------------------------------------------------- root finding

def bisect(f, lo: float, hi: float, tol: float = BISECT_TOL, max_iter: int = 200) -> float:
    """Root of ``f`` in ``[lo, hi]`` given a sign change, to absolute ``tol``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoRootInInterval(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_roots(f, y_max: float, step: float) -> list:
    """All sign changes of a vectorised ``f`` on ``[0, y_max]``, refined by bisection."""
    n = max(int(math.ceil(y_max / step)), 1)
    ys = np.linspace(0.0, n * step, n + 1)
    vals = f(ys)
    roots = []
    sgn = np.sign(vals)
    for k in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
        roots.append(bisect(lambda y: float(f(y)), float(ys[k]), float(ys[k + 1])))
    for k in np.flatnonzero(sgn == 0):
        roots.append(float(ys[k]))
    return sorted(roots)


def m3_equation(Y, c_t):
    """``Y^2 - c cos Y + 2 c Y sin Y``."""
    return Y * Y - c_t * np.cos(Y) + 2 * c_t * Y * np.sin(Y)


def solve_m3(c_t: float) -> tuple:
    """The root ``(X, Y)`` of the M3 nodal equations with ``Y`` in ``(0, pi/2)``.

    ``X = Y + 2 c sin Y`` so that ``X - Y = 2 c sin Y`` holds by construction.
    """
    if not c_t > 0:
        raise InvalidSpec(f"c(t) must be positive, got {c_t!r}")
    Y = bisect(lambda y: m3_equation(y, c_t), 0.0, math.pi / 2)
    if not 0 < Y < math.pi / 2:
        raise NoRootInInterval(f"root {Y!r} not inside (0, pi/2)")
    return Y + 2 * c_t * math.sin(Y), Y


def m3_all_roots(c_t: float, y_max: float, step: float = 1e-4) -> list:
    """Every ``(X, Y)`` with ``0 <= Y <= y_max`` and ``X >= 0``.

    Besides the principal root, large ``c(t)`` admits further roots where
    ``sin Y < 0``; most have ``X < 0`` and give no nodal point.
    """
    out = []
    for Y in _scan_roots(lambda y: m3_equation(y, c_t), y_max, step):
        X = Y + 2 * c_t * math.sin(Y)
        if X >= 0:
            out.append((X, Y))
    return out


def m4_equation(Y, b_t):
    """``1 - b cos Y - 16 Y^2 + 2 b Y sin Y``."""
    return 1 - b_t * np.cos(Y) - 16 * Y * Y + 2 * b_t * Y * np.sin(Y)


@dataclass(frozen=True)
class M4Roots:
    """Roots of the M4 nodal equation at one value of ``b(t)``.

    ``roots`` lists every ``(X, Y)`` with ``Y >= 0``; only those with ``X > 0``
    give nodal points, four each at ``(+-sqrt(X), +-sqrt(Y)) / beta``.
    """

    b_t: float
    roots: tuple

    @property
    def n(self) -> int:
        return len(self.roots)

    @property
    def valid(self) -> tuple:
        return tuple(r for r in self.roots if r[0] > 0)

    @property
    def vortex_count(self) -> int:
        return 4 * len(self.valid)


def solve_m4(b_t: float, step: float = M4_SCAN_STEP) -> M4Roots:
    """All roots ``Y >= 0`` of the M4 equation and ``X = Y - b sin(Y) / 8``.

    Sign changes are located on ``[0, max(1, b/8 + 1)]`` with spacing ``step``
    and bisected to ``1e-12``.  For ``Y > b/8 + 1`` the equation is bounded by
    ``1 + b - 2 Y (8 Y - b) < 1 + b - 16 Y < 0``, so the interval holds every
    root.
    """
    if not b_t > 0:
        raise InvalidSpec(f"b(t) must be positive, got {b_t!r}")
    ys = _scan_roots(lambda y: m4_equation(y, b_t), max(1.0, b_t / 8 + 1), step)
    return M4Roots(b_t, tuple((Y - b_t * math.sin(Y) / 8, Y) for Y in ys))


def critical_time(spec: PatternSpec) -> float:
    """``ln(b^2) / gamma``, when ``b(t)`` passes 1 and four vortices appear at the origin."""
    if spec.name is not PatternName.M4:
        raise NotApplicable("critical time is defined for M4 only")
    if spec.variant != 1:
        raise NotApplicable("the converging M4 variant has no critical time")
    if spec.b <= 1:
        raise NotApplicable(f"b = {spec.b!r} <= 1 never reaches b(t) = 1 at positive time")
    return math.log(spec.b ** 2) / spec.params.gamma


def m4_count_thresholds(b_max: float, b_min: float = 1e-3, step: float = 0.02,
                        tol: float = 1e-9) -> list:
    """Values of ``b(t)`` below ``b_max`` where the M4 root count or vortex count changes.

    Returns ``(b_star, roots_below, roots_above, vortices_below, vortices_above)``
    tuples, ascending in ``b``.  The grid ``step`` must be finer than the
    narrowest regime.
    """
    grid = np.arange(b_min, b_max + step, step)
    def key(b):
        sol = solve_m4(b)
        return sol.n, sol.vortex_count

    out = []
    prev_b, prev_k = grid[0], key(grid[0])
    for b in grid[1:]:
        k = key(b)
        if k != prev_k:
            lo, hi, klo = prev_b, b, prev_k
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if key(mid) == klo:
                    lo = mid
                else:
                    hi = mid
            khi = key(hi)
            out.append((0.5 * (lo + hi), klo[0], khi[0], klo[1], khi[1]))
        prev_b, prev_k = b, k
    return out


# ---------------------------------------------------------------- loci

@dataclass(frozen=True)
class LocusResult:
    """Analytic vortex positions and non-vortex nodes at one time (physical units)."""

    positions: tuple
    degenerate: tuple = ()
    regime: str = ""

    @property
    def count(self) -> int:
        return len(self.positions)


def _quad(X, Y, beta):
    """Four points ``(+-sqrt(X), +-sqrt(Y)) / beta`` without duplicates."""
    sx, sy = math.sqrt(X) / beta, math.sqrt(Y) / beta
    pts = {(a * sx + 0.0, b * sy + 0.0) for a in (1, -1) for b in (1, -1)}
    return tuple(sorted(pts, key=lambda p: (p[1], p[0])))


def _sorted(pts):
    return tuple(sorted(((float(x) + 0.0, float(y) + 0.0) for x, y in pts),
                        key=lambda p: (p[1], p[0])))


def analytic_loci(spec: PatternSpec, t: float = 0.0, window=None) -> LocusResult:
    """Closed-form or root-solved nodal points of the pattern at time ``t``.

    With a ``window`` (anything with ``contains(x, y)``, e.g. a
    :class:`~ppbvortex.vortexscan.ScanWindow`) only points inside it are
    returned; it also bounds the M3 root enumeration.
    """
    res = _loci(spec, t, window)
    if window is None:
        return res
    keep = lambda pts: tuple(p for p in pts if window.contains(*p))
    return LocusResult(keep(res.positions), keep(res.degenerate), res.regime)


def _loci(spec, t, window):
    beta = spec.beta
    c = spec.c
    gamma = spec.params.gamma
    name = spec.name
    origin = ((0.0, 0.0),)
    if name in TIME_DEPENDENT and t < 0:
        # only the stable part is present before the source switches on
        if name is PatternName.M4:
            return LocusResult(_quad(0.25, 0.25, beta), (), "t<0")
        return LocusResult((), origin, "t<0")
    if name is PatternName.BASIC:
        return LocusResult((), origin, "stable")
    if name is PatternName.S1:
        s = spec.variant
        return LocusResult(_sorted([(0, 0), (c / beta, s * c / beta), (-c / beta, -s * c / beta)]),
                           (), "stable")
    if name is PatternName.S2:
        if not math.isclose(math.sin(spec.alpha) ** 2, 1.0, abs_tol=1e-15):
            raise NotApplicable("closed-form S2 zeros only for alpha = pi/2 or 3 pi/2")
        return LocusResult(origin, (), "stable")
    if name is PatternName.S3:
        return LocusResult(_quad(c * c, c * c, beta), (), "stable")
    if name is PatternName.M1:
        x0 = c * math.exp(-gamma * t / 3) / beta
        return LocusResult(_sorted([(x0, -x0), (x0, x0)]), origin, "t>=0")
    if name is PatternName.M2:
        y0 = c * math.exp(-gamma * t) / beta
        return LocusResult(_sorted([(a * c / beta, b * y0) for a in (1, -1) for b in (1, -1)]),
                           origin if t == 0 else (), "t>=0")
    if name is PatternName.M3:
        c_t = spec.c_of_t(t)
        y_max = 4.0 if window is None else max(abs(window.y_min), abs(window.y_max))
        roots = m3_all_roots(c_t, (y_max * beta) ** 2)
        pts = []
        for X, Y in roots:
            pts.extend(_quad(X, Y, beta))
        return LocusResult(_sorted(set(pts)), (), f"c(t)={c_t!r}")
    if name is PatternName.M4:
        if spec.variant != 1:
            raise NotApplicable("no locus oracle for the converging M4 variant")
        b_t = spec.b_of_t(t)
        sol = solve_m4(b_t)
        pts = []
        for X, Y in sol.valid:
            pts.extend(_quad(X, Y, beta))
        if b_t < 1:
            regime = "b(t)<1"
        else:
            regime = f"b(t)>=1, {sol.n} roots"
        return LocusResult(_sorted(set(pts)), (), regime)
    raise InvalidSpec(f"unhandled pattern {name!r}")  # pragma: no cover


def s2_zero_report(alpha: float, c: float = 0.5, window=None, t: float = 0.0):
    """Zeros of S2 found numerically for a given ``alpha``.

    Returns ``(single_zero_at_origin, scan_result)``; the single-zero property
    is checked rather than assumed.
    """
    from .vortexscan import enumerate_vortices

    spec = PatternSpec(PatternName.S2, c=c, alpha=alpha)
    res = enumerate_vortices(build(spec), window, t)
    zeros = res.all_zeros()
    single = len(zeros) == 1 and math.hypot(*zeros[0].position) < 1e-6 / spec.beta
    return single, res
