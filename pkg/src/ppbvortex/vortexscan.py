"""Locate, refine and classify the nodal points of a wave field.

A window is sampled on a regular grid.  Cells where both ``Re psi`` and
``Im psi`` take both signs on the corners, or around which the phase winds,
are grouped into 8-connected clusters.  Each cluster is subdivided and Newton's
method on ``(Re psi, Im psi)`` with analytic Jacobians is started from the
flagged sub-cells.  Distinct roots are classified by the phase winding on two
concentric circles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ContourThroughNode, InvalidSpec, NoConvergence, SingularJacobian
from .hydro import circulation, field_params, value_and_gradient
from .wavefield import WaveExpression

MAX_ITER = 50
ROOT_RTOL = 1e-12
FALLBACK_RTOL = 1e-10
MERGE_DIST = 1e-4
R_OUTER = 0.05
R_INNER = 0.025
SUBDIV = 4
MAX_STARTS_PER_CLUSTER = 64


@dataclass(frozen=True)
class ScanWindow:
    """Rectangular search window sampled with ``grid_n`` cells per axis."""

    x_min: float = -2.0
    x_max: float = 2.0
    y_min: float = -2.0
    y_max: float = 2.0
    grid_n: int = 256

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidSpec("window needs x_min < x_max and y_min < y_max")
        if int(self.grid_n) != self.grid_n or self.grid_n < 16:
            raise InvalidSpec(f"grid_n must be an integer >= 16, got {self.grid_n!r}")

    @classmethod
    def square(cls, half: float = 2.0, grid_n: int = 256, beta: float = 1.0) -> "ScanWindow":
        """``[-half/beta, half/beta]^2``."""
        h = half / beta
        return cls(-h, h, -h, h, grid_n)

    def axes(self):
        xs = np.linspace(self.x_min, self.x_max, self.grid_n + 1)
        ys = np.linspace(self.y_min, self.y_max, self.grid_n + 1)
        return xs, ys

    @property
    def cell(self):
        return ((self.x_max - self.x_min) / self.grid_n, (self.y_max - self.y_min) / self.grid_n)

    def contains(self, x, y, margin: float = 0.0) -> bool:
        return (self.x_min - margin <= x <= self.x_max + margin
                and self.y_min - margin <= y <= self.y_max + margin)


@dataclass(frozen=True)
class Candidate:
    """A cluster of flagged grid cells; ``x, y`` is its lowest-``|psi|`` grid node."""

    x: float
    y: float
    cells: tuple


@dataclass(frozen=True)
class RefinedNode:
    """Output of :func:`refine_node`.

    ``rank`` is the numerical rank of the Jacobian of ``(Re psi, Im psi)``.
    """

    x: float
    y: float
    residual: float
    rank: int
    degenerate: bool
    iterations: int

    @property
    def position(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class Vortex:
    x: float
    y: float
    winding: int
    circulation: float
    residual: float
    t: float
    degenerate: bool = False

    @property
    def position(self):
        return (self.x, self.y)

    kind = "vortex"


@dataclass(frozen=True)
class DipoleNode:
    """Zero with no net winding; ``kind`` is ``"degenerate"`` (rank 0) or ``"dipole_node"``."""

    x: float
    y: float
    residual: float
    t: float
    rank: int
    circulation: float = 0.0
    winding: int = 0

    @property
    def position(self):
        return (self.x, self.y)

    @property
    def kind(self) -> str:
        return "degenerate" if self.rank == 0 else "dipole_node"


@dataclass(frozen=True)
class Rejected:
    x: float
    y: float
    t: float
    reason: str
    windings: tuple = ()

    @property
    def position(self):
        return (self.x, self.y)


@dataclass
class ScanResult:
    vortices: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.vortices)

    def all_zeros(self):
        return sorted(self.vortices + self.nodes, key=lambda v: (v.y, v.x))


def _value(expr, x, y, t):
    if isinstance(expr, WaveExpression):
        return expr.value(x, y, t)
    return value_and_gradient(expr, x, y, t)[0]


def _terms(expr):
    return expr.terms if isinstance(expr, WaveExpression) else None


def _scales(expr, x, y, t):
    """Magnitude of the summands of ``psi`` and of their gradients at the points."""
    terms = _terms(expr)
    if terms is None:
        psi, gx, gy = value_and_gradient(expr, x, y, t)
        return np.abs(psi) + 1.0, np.abs(gx) + np.abs(gy) + 1.0
    s0 = np.zeros(np.shape(x))
    s1 = np.zeros(np.shape(x))
    for term in terms:
        v = term.value(x, y, t)
        gx, gy = term.gradient(x, y, t)
        s0 = s0 + np.abs(v)
        s1 = s1 + np.abs(gx) + np.abs(gy)
    amp = abs(expr.amplitude)
    return amp * s0, amp * s1


def _cell_flags(re, im):
    """Cells whose corners straddle zero in both components, or enclose a phase winding."""
    def straddles(a):
        c = np.stack([a[:-1, :-1], a[1:, :-1], a[1:, 1:], a[:-1, 1:]])
        return (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)

    flags = straddles(re) & straddles(im)
    z = re + 1j * im
    corners = [z[:-1, :-1], z[:-1, 1:], z[1:, 1:], z[1:, :-1]]
    with np.errstate(divide="ignore", invalid="ignore"):
        total = sum(np.angle(corners[(k + 1) % 4] / corners[k]) for k in range(4))
    wind = np.nan_to_num(np.round(total / (2 * np.pi)))
    return flags | (wind != 0)


def scan_nodes(expr, window: ScanWindow, t: float = 0.0) -> list:
    """Candidate clusters of cells that may contain a zero of ``psi``.

    Returns one :class:`Candidate` per 8-connected cluster, ordered by the
    cluster's grid position.
    """
    xs, ys = window.axes()
    # arrays indexed [iy, ix]
    X, Y = np.meshgrid(xs, ys)
    psi = _value(expr, X, Y, t)
    flags = _cell_flags(psi.real, psi.imag)
    labels, n = ndimage.label(flags, structure=np.ones((3, 3), dtype=int))
    out = []
    if n == 0:
        return out
    mag = np.abs(psi)
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        iy, ix = np.nonzero(labels[sl] == lab)
        iy = iy + sl[0].start
        ix = ix + sl[1].start
        # best corner node within the cluster
        best = None
        for cy, cx in zip(iy, ix):
            for dy in (0, 1):
                for dx in (0, 1):
                    m = mag[cy + dy, cx + dx]
                    if best is None or m < best[0]:
                        best = (m, cy + dy, cx + dx)
        _, by, bx = best
        out.append(Candidate(float(xs[bx]), float(ys[by]),
                             tuple(zip(ix.tolist(), iy.tolist()))))
    return out


def _newton_batch(expr, starts, t, max_iter=MAX_ITER):
    """Damped Newton with a multiplicity-adaptive step.

    When successive steps shrink by a roughly constant ratio ``rho`` the
    iteration is converging linearly to a multiple root of multiplicity about
    ``1 / (1 - rho)``; the step is then scaled by that multiplicity (kept only
    if it lowers ``|psi|``).
    """
    p = np.array(starts, dtype=float).reshape(-1, 2)
    k = len(p)
    prev = np.full(k, np.nan)
    active = np.ones(k, dtype=bool)
    iters = np.zeros(k, dtype=int)
    singular = np.zeros(k, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        q = p[idx]
        psi, gx, gy = value_and_gradient(expr, q[:, 0], q[:, 1], t)
        fr, fi = psi.real, psi.imag
        a, b, c, d = gx.real, gy.real, gx.imag, gy.imag
        det = a * d - b * c
        zero = psi == 0
        bad = (det == 0) & ~zero
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = (d * fr - b * fi) / det
            dy = (-c * fr + a * fi) / det
        dx[zero] = 0.0
        dy[zero] = 0.0
        bad |= ~np.isfinite(dx) | ~np.isfinite(dy)
        dx[bad] = 0.0
        dy[bad] = 0.0
        step = np.hypot(dx, dy)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = step / prev[idx]
        mult = np.where((rho > 0.3) & (rho < 0.95), np.rint(1 / (1 - rho)), 1.0)
        mult = np.clip(np.nan_to_num(mult, nan=1.0), 1, 8)
        p1 = q - np.column_stack([dx, dy])
        pm = q - mult[:, None] * np.column_stack([dx, dy])
        use_m = mult > 1
        if np.any(use_m):
            v1 = np.abs(_value(expr, p1[use_m, 0], p1[use_m, 1], t))
            vm = np.abs(_value(expr, pm[use_m, 0], pm[use_m, 1], t))
            better = vm < v1
            sel = np.flatnonzero(use_m)[better]
            p1[sel] = pm[sel]
            step[sel] *= mult[sel]
        p[idx] = p1
        prev[idx] = np.where(step > 0, step, np.nan)
        iters[idx] += 1
        scale = np.maximum(np.hypot(q[:, 0], q[:, 1]), 1.0)
        finished = zero | bad | (step <= 1e-15 * scale) | ~np.isfinite(p1).all(axis=1)
        finished |= np.hypot(p1[:, 0], p1[:, 1]) > 1e6
        singular[idx[bad]] = True
        active[idx[finished]] = False
    return p, iters, singular


def _zoom(expr, p, t, half, levels=40, n=11):
    """Minimise ``|psi|`` by repeated grid search on a shrinking box."""
    x, y = float(p[0]), float(p[1])
    for _ in range(levels):
        g = np.linspace(-half, half, n)
        X, Y = np.meshgrid(x + g, y + g)
        m = np.abs(_value(expr, X, Y, t))
        j = np.unravel_index(np.argmin(m), m.shape)
        x, y = float(X[j]), float(Y[j])
        half /= 5.0
        if half < 1e-14 * max(1.0, abs(x), abs(y)):
            break
    return np.array([x, y])


def _local_rank(expr, x, y, t, rho):
    """Numerical rank of the zero at ``(x, y)`` judged on a circle of radius ``rho``.

    A simple zero is one where the linearisation ``J (dx, dy)`` reproduces
    ``psi`` on the circle to 10%.  Otherwise the zero is degenerate, of rank 0
    when the Jacobian is also negligible against ``psi`` on the circle.
    """
    theta = 2 * np.pi * np.arange(16) / 16
    ex, ey = rho * np.cos(theta), rho * np.sin(theta)
    ring = value_and_gradient(expr, x + ex, y + ey, t)[0]
    _, gx, gy = value_and_gradient(expr, np.array([x]), np.array([y]), t)
    lin = gx[0] * ex + gy[0] * ey
    top = np.max(np.abs(ring))
    if top == 0:
        return 0
    if np.max(np.abs(ring - lin)) < 0.1 * top:
        return 2
    J = np.array([[gx.real[0], gy.real[0]], [gx.imag[0], gy.imag[0]]])
    smax = np.linalg.svd(J, compute_uv=False)[0]
    return 0 if smax * rho < 0.1 * top else 1


def _centroid(expr, x, y, t, half, n=41, rounds=8):
    """Centre of the region where ``|psi|`` is small around a rank-0 zero.

    Weights ``exp(-(|psi|/tau)^2)`` with ``tau`` a quarter of the smallest
    ``|psi|`` on the bounding circle; the box is re-centred on the weighted
    centroid until it stops moving.  The estimate is exact whenever ``|psi|``
    is point-symmetric about the zero, and unlike Newton or ``|psi|``
    minimisation it is not limited by rounding noise in flat directions.
    """
    g = np.linspace(-half, half, n)
    theta = 2 * np.pi * np.arange(64) / 64
    for _ in range(rounds):
        ring = np.abs(_value(expr, x + half * np.cos(theta), y + half * np.sin(theta), t))
        tau = 0.25 * ring.min()
        if tau == 0:
            break
        X, Y = np.meshgrid(x + g, y + g)
        w = np.exp(-(np.abs(_value(expr, X, Y, t)) / tau) ** 2)
        sw = w.sum()
        nx, ny = float((w * X).sum() / sw), float((w * Y).sum() / sw)
        moved = math.hypot(nx - x, ny - y)
        x, y = nx, ny
        if moved <= 1e-15 * max(1.0, abs(x), abs(y)):
            break
    return x, y


def _finish(expr, p, iters, singular, t, beta, fallback_half, rho=None):
    """Turn a Newton end point into a RefinedNode, using the zoom fallback if needed."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        return None
    rho = 0.01 / beta if rho is None else rho
    s0 = _scales(expr, np.array([x]), np.array([y]), t)[0][0]
    res = abs(complex(_value(expr, np.array([x]), np.array([y]), t)[0]))
    if res > ROOT_RTOL * s0 or singular:
        q = _zoom(expr, p, t, fallback_half)
        s0 = _scales(expr, q[:1], q[1:], t)[0][0]
        res_q = abs(complex(_value(expr, q[:1], q[1:], t)[0]))
        if res_q < res or res > ROOT_RTOL * s0:
            x, y, res = float(q[0]), float(q[1]), res_q
        if res > FALLBACK_RTOL * s0:
            return RefinedNode(x, y, res, -1, True, int(iters))
    return _settle(expr, x, y, res, int(iters), t, rho)


def _settle(expr, x, y, res, iters, t, rho, half=None):
    rank = _local_rank(expr, x, y, t, rho)
    if rank == 0:
        x, y = _centroid(expr, x, y, t, 2 * rho if half is None else half)
        res = abs(complex(_value(expr, np.array([x]), np.array([y]), t)[0]))
    return RefinedNode(x, y, res, rank, rank < 2, iters)


def refine_node(expr, guess: Sequence[float], t: float = 0.0, strict: bool = False,
                fallback_half: float | None = None) -> RefinedNode:
    """Newton refinement of a zero of ``psi`` from ``guess``.

    Converges when ``|psi| < 1e-12`` times the summed magnitude of the
    expression's terms.  Degenerate zeros (singular Jacobian) are located by a
    grid-zoom minimisation of ``|psi|`` and flagged.

    Raises
    ------
    NoConvergence
        No zero near the guess.
    SingularJacobian
        Only with ``strict=True``, for a degenerate zero.
    """
    beta = field_params(expr).beta
    if fallback_half is None:
        fallback_half = 0.02 / beta
    p, iters, singular = _newton_batch(expr, [guess], t)
    node = _finish(expr, p[0], iters[0], singular[0], t, beta, fallback_half)
    if node is None or node.rank < 0:
        last = None if node is None else node.position
        raise NoConvergence(f"no zero found near {tuple(guess)}", last_iterate=last,
                            residual=None if node is None else node.residual)
    if strict and node.degenerate:
        raise SingularJacobian(f"degenerate zero at ({node.x!r}, {node.y!r})")
    return node


def classify(expr, node, t: float = 0.0, neighbors: Sequence = (), radius: float | None = None,
             rank: int | None = None, residual: float | None = None):
    """Classify a refined zero by its phase winding on two circles.

    Radii default to ``0.05/beta`` and half that, shrunk to stay below
    ``0.45`` of the distance to the nearest other zero in ``neighbors``.
    The contours treat ``psi`` as vanishing only below ``1e-10`` of the size
    of its summands.  Returns :class:`Vortex`, :class:`DipoleNode` or
    :class:`Rejected`.
    """
    beta = field_params(expr).beta
    if isinstance(node, RefinedNode):
        rank = node.rank if rank is None else rank
        residual = node.residual if residual is None else residual
        degenerate = node.degenerate
        x, y = node.x, node.y
    else:
        x, y = float(node[0]), float(node[1])
        degenerate = False
    if rank is None:
        rank = _local_rank(expr, x, y, t, 0.01 / beta)
        degenerate = rank < 2
    if residual is None:
        residual = abs(complex(_value(expr, np.array([x]), np.array([y]), t)[0]))
    r1 = R_OUTER / beta if radius is None else radius
    for q in neighbors:
        d = math.hypot(q[0] - x, q[1] - y)
        if d > 0:
            r1 = min(r1, 0.45 * d)
    r2 = r1 / 2
    # the phase only needs psi clear of rounding noise, which can sit far below
    # the absolute density floor near a high-order zero
    s0 = float(_scales(expr, np.array([x]), np.array([y]), t)[0][0])
    eps = (1e-10 * s0) ** 2
    c1 = circulation(expr, (x, y), r1, t, eps=eps)
    c2 = circulation(expr, (x, y), r2, t, eps=eps)
    if c1.winding != c2.winding:
        return Rejected(x, y, t, "winding differs between radii", (c1.winding, c2.winding))
    if c2.winding == 0:
        return DipoleNode(x, y, residual, t, min(rank, 1), c2.value)
    return Vortex(x, y, c2.winding, c2.value, residual, t, degenerate)


def _subcell_starts(expr, window, cells, t):
    hx, hy = window.cell
    s = np.arange(SUBDIV + 1) / SUBDIV
    starts = []
    mags = []
    for ix, iy in cells:
        x0 = window.x_min + ix * hx
        y0 = window.y_min + iy * hy
        X, Y = np.meshgrid(x0 + s * hx, y0 + s * hy)
        psi = _value(expr, X, Y, t)
        flags = _cell_flags(psi.real, psi.imag)
        jy, jx = np.nonzero(flags)
        cx = x0 + (jx + 0.5) * hx / SUBDIV
        cy = y0 + (jy + 0.5) * hy / SUBDIV
        if len(cx):
            starts.append(np.column_stack([cx, cy]))
            mags.append(np.abs(_value(expr, cx, cy, t)))
    if not starts:
        return np.zeros((0, 2))
    starts = np.concatenate(starts)
    mags = np.concatenate(mags)
    if len(starts) > MAX_STARTS_PER_CLUSTER:
        starts = starts[np.argsort(mags, kind="stable")[:MAX_STARTS_PER_CLUSTER]]
    return starts


def _merge(nodes, dist):
    kept = []
    for nd in sorted(nodes, key=lambda n: (n.residual, n.y, n.x)):
        if all(math.hypot(nd.x - k.x, nd.y - k.y) >= dist for k in kept):
            kept.append(nd)
    return kept


def find_zeros(expr, window: ScanWindow, t: float = 0.0, diagnostics: list | None = None):
    """Refined distinct zeros inside the window, sorted by ``(y, x)``."""
    beta = field_params(expr).beta
    candidates = scan_nodes(expr, window, t)
    if not candidates:
        return []
    blocks = []
    for cand in candidates:
        starts = _subcell_starts(expr, window, cand.cells, t)
        blocks.append(np.vstack([starts, [[cand.x, cand.y]]]))
    starts = np.concatenate(blocks)
    p, iters, singular = _newton_batch(expr, starts, t)
    hx, hy = window.cell
    fallback = max(hx, hy)
    # skip end points that repeat an earlier one so the fallback runs once per zero
    seen = []
    nodes = []
    failed = 0
    for k in np.lexsort((p[:, 0], p[:, 1])):
        pk = p[k]
        if not np.isfinite(pk).all():
            continue
        if any(math.hypot(pk[0] - q[0], pk[1] - q[1]) < MERGE_DIST / beta for q in seen):
            continue
        seen.append(pk)
        node = _finish(expr, pk, iters[k], singular[k], t, beta, fallback)
        if node is None or node.rank < 0:
            if window.contains(pk[0], pk[1]):
                failed += 1
            continue
        nodes.append(node)
    if failed and diagnostics is not None:
        diagnostics.append(f"t={t!r}: {failed} Newton start(s) did not converge")
    nodes = _merge(nodes, MERGE_DIST / beta)
    # second pass: judge degeneracy on circles that exclude the neighbours
    settled = []
    for nd in nodes:
        d = min((math.hypot(nd.x - o.x, nd.y - o.y) for o in nodes if o is not nd),
                default=math.inf)
        rho = min(0.01 / beta, 0.25 * d)
        # a wide centroid box keeps |psi| well above rounding noise
        half = min(0.05 / beta, 0.4 * d)
        settled.append(_settle(expr, nd.x, nd.y, nd.residual, nd.iterations, t, rho, half))
    nodes = _merge(settled, MERGE_DIST / beta)
    nodes = [n for n in nodes if window.contains(n.x, n.y)]
    return sorted(nodes, key=lambda n: (n.y, n.x))


def enumerate_vortices(expr, window: ScanWindow | None = None, t: float = 0.0) -> ScanResult:
    """Scan, refine and classify every zero in ``window`` at time ``t``.

    Per-node failures are collected in ``diagnostics``; the scan never aborts.
    """
    beta = field_params(expr).beta
    if window is None:
        window = ScanWindow.square(2.0, 256, beta)
    result = ScanResult()
    nodes = find_zeros(expr, window, t, result.diagnostics)
    positions = [n.position for n in nodes]
    for nd in nodes:
        others = [q for q in positions if q != nd.position]
        try:
            rec = classify(expr, nd, t, neighbors=others)
        except ContourThroughNode as exc:
            result.rejected.append(Rejected(nd.x, nd.y, t, str(exc)))
            result.diagnostics.append(f"t={t!r}: {exc}")
            continue
        if isinstance(rec, Vortex):
            result.vortices.append(rec)
        elif isinstance(rec, DipoleNode):
            result.nodes.append(rec)
        else:
            result.rejected.append(rec)
            result.diagnostics.append(f"t={t!r}: rejected ({rec.x!r}, {rec.y!r}): {rec.reason}")
    return result
