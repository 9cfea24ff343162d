"""Follow vortices through time and report their creation and annihilation.

Every frame is scanned independently.  Vortices in consecutive frames are
associated by minimum total distance inside a gate, with equal winding
required.  When the association leaves vortices unmatched, the frame interval
is bisected until the change is bracketed to ``dt / 64``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidSpec, NotApplicable
from .hydro import field_params
from .patterns import PatternName, PatternSpec, build, critical_time, solve_m4
from .vortexscan import ScanWindow, enumerate_vortices
from .wavefield import WaveExpression

CREATION = "CREATION"
PAIR_ANNIHILATION = "PAIR_ANNIHILATION"
MULTI_ANNIHILATION = "MULTI_ANNIHILATION"
DISAPPEARANCE = "DISAPPEARANCE"
REGIME_CHANGE = "REGIME_CHANGE"
EVENT_KINDS = (PAIR_ANNIHILATION, MULTI_ANNIHILATION, DISAPPEARANCE, CREATION, REGIME_CHANGE)

GATE_MIN = 0.05
BISECTIONS = 6


@dataclass
class VortexTrack:
    """A vortex followed across frames; ``samples`` holds ``(t, x, y, winding)``."""

    id: int
    winding: int
    samples: list = field(default_factory=list)
    birth_event: int | None = None
    death_event: int | None = None
    converging: bool = False
    final_distance: float | None = None

    @property
    def last(self):
        return self.samples[-1]

    def velocity(self) -> float:
        """Speed from the last two samples; zero right after birth."""
        if len(self.samples) < 2:
            return 0.0
        (t0, x0, y0, _), (t1, x1, y1, _) = self.samples[-2], self.samples[-1]
        return math.hypot(x1 - x0, y1 - y0) / (t1 - t0)


@dataclass(frozen=True)
class LifecycleEvent:
    """Event bracketed in ``[t_lo, t_hi]``; ``time`` is the upper end."""

    kind: str
    t_lo: float
    t_hi: float
    participants: tuple = ()
    location: tuple | None = None
    detail: dict = field(default_factory=dict)

    @property
    def time(self) -> float:
        return self.t_hi

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "t_lo": self.t_lo, "t_hi": self.t_hi,
               "participants": list(self.participants)}
        if self.location is not None:
            out["location"] = list(self.location)
        out.update(self.detail)
        return out


@dataclass
class SweepResult:
    tracks: list
    events: list
    frame_times: list
    diagnostics: list = field(default_factory=list)


@dataclass(frozen=True)
class _Assoc:
    matches: tuple
    lost: tuple
    new: tuple
    ambiguous: bool

    @property
    def clean(self) -> bool:
        return not self.lost and not self.new


def _associate(tracks, frame, dt, beta) -> _Assoc:
    """Match live tracks to the vortices of the next frame.

    Pairs must share the winding and lie within ``max(3 v dt, 0.05/beta)``;
    among admissible pairs the total distance is minimised.
    """
    n, m = len(tracks), len(frame)
    if n == 0 or m == 0:
        return _Assoc((), tuple(range(n)), tuple(range(m)), False)
    big = 1e12
    cost = np.full((n, m), big)
    ambiguous = False
    for i, tr in enumerate(tracks):
        _, x, y, w = tr.last
        gate = max(3 * tr.velocity() * dt, GATE_MIN / beta)
        inside = 0
        for j, v in enumerate(frame):
            d = math.hypot(v.x - x, v.y - y)
            if d <= gate and v.winding == w:
                cost[i, j] = d
                inside += 1
        ambiguous |= inside > 1
    rows, cols = linear_sum_assignment(cost)
    matches = tuple((int(i), int(j)) for i, j in zip(rows, cols) if cost[i, j] < big)
    mi = {i for i, _ in matches}
    mj = {j for _, j in matches}
    return _Assoc(matches, tuple(i for i in range(n) if i not in mi),
                  tuple(j for j in range(m) if j not in mj), ambiguous)


def _activation_times(expr):
    return sorted({term.t0 for term in expr.terms if math.isfinite(term.t0)})


def _death_kind(windings, switched: bool) -> str:
    if switched or sum(windings) != 0:
        return DISAPPEARANCE
    return PAIR_ANNIHILATION if len(windings) == 2 else MULTI_ANNIHILATION


def _mean_xy(points):
    return (float(np.mean([p[0] for p in points])) + 0.0,
            float(np.mean([p[1] for p in points])) + 0.0)


def sweep(pattern, t0: float, t1: float, dt: float, window: ScanWindow | None = None,
          jobs: int = 1, bisections: int = BISECTIONS, regime_events: bool = True) -> SweepResult:
    """Track every vortex of ``pattern`` over ``[t0, t1]`` with frame spacing ``dt``.

    ``pattern`` is a :class:`PatternSpec` or a :class:`WaveExpression`.
    Frame scans run on ``jobs`` threads; association and event emission are
    sequential, so the result does not depend on ``jobs``.
    """
    if not t0 < t1:
        raise InvalidSpec(f"need t0 < t1, got {t0!r}, {t1!r}")
    if not dt > 0:
        raise InvalidSpec(f"dt must be positive, got {dt!r}")
    spec = pattern if isinstance(pattern, PatternSpec) else None
    expr = build(spec) if spec is not None else pattern
    if not isinstance(expr, WaveExpression):
        raise InvalidSpec("pattern must be a PatternSpec or WaveExpression")
    beta = field_params(expr).beta
    if window is None:
        window = ScanWindow.square(2.0, 256, beta)
    n_steps = int(math.ceil((t1 - t0) / dt - 1e-9))
    times = [t0 + k * dt for k in range(n_steps)] + [t1]
    switches = _activation_times(expr)

    cache: dict = {}

    def scan(t):
        res = enumerate_vortices(expr, window, t)
        return res.vortices, res.diagnostics

    def frame(t):
        if t not in cache:
            cache[t] = scan(t)
        return cache[t][0]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for t, res in zip(times, pool.map(scan, times)):
                cache[t] = res
    else:
        for t in times:
            cache[t] = scan(t)

    tracks: list = []
    live: list = []
    events: list = []
    diagnostics: list = []
    frame_times = [times[0]]

    def start(v, t):
        tr = VortexTrack(len(tracks), v.winding, [(t, v.x, v.y, v.winding)])
        tracks.append(tr)
        return tr

    for v in frame(times[0]):
        live.append(start(v, times[0]))

    def apply(assoc, t, vortices):
        nonlocal live
        for i, j in assoc.matches:
            v = vortices[j]
            live[i].samples.append((t, v.x, v.y, v.winding))
        survivors = [live[i] for i, _ in sorted(assoc.matches, key=lambda m: m[1])]
        frame_times.append(t)
        return survivors

    for k in range(1, len(times)):
        lo, hi = times[k - 1], times[k]
        while True:
            cur = frame(hi)
            assoc = _associate(live, cur, hi - lo, beta)
            if assoc.ambiguous:
                diagnostics.append(f"ambiguous association in ({lo!r}, {hi!r}]")
            if assoc.clean:
                live = apply(assoc, hi, cur)
                break
            a, b = lo, hi
            for _ in range(bisections):
                mid = 0.5 * (a + b)
                if _associate(live, frame(mid), mid - lo, beta).clean:
                    a = mid
                else:
                    b = mid
            if a != lo:
                fa = frame(a)
                live = apply(_associate(live, fa, a - lo, beta), a, fa)
            fb = frame(b)
            step = _associate(live, fb, b - a, beta)
            switched = any(a < s <= b for s in switches)
            dead = [live[i] for i in step.lost]
            for i, j in step.matches:
                live[i].samples.append((b, fb[j].x, fb[j].y, fb[j].winding))
            survivors = [live[i] for i, _ in step.matches]
            born = []
            for j in sorted(step.new, key=lambda j: (fb[j].y, fb[j].x)):
                born.append(start(fb[j], b))
            if dead:
                kind = _death_kind([tr.winding for tr in dead], switched)
                for tr in dead:
                    tr.death_event = len(events)
                events.append(LifecycleEvent(kind, a, b, tuple(tr.id for tr in dead),
                                             _mean_xy([tr.last[1:3] for tr in dead]),
                                             {"windings": [tr.winding for tr in dead]}))
            if born:
                for tr in born:
                    tr.birth_event = len(events)
                events.append(LifecycleEvent(CREATION, a, b, tuple(tr.id for tr in born),
                                             _mean_xy([tr.last[1:3] for tr in born]),
                                             {"windings": [tr.winding for tr in born]}))
            live = sorted(survivors + born, key=lambda tr: tr.id)
            frame_times.append(b)
            lo = b
            if lo >= hi:
                break

    for t in sorted(cache):
        diagnostics.extend(cache[t][1])
    _flag_converging(live)
    if regime_events and spec is not None and spec.name is PatternName.M4 and spec.variant == 1:
        events.extend(detect_regime_changes(spec, t0, t1))
    order = sorted(range(len(events)),
                   key=lambda i: (events[i].t_hi, EVENT_KINDS.index(events[i].kind), i))
    remap = {old: new for new, old in enumerate(order)}
    events = [events[i] for i in order]
    for tr in tracks:
        if tr.birth_event is not None:
            tr.birth_event = remap[tr.birth_event]
        if tr.death_event is not None:
            tr.death_event = remap[tr.death_event]
    return SweepResult(tracks, events, frame_times, diagnostics)


def _flag_converging(live, window_samples: int = 5):
    """Flag surviving tracks that keep approaching an opposite-winding partner."""
    for tr in live:
        best = None
        for other in live:
            if other is tr or other.winding != -tr.winding:
                continue
            common = sorted(set(s[0] for s in tr.samples) & set(s[0] for s in other.samples))
            if len(common) < 2:
                continue
            ta = {s[0]: s for s in tr.samples}
            tb = {s[0]: s for s in other.samples}
            recent = common[-window_samples:]
            dist = [math.hypot(ta[t][1] - tb[t][1], ta[t][2] - tb[t][2]) for t in recent]
            if best is None or dist[-1] < best[1][-1]:
                best = (other, dist)
        if best is not None:
            dist = best[1]
            tr.converging = all(b < a for a, b in zip(dist, dist[1:]))
            tr.final_distance = dist[-1]


def detect_regime_changes(spec: PatternSpec, t0: float, t1: float, tol: float = 1e-6,
                          b_step: float = 0.02) -> list:
    """Times in ``[max(t0, 0), t1]`` where the number of M4 roots changes.

    Thresholds are found on a grid in ``b(t)`` and bisected until the time
    bracket is narrower than ``tol``.  The final change, at ``b(t) = 1``, is
    reported at the exact critical time; the raw bisection bracket stays in
    ``detail["bracket"]``.
    """
    if spec.name is not PatternName.M4:
        raise NotApplicable("regime changes are defined for M4 only")
    gamma = spec.params.gamma
    ta = max(t0, 0.0)
    if ta >= t1:
        return []
    b_hi, b_lo = spec.b_of_t(ta), spec.b_of_t(t1)
    count = lambda b: solve_m4(b).n
    to_t = lambda b: math.log(spec.b ** 2 / b) / gamma
    n_grid = max(int(math.ceil((b_hi - b_lo) / b_step)), 1)
    grid = np.linspace(b_lo, b_hi, n_grid + 1)
    counts = [count(b) for b in grid]
    try:
        tc = critical_time(spec)
    except NotApplicable:
        tc = None
    out = []
    for k in range(n_grid, 0, -1):
        if counts[k] == counts[k - 1]:
            continue
        lo, hi = float(grid[k - 1]), float(grid[k])
        c_lo, c_hi = counts[k - 1], counts[k]
        # time bracket width is about (hi - lo) / (gamma b)
        while (hi - lo) / (gamma * lo) > 0.5 * tol:
            mid = 0.5 * (lo + hi)
            if count(mid) == c_lo:
                lo = mid
            else:
                hi = mid
        t_lo, t_hi = to_t(hi), to_t(lo)
        detail = {"b_t": 0.5 * (lo + hi), "roots_before": c_hi, "roots_after": c_lo,
                  "bracket": [t_lo, t_hi]}
        if tc is not None and t_lo - tol <= tc <= t_hi + tol:
            t_lo = t_hi = tc
        out.append(LifecycleEvent(REGIME_CHANGE, t_lo, t_hi, (), None, detail))
    return out
