"""Command-line front end.

Subcommands
-----------
pattern-eval  field snapshot on a grid (CSV or JSON)
vortices      zeros of a pattern with winding and kind (JSON or CSV)
loci          closed-form or root-solved nodal points (JSON)
track         vortex tracks (CSV), lifecycle events (JSON) and an optional SVG
residual      the self-verification suites

Exit codes: 0 ok, 1 suite failure, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, NumericalError, PPBError
from .hydro import flow_field
from .patterns import PatternName, PatternSpec, analytic_loci, build
from .vortexscan import ScanWindow, enumerate_vortices
from .wavefield import PhysicalParams

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
FORMATS = ("csv", "json", "svg")
EVAL_COLUMNS = ("x", "y", "re_psi", "im_psi", "density", "vx", "vy", "valid")
TRACK_COLUMNS = ("track_id", "t", "x", "y", "winding")


@dataclass
class RunConfig:
    """Everything a subcommand needs; mirrors the JSON config file.

    ``window`` is either a half-width (a square centred on the origin, in
    units of ``1/beta``) or ``[x_min, x_max, y_min, y_max]``.
    """

    name: str = "BASIC"
    c: float = 0.5
    b: float | None = None
    alpha: float | None = None
    variant: int = 1
    m: float = 1.0
    hbar: float = 1.0
    gamma: float = 1.0
    window: float | list = 2.0
    grid: int = 256
    t: float = 0.0
    t0: float = -1.0
    t1: float = 6.0
    dt: float = 0.05
    jobs: int = 1
    out: str | None = None
    format: str | None = None
    suites: list | None = None
    corrupt: str | None = None

    def params(self) -> PhysicalParams:
        return PhysicalParams(self.m, self.hbar, self.gamma)

    def pattern(self) -> PatternSpec:
        return PatternSpec(self.name, c=self.c, b=self.b, alpha=self.alpha,
                           variant=self.variant, params=self.params())

    def scan_window(self, grid: int | None = None) -> ScanWindow:
        n = self.grid if grid is None else grid
        beta = self.params().beta
        if isinstance(self.window, (int, float)):
            return ScanWindow.square(float(self.window), n, beta)
        x0, x1, y0, y1 = (float(v) for v in self.window)
        return ScanWindow(x0, x1, y0, y1, n)

    def validate(self) -> "RunConfig":
        self.pattern()
        self.scan_window()
        if self.grid < 2:
            raise InvalidSpec(f"grid must be at least 2, got {self.grid!r}")
        if self.jobs < 1:
            raise InvalidSpec(f"jobs must be at least 1, got {self.jobs!r}")
        if self.format is not None and self.format not in FORMATS:
            raise InvalidSpec(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.corrupt is not None:
            from .checks import CORRUPTIONS
            if self.corrupt not in CORRUPTIONS:
                raise InvalidSpec(f"unknown corruption {self.corrupt!r}; known: {CORRUPTIONS}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidSpec(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidSpec("config file must hold a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------- formatting

def fmt(v) -> str:
    """Shortest round-trip text for numbers; ``-0.0`` is written as ``0.0``."""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v == 0:
        return "0.0"
    return repr(v)


def _clean(obj):
    """JSON-ready copy: NaN becomes null, ``-0.0`` becomes ``0.0``."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return None
        return float(obj) + 0.0
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def dump_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- commands

def cmd_pattern_eval(cfg: RunConfig) -> int:
    spec = cfg.pattern()
    win = cfg.scan_window()
    # --grid counts sample points per axis, endpoints included
    X, Y = np.meshgrid(np.linspace(win.x_min, win.x_max, cfg.grid),
                       np.linspace(win.y_min, win.y_max, cfg.grid))
    expr = build(spec)
    psi = expr.value(X, Y, cfg.t)
    flow = flow_field(expr, X, Y, cfg.t)
    cols = (X, Y, psi.real, psi.imag, flow.density, flow.velocity[0], flow.velocity[1],
            flow.valid)
    rows = zip(*(np.ravel(c) for c in cols))
    if (cfg.format or "csv") == "json":
        text = dump_json([dict(zip(EVAL_COLUMNS, r)) for r in rows])
    elif (cfg.format or "csv") == "csv":
        text = dump_csv(EVAL_COLUMNS, rows)
    else:
        raise InvalidSpec("pattern-eval writes csv or json")
    _emit(text, cfg.out)
    return EXIT_OK


def _zero_records(zeros):
    return [{"x": z.x, "y": z.y, "winding": z.winding, "circulation": z.circulation,
             "kind": z.kind} for z in zeros]


def cmd_vortices(cfg: RunConfig) -> int:
    spec = cfg.pattern()
    res = enumerate_vortices(build(spec), cfg.scan_window(), cfg.t)
    for line in res.diagnostics:
        print(f"warning: {line}", file=sys.stderr)
    for r in res.rejected:
        print(f"warning: rejected zero at ({r.x!r}, {r.y!r}): {r.reason}", file=sys.stderr)
    records = _zero_records(res.all_zeros())
    if (cfg.format or "json") == "json":
        text = dump_json(records)
    elif cfg.format == "csv":
        keys = ("x", "y", "winding", "circulation", "kind")
        text = dump_csv(keys, ([r[k] for k in keys] for r in records))
    else:
        raise InvalidSpec("vortices writes json or csv")
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_loci(cfg: RunConfig) -> int:
    spec = cfg.pattern()
    loc = analytic_loci(spec, cfg.t, cfg.scan_window())
    if cfg.format not in (None, "json"):
        raise InvalidSpec("loci writes json")
    _emit(dump_json({"pattern": spec.name.value, "t": cfg.t, "regime": loc.regime,
                     "positions": [list(p) for p in loc.positions],
                     "degenerate": [list(p) for p in loc.degenerate]}), cfg.out)
    return EXIT_OK


def render_svg(result, window: ScanWindow, size: int = 480) -> str:
    """Static figure of the tracks and events; byte-identical for equal input."""
    pad = 30
    sx = size / (window.x_max - window.x_min)
    sy = size / (window.y_max - window.y_min)
    px = lambda x: f"{pad + (x - window.x_min) * sx:.3f}"
    py = lambda y: f"{pad + (window.y_max - y) * sy:.3f}"
    w = size + 2 * pad
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w + 20}" '
           f'viewBox="0 0 {w} {w + 20}">',
           f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="white" '
           f'stroke="black"/>']
    if window.x_min < 0 < window.x_max:
        out.append(f'<line x1="{px(0)}" y1="{pad}" x2="{px(0)}" y2="{pad + size}" '
                   f'stroke="#ccc"/>')
    if window.y_min < 0 < window.y_max:
        out.append(f'<line x1="{pad}" y1="{py(0)}" x2="{pad + size}" y2="{py(0)}" '
                   f'stroke="#ccc"/>')
    for tr in result.tracks:
        color = "#c0392b" if tr.winding > 0 else "#2471a3"
        pts = " ".join(f"{px(x)},{py(y)}" for _, x, y, _ in tr.samples)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"><title>track {tr.id} winding {tr.winding}</title>'
                   f'</polyline>')
        _, x, y, _ = tr.samples[-1]
        out.append(f'<circle cx="{px(x)}" cy="{py(y)}" r="2.5" fill="{color}"/>')
    for ev in result.events:
        if ev.location is None:
            continue
        x, y = ev.location
        out.append(f'<rect x="{float(px(x)) - 4:.3f}" y="{float(py(y)) - 4:.3f}" width="8" '
                   f'height="8" fill="none" stroke="black"><title>{ev.kind} '
                   f't={fmt(ev.time)}</title></rect>')
    out.append(f'<text x="{pad}" y="{w + 10}" font-family="monospace" font-size="11">'
               f'red: winding +, blue: winding -, squares: events</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_track(cfg: RunConfig) -> int:
    from .tracker import sweep

    spec = cfg.pattern()
    win = cfg.scan_window()
    result = sweep(spec, cfg.t0, cfg.t1, cfg.dt, win, jobs=cfg.jobs)
    for line in result.diagnostics:
        print(f"warning: {line}", file=sys.stderr)
    stem = cfg.out or "track"
    rows = [(tr.id, t, x, y, w) for tr in result.tracks for t, x, y, w in tr.samples]
    Path(f"{stem}_tracks.csv").write_text(dump_csv(TRACK_COLUMNS, rows))
    Path(f"{stem}_events.json").write_text(dump_json([e.to_dict() for e in result.events]))
    written = [f"{stem}_tracks.csv", f"{stem}_events.json"]
    if cfg.format == "svg":
        Path(f"{stem}.svg").write_text(render_svg(result, win))
        written.append(f"{stem}.svg")
    print(f"{len(result.tracks)} tracks, {len(result.events)} events -> {', '.join(written)}",
          file=sys.stderr)
    return EXIT_OK


def cmd_residual(cfg: RunConfig) -> int:
    from .checks import SUITES, run_suite

    numbers = sorted(SUITES) if cfg.suites is None else [int(n) for n in cfg.suites]
    bad = [n for n in numbers if n not in SUITES]
    if bad:
        raise InvalidSpec(f"unknown suites {bad}; available: {sorted(SUITES)}")
    failed = 0
    total = 0.0
    for n in numbers:
        res = run_suite(n, cfg.corrupt)
        total += res.runtime
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] suite {n}: {res.name} ({res.runtime:.2f} s)")
        for line in res.details:
            print(f"    {line}")
        if n == 8 and "max_defect" in res.metrics:
            print(f"    max |circulation/(2 pi hbar/m) - l| across presets: "
                  f"{res.metrics['max_defect']:.3e}")
        failed += not res.passed
    print(f"{len(numbers) - failed}/{len(numbers)} suites passed in {total:.1f} s")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "pattern-eval": cmd_pattern_eval,
    "vortices": cmd_vortices,
    "loci": cmd_loci,
    "track": cmd_track,
    "residual": cmd_residual,
}


# ---------------------------------------------------------------- parsing

def _window_arg(text: str):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window {text!r}") from None
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 4:
        return vals
    raise argparse.ArgumentTypeError("window is a half-width or x_min,x_max,y_min,y_max")


def _suites_arg(text: str):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad suite list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration (overrides --config)")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--write-config", metavar="PATH", help="save the effective config")
    g.add_argument("--name", help=f"pattern: {', '.join(p.value for p in PatternName)}")
    g.add_argument("--c", type=float, help="pattern parameter c (default 0.5)")
    g.add_argument("--b", type=float, help="source strength b (M4 only)")
    g.add_argument("--alpha", type=float, help="rotation angle in radians (S2 only)")
    g.add_argument("--variant", type=int, choices=(1, -1), help="sign variant (S1, M4)")
    g.add_argument("--m", type=float, help="particle mass (default 1)")
    g.add_argument("--hbar", type=float, help="reduced Planck constant (default 1)")
    g.add_argument("--gamma", type=float, help="barrier curvature (default 1)")
    g.add_argument("--t", type=float, help="time of the snapshot (default 0)")
    g.add_argument("--t0", type=float, help="sweep start (default -1)")
    g.add_argument("--t1", type=float, help="sweep end (default 6)")
    g.add_argument("--dt", type=float, help="sweep frame spacing (default 0.05)")
    g.add_argument("--window", type=_window_arg,
                   help="half-width in 1/beta, or x_min,x_max,y_min,y_max (default 2)")
    g.add_argument("--grid", type=int, help="points per axis (default 256)")
    g.add_argument("--jobs", type=int, help="threads for frame scans (default 1)")
    g.add_argument("--out", help="output file, or file stem for track (default stdout)")
    g.add_argument("--format", choices=FORMATS, help="output format")
    g.add_argument("--suites", type=_suites_arg, help="comma-separated suite numbers")
    g.add_argument("--corrupt", help="test hook: break a component on purpose (f1)")

    parser = argparse.ArgumentParser(
        prog="ppbvortex",
        description="Vortices of wavefunctions for the 2D parabolic potential barrier.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("pattern-eval", parents=[common], help="evaluate a pattern on a grid")
    sub.add_parser("vortices", parents=[common], help="list the zeros of a pattern")
    sub.add_parser("loci", parents=[common], help="closed-form or root-solved zeros")
    sub.add_parser("track", parents=[common], help="follow vortices through time")
    sub.add_parser("residual", parents=[common], help="run the verification suites")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.write_config:
            Path(args.write_config).write_text(cfg.dumps())
        return COMMANDS[args.command](cfg)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PPBError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
