"""Acceptance criteria 1-11, one printed pass/fail line each.

Criteria 1-10 map onto the verification suites in :mod:`ppbvortex.checks`;
criterion 11 drives the installed command line end to end.
"""

import subprocess
import sys
import time

import pytest

from ppbvortex.checks import run_suite

_cache = {}


def suite(n):
    if n not in _cache:
        _cache[n] = run_suite(n)
    return _cache[n]


def report(capsys, number, title, passed, details):
    worst = [d for d in details if d.startswith("FAIL")] or details[-1:]
    with capsys.disabled():
        print(f"\ncriterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: "
              + "; ".join(d[5:] for d in worst))


CRITERIA = [
    (1, "PDE residual of basis terms n <= 4"),
    (2, "zero-energy solutions and a=2 transport"),
    (3, "stable patterns S1, S3, S2"),
    (4, "M1 positions, windings, empty before switch-on"),
    (5, "M2 positions and limit dipole nodes"),
    (6, "M3 roots, identities and scan agreement"),
    (7, "M4 convergence, regime changes, count steps, tracking"),
    (8, "circulation quantization across presets"),
    (9, "amplitude gauge 3+4i"),
    (10, "centre-of-mass velocity"),
]


@pytest.mark.parametrize("number,title", CRITERIA, ids=[f"criterion_{n}" for n, _ in CRITERIA])
def test_criterion(number, title, capsys):
    res = suite(number)
    report(capsys, number, title, res.passed, res.details)
    if not res.passed:
        pytest.fail("\n".join(res.details), pytrace=False)


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "ppbvortex", *args], cwd=cwd,
                          capture_output=True, text=True)


def test_criterion_11_end_to_end(tmp_path, capsys):
    start = time.perf_counter()
    proc = _cli(["residual"], tmp_path)
    elapsed = time.perf_counter() - start

    commands = [
        ["pattern-eval", "--name", "S1", "--c", "0.7", "--grid", "48", "--out", "{d}/eval.csv"],
        ["pattern-eval", "--name", "M2", "--t", "0.5", "--grid", "32", "--format", "json",
         "--out", "{d}/eval.json"],
        ["vortices", "--name", "S3", "--out", "{d}/vortices.json"],
        ["vortices", "--name", "M1", "--c", "1", "--t", "1", "--format", "csv",
         "--out", "{d}/vortices.csv"],
        ["loci", "--name", "M4", "--b", "4", "--t", "0.1", "--out", "{d}/loci.json"],
        ["track", "--name", "M1", "--c", "1", "--t0", "-0.5", "--t1", "2", "--dt", "0.1",
         "--out", "{d}/m1", "--format", "svg", "--jobs", "2"],
    ]
    runs = []
    for label in ("one", "two"):
        d = tmp_path / label
        d.mkdir()
        for cmd in commands:
            done = _cli([a.format(d=d) for a in cmd], tmp_path)
            assert done.returncode == 0, done.stderr
        runs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    stable = runs[0] == runs[1] and len(runs[0]) == 8

    ok = proc.returncode == 0 and elapsed < 60 and stable
    details = [f"{'ok  ' if proc.returncode == 0 else 'FAIL'} residual exit code: "
               f"{proc.returncode} (limit 0)",
               f"{'ok  ' if elapsed < 60 else 'FAIL'} residual runtime [s]: {elapsed:.1f} "
               f"(limit < 60)",
               f"{'ok  ' if stable else 'FAIL'} outputs byte-stable over two runs: "
               f"{len(runs[0])} files"]
    report(capsys, 11, "residual subcommand and output stability", ok, details)
    if not ok:
        failed = [ln for ln in proc.stdout.splitlines() if "FAIL" in ln]
        pytest.fail("\n".join(details + failed), pytrace=False)
