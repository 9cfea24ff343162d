import math

import pytest
from hypothesis import given, strategies as st

from ppbvortex.errors import InvalidSpec, NotApplicable
from ppbvortex.patterns import (PatternName, PatternSpec, analytic_loci, basic_flow, build,
                                critical_time, m2_limit, m3_all_roots, m3_equation,
                                m4_count_thresholds, m4_equation, s2_zero_report, solve_m3,
                                solve_m4)
from ppbvortex.vortexscan import ScanWindow


def test_parse_and_invalid_name_lists_presets():
    assert PatternName.parse("m1") is PatternName.M1
    with pytest.raises(InvalidSpec) as exc:
        PatternSpec("S9")
    for name in ("BASIC", "S1", "M4"):
        assert name in str(exc.value)


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        PatternSpec("M4")
    with pytest.raises(InvalidSpec):
        PatternSpec("M4", b=2.0, c=0.7)
    with pytest.raises(InvalidSpec):
        PatternSpec("S1", b=1.0)
    with pytest.raises(InvalidSpec):
        PatternSpec("S2", alpha=7.0)
    with pytest.raises(InvalidSpec):
        PatternSpec("S3", c=-1.0)
    assert PatternSpec("S2").alpha == pytest.approx(math.pi / 2)


def test_s1_closed_form():
    import numpy as np
    x, y = np.meshgrid(np.linspace(-1, 1, 7), np.linspace(-1.2, 0.9, 7))
    c = 0.7
    ref = (4 * x * y * (x * y - c * c) + 2j * (x * x - y * y)) * np.exp(0.5j * (x * x - y * y))
    assert np.allclose(build(PatternSpec("S1", c=c)).value(x, y), ref, atol=1e-13)


def test_s3_closed_form():
    import numpy as np
    x, y = np.meshgrid(np.linspace(-1, 1, 7), np.linspace(-1.2, 0.9, 7))
    c = 0.5
    ref = ((x * y - c * c) * (x * y + c * c) + 0.5j * (x * x - y * y)) \
        * np.exp(0.5j * (x * x - y * y))
    assert np.allclose(build(PatternSpec("S3", c=c)).value(x, y), ref, atol=1e-13)


def test_m1_closed_form_and_switch():
    import numpy as np
    x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    c, t = 1.0, 0.4
    expr = build(PatternSpec("M1", c=c))
    ref = (2 * x * (x * y * y - c**3 * math.exp(-t)) + 1j * (x * x - y * y)) \
        * np.exp(0.5j * (x * x - y * y))
    assert np.allclose(expr.value(x, y, t), ref, atol=1e-13)
    assert np.allclose(expr.value(x, y, -0.1), 0.5 * basic_flow().value(x, y))


def test_m2_limit_is_late_time_flow():
    import numpy as np
    spec = PatternSpec("M2", c=1.0)
    x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    assert np.allclose(build(spec).value(x, y, 40.0), m2_limit(spec).value(x, y), atol=1e-12)


@given(st.floats(1e-3, 50.0))
def test_solve_m3_identities(c_t):
    X, Y = solve_m3(c_t)
    assert 0 < Y < math.pi / 2
    assert abs(X - Y - 2 * c_t * math.sin(Y)) < 1e-12 * (1 + X)
    assert abs(X * Y - c_t * math.cos(Y)) < 1e-10 * (1 + c_t)


def test_solve_m3_small_c_asymptotics():
    c_t = 1e-6
    X, Y = solve_m3(c_t)
    assert X == pytest.approx(math.sqrt(c_t), rel=1e-2)
    assert Y == pytest.approx(math.sqrt(c_t), rel=1e-2)


def test_m3_extra_roots_have_valid_x():
    for X, Y in m3_all_roots(10.0, 16.0):
        assert X >= 0
        assert abs(m3_equation(Y, 10.0)) < 1e-8


def test_solve_m4_small_b():
    sol = solve_m4(0.8)
    assert sol.n == 1 and sol.vortex_count == 4
    tiny = solve_m4(1e-9)
    assert tiny.roots[0][1] == pytest.approx(0.25, abs=1e-6)
    assert tiny.roots[0][0] == pytest.approx(0.25, abs=1e-6)
    for X, Y in solve_m4(30.0).roots:
        assert abs(m4_equation(Y, 30.0)) < 1e-8
        assert 8 * (X - Y) + 30.0 * math.sin(Y) == pytest.approx(0, abs=1e-9)


def test_m4_threshold_oracle():
    th = m4_count_thresholds(14.0)
    kinds = [(lo, hi) for _, lo, hi, _, _ in th]
    assert (1, 0) in kinds and (0, 2) in kinds
    first = [b for b, lo, hi, _, _ in th if (lo, hi) == (1, 0)][0]
    assert first == pytest.approx(1.0, abs=1e-6)


def test_critical_time():
    assert critical_time(PatternSpec("M4", b=math.sqrt(math.e))) == pytest.approx(1.0)
    assert critical_time(PatternSpec("M4", b=2.0)) == pytest.approx(math.log(4.0))
    with pytest.raises(NotApplicable):
        critical_time(PatternSpec("M4", b=0.9))
    with pytest.raises(NotApplicable):
        critical_time(PatternSpec("M1"))


def test_loci_examples():
    assert set(analytic_loci(PatternSpec("S3", c=0.5)).positions) == \
        {(a, b) for a in (0.5, -0.5) for b in (0.5, -0.5)}
    m1 = analytic_loci(PatternSpec("M1", c=1.0), 3.0)
    assert all(abs(abs(p[0]) - math.exp(-1)) < 1e-15 for p in m1.positions)
    m2 = analytic_loci(PatternSpec("M2", c=1.0), 0.0)
    assert set(m2.positions) == {(a, b) for a in (1.0, -1.0) for b in (1.0, -1.0)}
    assert analytic_loci(basic_flow_spec()).degenerate == ((0.0, 0.0),)
    with pytest.raises(NotApplicable):
        analytic_loci(PatternSpec("S2", alpha=1.0))


def basic_flow_spec():
    return PatternSpec("BASIC")


def test_loci_window_filter():
    w = ScanWindow.square(0.6, 16)
    pts = analytic_loci(PatternSpec("S1", c=0.7), 0.0, w).positions
    assert pts == ((0.0, 0.0),)


def test_s2_single_zero_only_at_quarter_turn():
    single, res = s2_zero_report(math.pi / 2, c=0.5)
    assert single
    single, res = s2_zero_report(1.0, c=0.5)
    assert not single
