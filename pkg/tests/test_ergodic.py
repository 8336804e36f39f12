import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkdet.ergodic import (
    GOLDEN,
    OrbitConfig,
    OrbitStream,
    TorusPoint,
    birkhoff_average,
    circle_rotation,
    finite_cycle,
    golden_rotation,
    parse_system,
    torus_rotation,
)
from fkdet.errors import DimensionError, InputError, SingularSampleError
from fkdet.polynomials import LaurentPoly1, log_mahler_jensen


def test_torus_point_rejects_out_of_range():
    with pytest.raises(InputError):
        TorusPoint((1.0,))
    with pytest.raises(InputError):
        TorusPoint((-0.1,))


def test_step_examples():
    assert circle_rotation(0.25).step(0.5).coords == (0.75,)
    assert finite_cycle(4).step(0.75).coords == (0.0,)


def test_rational_rotation_is_periodic():
    s = circle_rotation(3 / 8)
    assert s.iterate(0.125, 8).coords[0] == pytest.approx(0.125, abs=1e-15)


def test_step_dimension_mismatch():
    with pytest.raises(DimensionError) as exc:
        circle_rotation(0.25).step((0.1, 0.2))
    assert exc.value.kind == "dimension"


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_step_then_inverse_returns(angle, t):
    s = circle_rotation(angle)
    back = s.step_inverse(s.step(t)).coords[0]
    # mod-1 arithmetic: equal up to one ulp, possibly across the 0/1 seam
    d = abs(back - t)
    assert min(d, 1 - d) < 1e-15


def test_finite_cycle_period_exact():
    q = 7
    orbit = finite_cycle(q).orbit(3 / 7, 3 * q)
    np.testing.assert_array_equal(orbit[:q], orbit[q:2 * q])
    np.testing.assert_array_equal(orbit[:q], orbit[2 * q:])


def test_birkhoff_constant():
    for system in (golden_rotation(), finite_cycle(5), torus_rotation((0.3, GOLDEN))):
        cfg = OrbitConfig(1000, seed=3)
        assert birkhoff_average(system, lambda p: np.full(p.shape[0], 2.5), cfg) == pytest.approx(2.5, abs=1e-15)


def test_birkhoff_finite_cycle_mean():
    cfg = OrbitConfig(1001, start=0.0)
    assert birkhoff_average(finite_cycle(2), lambda p: p[:, 0], cfg) == 0.25


def test_birkhoff_log_against_jensen():
    # oracle: Jensen on eta - 2
    oracle = log_mahler_jensen(LaurentPoly1({1: 1, 0: -2}))
    f = lambda p: np.log(np.abs(np.exp(2j * np.pi * p[:, 0]) - 2))
    value = birkhoff_average(golden_rotation(), f, OrbitConfig(10**6, seed=1))
    assert abs(value - oracle) < 1e-3


def test_birkhoff_singular_sample_reports_point():
    f = lambda p: np.log(np.abs(p[:, 0] - 0.5))
    with np.errstate(divide="ignore"), pytest.raises(SingularSampleError) as exc:
        birkhoff_average(finite_cycle(4), f, OrbitConfig(8, start=0.0))
    assert exc.value.kind == "singular_sample"
    assert exc.value.point.coords == (0.5,)


def test_equidistribution_ks():
    pts = np.sort(golden_rotation().orbit(0.1, 10**6)[:, 0])
    n = pts.size
    ecdf_hi = np.arange(1, n + 1) / n
    ks = max(np.max(ecdf_hi - pts), np.max(pts - np.arange(n) / n))
    assert ks < 0.005


def test_birkhoff_shift_invariance_bound():
    s = golden_rotation()
    f = lambda p: np.cos(2 * np.pi * p[:, 0]) + 0.5 * np.sin(6 * np.pi * p[:, 0])
    sup = 1.5
    n = 5000
    w0 = TorusPoint((0.3,))
    a = birkhoff_average(s, f, OrbitConfig(n, start=w0))
    b = birkhoff_average(s, f, OrbitConfig(n, start=s.step(w0)))
    assert abs(a - b) <= 2 * sup / n


def test_exact_orbit_matches_accumulated():
    s = golden_rotation()
    a = s.orbit(0.2, 10**5)
    b = s.orbit(0.2, 10**5, exact=True)
    d = np.abs(a - b)
    d = np.minimum(d, 1 - d)
    assert d.max() < 10**5 * np.finfo(float).eps * 4


def test_stream_chunks_match_single_take():
    s = golden_rotation()
    one = OrbitStream(s, TorusPoint((0.4,))).take(1000)
    st_ = OrbitStream(s, TorusPoint((0.4,)))
    parts = np.concatenate(list(st_.chunks(1000, size=77)))
    np.testing.assert_array_equal(one, parts)


def test_seeded_start_deterministic():
    s = golden_rotation()
    assert OrbitConfig(10, seed=5).resolve_start(s) == OrbitConfig(10, seed=5).resolve_start(s)
    assert OrbitConfig(10, seed=5).resolve_start(s) != OrbitConfig(10, seed=6).resolve_start(s)


def test_flags_and_parse():
    assert golden_rotation().uniquely_ergodic
    assert not circle_rotation(GOLDEN).uniquely_ergodic
    assert parse_system("rot:golden").shift == (GOLDEN,)
    assert parse_system("rot:0.25").shift == (0.25,)
    assert parse_system("cycle:6").length == 6
    for bad in ("rot:x", "cycle:a", "foo:1", "rot:1.5"):
        with pytest.raises(InputError):
            parse_system(bad)


def test_config_validation():
    with pytest.raises(InputError):
        OrbitConfig(0)
    with pytest.raises(InputError):
        OrbitConfig(10, burn_in=-1)


def test_inverse_system():
    s = circle_rotation(0.25)
    assert s.inverse().step(s.step(0.5)).coords == (0.5,)
    assert math.isclose(finite_cycle(3).inverse().shift[0], 2 / 3)
