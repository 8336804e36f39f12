import math

import numpy as np
import pytest

from fkdet import heisenberg
from fkdet.determinant import det_polynomial
from fkdet.errors import (
    DegenerateCocycleError,
    FiberFailuresError,
    InputError,
    NotNormalizedError,
    ParseError,
    ZeroPolynomialError,
)
from fkdet.heisenberg import (
    FiberPlan,
    HeisenbergOperator,
    det_heisenberg,
    det_heisenberg_affine,
    fiber_operator,
    fiber_system,
)
from fkdet.lyapunov import SpectrumConfig
from fkdet.polynomials import LaurentPoly1, LaurentPoly2, parse_poly2

from conftest import LOG2

H = HeisenbergOperator.parse
PLAN = FiberPlan(64, SpectrumConfig(10**5))


def test_fiber_operator_examples():
    zeta = np.exp(0.9j)
    f = fiber_operator(H("1 - 2*x"), zeta)
    assert f.coefficient(0).constant_value() == 1 and f.coefficient(1).constant_value() == -2
    f = fiber_operator(H("1 - (y*z)*x"), 1j)
    assert f.coefficient(1).laurent == LaurentPoly1({1: -1j})
    f = fiber_operator(H("1 - z*x^2"), zeta)
    assert f.powers == [0, 2] and f.coefficient(2).constant_value() == pytest.approx(-zeta)
    assert fiber_system(1j).shift[0] == pytest.approx(0.25)
    with pytest.raises(InputError):
        fiber_operator(H("1 - x"), 2.0)


def test_affine_examples():
    assert det_heisenberg_affine(2).log_det == pytest.approx(LOG2, abs=1e-15)
    assert det_heisenberg_affine("y").log_det == 0.0
    assert abs(det_heisenberg_affine("y - 2").log_det - LOG2) < 1e-10
    with pytest.raises(ZeroPolynomialError) as exc:
        det_heisenberg_affine(LaurentPoly2())
    assert exc.value.kind == "zero_polynomial"


def test_affine_skips_vanishing_fibers():
    plan = FiberPlan(8, skip_roots_of_unity=False)
    r = det_heisenberg_affine(parse_poly2("y*z - y"), plan)
    assert r.skipped == [1 + 0j]
    assert np.isnan(r.fiber_values[0])


def test_det_heisenberg_examples():
    assert abs(det_heisenberg(H("1 - 2*x"), PLAN).log_det - LOG2) < 1e-6
    assert abs(det_heisenberg(H("1 - (y - 2)*x"), PLAN).log_det - LOG2) < 1e-2
    assert abs(det_heisenberg(H("1 - 5*x + 6*x^2"), PLAN).log_det - math.log(6)) < 1e-6


def test_route_agreement_degree_one():
    for a in ("y*z + 3", "y - z - 0.3", "2*y^2 - z*y + 0.5"):
        phi = HeisenbergOperator.affine(a)
        lyap = det_heisenberg(phi, PLAN).log_det
        exact = det_heisenberg_affine(a, PLAN).log_det
        assert abs(lyap - exact) < 1e-2


def test_z_independence_collapse():
    phi = H("1 - (y - 2)*x")
    r = det_heisenberg(phi, PLAN)
    assert r.sample_variance < 1e-6
    single = det_polynomial(fiber_operator(phi, PLAN.zetas()[0]), fiber_system(PLAN.zetas()[0]),
                            PLAN.per_fiber).log_det
    assert abs(r.log_det - single) < 1e-3
    a = det_heisenberg_affine("y - 3*y^2 + 0.5")
    assert a.sample_variance < 1e-6


def test_unimodular_twist():
    a = parse_poly2("y - z - 0.3")
    base = det_heisenberg_affine(a).log_det
    for k, m in ((1, 0), (0, 1), (-2, 3)):
        twisted = a * LaurentPoly2({(k, m): 1.0})
        assert abs(det_heisenberg_affine(twisted).log_det - base) < 1e-10


def test_monotone_refinement():
    # random affine elements 1 - a(y, z) x with a bilinear in y, z
    rng = np.random.default_rng(0)
    trials, ok = 100, 0
    for _ in range(trials):
        a = LaurentPoly2({(j, k): complex(rng.normal(), rng.normal()) for j in (0, 1) for k in (0, 1)})
        coarse = det_heisenberg_affine(a, FiberPlan(32))
        fine = det_heisenberg_affine(a, FiberPlan(64))
        ok += abs(fine.log_det - coarse.log_det) < coarse.error_estimate
    assert ok >= 0.95 * trials


def test_parse_and_validation():
    with pytest.raises(ParseError):
        H("x^-1 + 1")
    with pytest.raises(ParseError):
        H("x*y")
    with pytest.raises(InputError):
        HeisenbergOperator({-1: 1})
    with pytest.raises(NotNormalizedError):
        det_heisenberg(H("2 - x"), PLAN)
    with pytest.raises(InputError):
        FiberPlan(4)
    phi = H("1 - (y - 2)*x")
    assert phi.normalized and phi.degree == 1 and not phi.depends_on_z()
    assert phi.affine_symbol() == parse_poly2("y - 2")
    assert H("1 - x^2").affine_symbol() is None


def test_nodes_avoid_roots_of_unity():
    z = FiberPlan(16).zetas()
    assert not np.any(np.isclose(z ** 16, 1.0))
    assert FiberPlan(16, skip_roots_of_unity=False).zetas()[0] == 1


def test_fiber_failure_threshold(monkeypatch):
    real = heisenberg.det_polynomial
    bad = set(range(0, 64, 8))  # 8 of 64 fibers fail: 12.5%

    def flaky(phi, system, cfg):
        k = round((system.shift[0] * 64 - heisenberg.GOLDEN)) % 64
        if k in bad:
            raise DegenerateCocycleError("degenerate_cocycle: injected")
        return real(phi, system, cfg)

    monkeypatch.setattr(heisenberg, "det_polynomial", flaky)
    plan = FiberPlan(64, SpectrumConfig(1000))
    with pytest.raises(FiberFailuresError) as exc:
        det_heisenberg(H("1 - 2*x"), plan)
    assert exc.value.kind == "fiber_failures" and len(exc.value.zetas) == 8

    bad.clear()
    bad.update({5, 40})  # 2 of 64 = 3%: tolerated and reported
    r = det_heisenberg(H("1 - 2*x"), plan)
    assert len(r.failures) == 2 and abs(r.log_det - LOG2) < 1e-6


def test_parallel_is_bit_stable():
    phi = H("1 - (y*z + 3)*x + 0.5*y*x^2")
    plan1 = FiberPlan(16, SpectrumConfig(10**4), threads=1)
    plan4 = FiberPlan(16, SpectrumConfig(10**4), threads=4)
    a, b = det_heisenberg(phi, plan1), det_heisenberg(phi, plan4)
    assert a.log_det == b.log_det
    np.testing.assert_array_equal(a.fiber_values, b.fiber_values)
