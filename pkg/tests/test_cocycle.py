import math

import numpy as np
import pytest

from fkdet.cocycle import (
    CrossedProductPolynomial,
    MatrixSymbol,
    ScalarSymbol,
    log_abs_integral,
    matrix_cocycle,
    scalar_cocycle,
)
from fkdet.ergodic import OrbitConfig, finite_cycle, golden_rotation, torus_rotation, GOLDEN
from fkdet.errors import (
    DimensionError,
    InputError,
    ParseError,
    SingularCocycleError,
    SingularMatrixError,
    ZeroSymbolError,
)
from fkdet.polynomials import LaurentPoly1

from conftest import LOG2

G = golden_rotation()


def test_scalar_cocycle_examples():
    c = ScalarSymbol.parse("y - 2")
    w = 0.3
    assert scalar_cocycle(c, G, w, 0) == 1
    assert scalar_cocycle(ScalarSymbol.constant(1.5), G, w, 3) == pytest.approx(1.5 ** 3)
    expected = 1 / c(G.step_inverse(w))
    assert scalar_cocycle(c, G, w, -1) == pytest.approx(expected, rel=1e-14)


def test_scalar_cocycle_relation():
    rng = np.random.default_rng(0)
    c = ScalarSymbol.parse("1.5 + y - 0.3*y^2")
    for _ in range(100):
        w = rng.random()
        i, j = rng.integers(-20, 21, size=2)
        lhs = scalar_cocycle(c, G, w, i + j)
        rhs = scalar_cocycle(c, G, w, i) * scalar_cocycle(c, G, G.iterate(w, int(i)), j)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_scalar_cocycle_singular():
    c = ScalarSymbol.parse("y - 1")
    with pytest.raises(SingularCocycleError) as exc:
        scalar_cocycle(c, finite_cycle(4), 0.5, 3)
    assert exc.value.kind == "singular_cocycle"


def _random_matrix_symbol(rng, n=3):
    grid = []
    for _ in range(n):
        row = []
        for _ in range(n):
            coeffs = rng.normal(size=3) + 1j * rng.normal(size=3)
            row.append(ScalarSymbol.poly(LaurentPoly1.from_coeffs(coeffs)))
        grid.append(row)
    return MatrixSymbol.from_grid(grid)


def test_matrix_cocycle_examples():
    rng = np.random.default_rng(1)
    A = _random_matrix_symbol(rng)
    w = 0.17
    np.testing.assert_array_equal(matrix_cocycle(A, G, w, 0), np.eye(3))
    C = rng.normal(size=(3, 3))
    np.testing.assert_allclose(matrix_cocycle(MatrixSymbol.constant(C), G, w, 4),
                               np.linalg.matrix_power(C, 4), rtol=1e-12)
    np.testing.assert_allclose(matrix_cocycle(A, G, w, 2), A(w) @ A(G.step(w)), rtol=1e-13)


def test_matrix_cocycle_relation_and_inverse():
    rng = np.random.default_rng(2)
    A = MatrixSymbol.from_grid([["2 + y", "0.5"], ["y^-1", "1.5 - 0.2*y"]])
    for _ in range(100):
        w = rng.random()
        m, n = (int(v) for v in rng.integers(-20, 21, size=2))
        lhs = matrix_cocycle(A, G, w, m + n)
        rhs = matrix_cocycle(A, G, w, m) @ matrix_cocycle(A, G, G.iterate(w, m), n)
        assert np.linalg.norm(lhs - rhs, 2) <= 1e-8 * np.linalg.norm(lhs, 2)
    for n in (1, 5, 20):
        w = rng.random()
        prod = matrix_cocycle(A, G, G.iterate(w, n), -n) @ matrix_cocycle(A, G, w, n)
        np.testing.assert_allclose(prod, np.eye(2), atol=1e-8)


def test_matrix_cocycle_singular_inverse():
    A = MatrixSymbol.from_grid([["y - 1", "0"], ["0", "1"]])
    with pytest.raises(SingularMatrixError) as exc:
        matrix_cocycle(A, finite_cycle(4), 0.25, -2)
    assert exc.value.kind == "singular_matrix"
    assert exc.value.step == -1


def test_matrix_cocycle_long_warns():
    A = MatrixSymbol.constant(np.eye(2))
    with pytest.warns(RuntimeWarning):
        matrix_cocycle(A, G, 0.1, 1001)


def test_matrix_symbol_shape_checks():
    with pytest.raises(DimensionError):
        MatrixSymbol(2, ((1, 2),))
    with pytest.raises(DimensionError):
        MatrixSymbol.from_function(lambda p: np.zeros((p.shape[0], 3, 3)), 2).evaluate(np.zeros((4, 1)))


def test_determinant_symbol_exact():
    A = MatrixSymbol.from_grid([["y", "2"], ["1", "y - 3"]])
    det = A.determinant_symbol()
    pts = np.random.default_rng(3).random((50, 1))
    np.testing.assert_allclose(det.evaluate(pts), np.linalg.det(A.evaluate(pts)), atol=1e-12)


def test_symbol_parse_and_builtins():
    assert ScalarSymbol.parse("y - 2").kind == "poly1"
    assert ScalarSymbol.parse("y*z").kind == "poly2"
    assert ScalarSymbol.parse("two_plus_cos").kind == "func"
    with pytest.raises(InputError):
        ScalarSymbol.builtin("nope")


def test_conj_shift_exact_for_polynomials():
    c = ScalarSymbol.parse("(1,2)*y + 3 - y^-2")
    s = c.conj_shift(G, 3)
    pts = np.random.default_rng(4).random((20, 1))
    expected = np.conj(c.evaluate(np.array([G.iterate(p, 3).coords for p in pts[:, 0]])))
    np.testing.assert_allclose(s.evaluate(pts), expected, atol=1e-12)


def test_crossed_product_parse():
    phi = CrossedProductPolynomial.parse("1 - (y - 2)*U + 3*U^-1")
    assert phi.powers == [-1, 0, 1]
    assert phi.low == -1 and phi.high == 1 and phi.degree == 2
    assert phi.coefficient(1).laurent == LaurentPoly1({1: -1, 0: 2})
    with pytest.raises(ParseError):
        CrossedProductPolynomial.parse("U*y")
    assert CrossedProductPolynomial.parse("U - U").is_zero()


def test_log_abs_integral_routes():
    cfg = OrbitConfig(10**5, seed=0)
    assert log_abs_integral(ScalarSymbol.constant(3), G, cfg).value == math.log(3)
    r = log_abs_integral(ScalarSymbol.parse("y - 2"), G, cfg)
    assert r.method == "jensen" and r.value == pytest.approx(LOG2, abs=1e-14)
    # cycle: exact finite average
    r = log_abs_integral(ScalarSymbol.parse("y - 2"), finite_cycle(4), cfg)
    expected = np.mean(np.log(np.abs(np.exp(2j * np.pi * np.arange(4) / 4) - 2)))
    assert r.value == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ZeroSymbolError):
        log_abs_integral(ScalarSymbol.constant(0), G, cfg)


def test_log_abs_integral_clipping_flags():
    # vanishes on a set of positive measure: half the cycle
    f = ScalarSymbol.function(lambda p: np.where(p[:, 0] < 0.5, 0.0, 2.0), "half")
    r = log_abs_integral(f, finite_cycle(4), OrbitConfig(400, start=0.0))
    assert r.clipped_fraction == 0.5 and r.low_confidence
    assert r.value == pytest.approx(0.5 * (-50) + 0.5 * LOG2)


def test_log_abs_integral_birkhoff_builtin():
    # int log(2 + cos 2 pi t) dt = log((2 + sqrt 3)/2)
    r = log_abs_integral(ScalarSymbol.builtin("two_plus_cos"), G, OrbitConfig(10**6, seed=0))
    assert abs(r.value - math.log((2 + math.sqrt(3)) / 2)) < 1e-3


def test_torus_poly2_integral():
    # int log|y*z - 2| over the torus = log 2
    sys2 = torus_rotation((GOLDEN, math.sqrt(2) - 1), irrational=True)
    r = log_abs_integral(ScalarSymbol.parse("y*z - 2"), sys2, OrbitConfig(10**5, seed=0))
    assert abs(r.value - LOG2) < 1e-3
