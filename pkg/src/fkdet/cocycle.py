"""Symbols over a rotation and the cocycles they generate.

A :class:`ScalarSymbol` is a bounded function on the torus, usually a Laurent
polynomial in ``eta = exp(2 pi i t)``. A :class:`MatrixSymbol` is a square grid
of them, and a :class:`CrossedProductPolynomial` is a finite sum
``sum_i a_i U^i`` with symbol coefficients, where ``U a = (a o gamma) U``.

Matrix products use the row-vector convention ``v -> v A(w)``, so

    A_n(w) = A(w) A(gamma w) ... A(gamma^{n-1} w)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .ergodic import (
    ErgodicSystem,
    OrbitConfig,
    TorusPoint,
    birkhoff_average,
    effective_steps,
    orbit_chunks,
)
from .errors import (
    DimensionError,
    InputError,
    SingularCocycleError,
    SingularMatrixError,
    ZeroSymbolError,
)
from .polynomials import LaurentPoly1, LaurentPoly2, format_poly, log_mahler_jensen, parse_terms

TWO_PI_I = 2j * np.pi


def _exp_cos(points):
    return np.exp(np.cos(2 * np.pi * points[:, 0])).astype(complex)


def _two_plus_cos(points):
    return (2.0 + np.cos(2 * np.pi * points[:, 0])).astype(complex)


def _abs_sin(points):
    return np.abs(np.sin(np.pi * points[:, 0])).astype(complex)


#: named non-polynomial symbols available from the CLI and tests
BUILTINS: dict[str, Callable] = {
    "exp_cos": _exp_cos,
    "two_plus_cos": _two_plus_cos,
    "abs_sin": _abs_sin,
}


@dataclass(frozen=True, eq=False)
class ScalarSymbol:
    """A bounded function ``a(w)`` on the torus.

    ``kind`` is one of ``poly1`` (Laurent polynomial in the first
    coordinate), ``poly2`` (in the first two coordinates), ``func`` (a
    vectorised callable) or ``ratio`` (quotient of two symbols).
    """

    kind: str
    data: object
    descriptor: str = ""

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "ScalarSymbol":
        return cls.poly(LaurentPoly1.constant(c))

    @classmethod
    def poly(cls, p) -> "ScalarSymbol":
        if isinstance(p, LaurentPoly2):
            return cls("poly2", p, format_poly(p.terms, ("y", "z")))
        if not isinstance(p, LaurentPoly1):
            p = LaurentPoly1.constant(p)
        return cls("poly1", p, format_poly({(j,): c for j, c in p.terms.items()}, ("y",)))

    @classmethod
    def function(cls, fn: Callable, descriptor: str = "") -> "ScalarSymbol":
        """Wrap a vectorised callable ``fn(points) -> complex array``."""
        return cls("func", fn, descriptor or getattr(fn, "__name__", "function"))

    @classmethod
    def builtin(cls, name: str) -> "ScalarSymbol":
        try:
            return cls.function(BUILTINS[name], name)
        except KeyError:
            raise InputError(f"unknown built-in symbol {name!r}; have {sorted(BUILTINS)}") from None

    @classmethod
    def parse(cls, text: str) -> "ScalarSymbol":
        text = text.strip()
        if text in BUILTINS:
            return cls.builtin(text)
        terms = parse_terms(text, ("y", "z"))
        if any(k for _, k in terms):
            return cls.poly(LaurentPoly2(terms))
        return cls.poly(LaurentPoly1({j: c for (j, _), c in terms.items()}))

    # structure ----------------------------------------------------------
    @property
    def laurent(self) -> LaurentPoly1 | None:
        return self.data if self.kind == "poly1" else None

    @property
    def is_polynomial(self) -> bool:
        return self.kind in ("poly1", "poly2")

    @property
    def min_dim(self) -> int:
        if self.kind == "poly2":
            return 2
        if self.kind == "ratio":
            return max(s.min_dim for s in self.data)
        return 1

    def is_zero(self) -> bool:
        if self.is_polynomial:
            return self.data.is_zero()
        if self.kind == "ratio":
            return self.data[0].is_zero()
        return False

    def constant_value(self) -> complex | None:
        """The value if the symbol is a polynomial constant, else ``None``."""
        if self.is_polynomial and self.data.is_constant():
            return complex(self.data.terms.get(0, self.data.terms.get((0, 0), 0j)))
        return None

    def is_one(self) -> bool:
        return self.constant_value() == 1

    # evaluation ---------------------------------------------------------
    def evaluate(self, points: np.ndarray, eta: np.ndarray | None = None) -> np.ndarray:
        """Values at an ``(m, dim)`` array of points.

        ``eta`` may pass precomputed ``exp(2 pi i points[:, 0])``.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] < self.min_dim:
            raise DimensionError(f"dimension: symbol {self.descriptor!r} needs {self.min_dim} coordinates")
        if self.kind == "poly1":
            if eta is None:
                eta = np.exp(TWO_PI_I * points[:, 0])
            return self.data(eta)
        if self.kind == "poly2":
            if eta is None:
                eta = np.exp(TWO_PI_I * points[:, 0])
            return self.data(eta, np.exp(TWO_PI_I * points[:, 1]))
        if self.kind == "func":
            return np.asarray(self.data(points), dtype=complex).reshape(points.shape[0])
        num, den = self.data
        return num.evaluate(points, eta) / den.evaluate(points, eta)

    def __call__(self, point) -> complex:
        return complex(self.evaluate(TorusPoint.of(point).as_array()[None, :])[0])

    # algebra ------------------------------------------------------------
    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            other = ScalarSymbol.constant(other)
        if not isinstance(other, ScalarSymbol):
            return NotImplemented
        if self.is_polynomial and other.is_polynomial:
            if self.kind == other.kind == "poly1":
                return ScalarSymbol.poly(self.data * other.data)
            return ScalarSymbol.poly(_to2(self.data) * _to2(other.data))
        if self.kind == "ratio" and other.constant_value() is not None:
            num, den = self.data
            return ScalarSymbol("ratio", (num * other, den), f"({self.descriptor})*{other.descriptor}")
        f, g = self, other
        return ScalarSymbol.function(
            lambda pts: f.evaluate(pts) * g.evaluate(pts), f"({f.descriptor})*({g.descriptor})"
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            other = ScalarSymbol.constant(other)
        c = other.constant_value()
        if c is not None:
            return self * (1.0 / c)
        if self.kind == "ratio":
            num, den = self.data
            return ScalarSymbol("ratio", (num, den * other), f"({self.descriptor})/({other.descriptor})")
        return ScalarSymbol("ratio", (self, other), f"({self.descriptor})/({other.descriptor})")

    def conj_shift(self, system: ErgodicSystem, k: int) -> "ScalarSymbol":
        """The symbol ``w -> conj(a(gamma^k w))``."""
        shift = np.array(system.shift) * k
        if self.kind == "poly1":
            phase = np.exp(TWO_PI_I * shift[0])
            return ScalarSymbol.poly(
                LaurentPoly1({-j: np.conj(c * phase ** j) for j, c in self.data.terms.items()})
            )
        if self.kind == "poly2":
            if system.dim < 2:
                raise DimensionError("dimension: two-variable symbol on a one-dimensional system")
            p1, p2 = np.exp(TWO_PI_I * shift[0]), np.exp(TWO_PI_I * shift[1])
            return ScalarSymbol.poly(
                LaurentPoly2({(-j, -l): np.conj(c * p1 ** j * p2 ** l) for (j, l), c in self.data.terms.items()})
            )
        if self.kind == "ratio":
            num, den = self.data
            return ScalarSymbol("ratio", (num.conj_shift(system, k), den.conj_shift(system, k)),
                                f"conj({self.descriptor})o{k}")
        f = self

        def shifted(pts):
            return np.conj(f.evaluate(np.mod(pts + shift[None, : pts.shape[1]], 1.0)))

        return ScalarSymbol.function(shifted, f"conj({self.descriptor})o{k}")

    def __repr__(self):
        return f"ScalarSymbol({self.kind}: {self.descriptor})"


def _to2(p):
    return p if isinstance(p, LaurentPoly2) else LaurentPoly2.from_poly1(p)


def as_symbol(x) -> ScalarSymbol:
    if isinstance(x, ScalarSymbol):
        return x
    if isinstance(x, (LaurentPoly1, LaurentPoly2)):
        return ScalarSymbol.poly(x)
    if isinstance(x, str):
        return ScalarSymbol.parse(x)
    if callable(x):
        return ScalarSymbol.function(x)
    return ScalarSymbol.constant(x)


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """A map ``A: torus -> M_N(C)`` given entrywise by scalar symbols.

    ``det_hint`` optionally records ``det A`` as a symbol (the companion
    matrix knows its determinant); ``func`` replaces entrywise evaluation by
    a callable returning ``(m, N, N)`` arrays.
    """

    n: int
    entries: tuple = ()
    det_hint: ScalarSymbol | None = None
    func: Callable | None = None
    descriptor: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("dimension: matrix symbols need N >= 1")
        if self.func is None:
            rows = tuple(tuple(as_symbol(e) for e in row) for row in self.entries)
            if len(rows) != self.n or any(len(r) != self.n for r in rows):
                raise DimensionError(f"dimension: expected a {self.n}x{self.n} grid of symbols")
            object.__setattr__(self, "entries", rows)

    @classmethod
    def from_grid(cls, grid, descriptor: str = "") -> "MatrixSymbol":
        grid = [list(row) for row in grid]
        return cls(len(grid), tuple(tuple(r) for r in grid), descriptor=descriptor)

    @classmethod
    def constant(cls, matrix) -> "MatrixSymbol":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        return cls.from_grid([[ScalarSymbol.constant(v) for v in row] for row in m], "constant")

    @classmethod
    def scalar(cls, a) -> "MatrixSymbol":
        a = as_symbol(a)
        return cls(1, ((a,),), det_hint=a, descriptor=a.descriptor)

    @classmethod
    def from_function(cls, fn: Callable, n: int, descriptor: str = "") -> "MatrixSymbol":
        return cls(n, (), func=fn, descriptor=descriptor or "function")

    @property
    def is_constant(self) -> bool:
        return self.func is None and all(e.constant_value() is not None for row in self.entries for e in row)

    def constant_matrix(self) -> np.ndarray | None:
        if not self.is_constant:
            return None
        return np.array([[e.constant_value() for e in row] for row in self.entries], dtype=complex)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Return the ``(m, N, N)`` stack ``A(points[k])``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        m = points.shape[0]
        if self.func is not None:
            out = np.asarray(self.func(points), dtype=complex)
            if out.shape != (m, self.n, self.n):
                raise DimensionError(f"dimension: matrix function returned shape {out.shape}")
            return out
        out = np.empty((m, self.n, self.n), dtype=complex)
        eta = np.exp(TWO_PI_I * points[:, 0])
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                c = e.constant_value()
                if c is not None:
                    out[:, i, j] = c
                else:
                    out[:, i, j] = e.evaluate(points, eta)
        return out

    def __call__(self, point) -> np.ndarray:
        return self.evaluate(TorusPoint.of(point).as_array()[None, :])[0]

    def scaled(self, lam) -> "MatrixSymbol":
        if self.func is not None:
            fn = self.func
            return MatrixSymbol.from_function(lambda pts: lam * fn(pts), self.n, f"{lam}*{self.descriptor}")
        hint = None if self.det_hint is None else self.det_hint * (lam ** self.n)
        rows = tuple(tuple(e * lam for e in row) for row in self.entries)
        return MatrixSymbol(self.n, rows, det_hint=hint, descriptor=f"{lam}*{self.descriptor}")

    def determinant_symbol(self) -> ScalarSymbol | None:
        """``det A`` as a symbol when it can be formed exactly, else ``None``."""
        if self.det_hint is not None:
            return self.det_hint
        if self.func is not None:
            return None
        if not all(e.kind == "poly1" for row in self.entries for e in row):
            return None
        return ScalarSymbol.poly(_poly_det(tuple(tuple(e.data for e in row) for row in self.entries)))


def _poly_det(grid) -> LaurentPoly1:
    n = len(grid)

    @lru_cache(maxsize=None)
    def minor(row, cols):
        if row == n:
            return LaurentPoly1.constant(1.0)
        acc = LaurentPoly1()
        for pos, col in enumerate(cols):
            entry = grid[row][col]
            if entry.is_zero():
                continue
            rest = cols[:pos] + cols[pos + 1:]
            term = entry * minor(row + 1, rest)
            acc = acc - term if pos % 2 else acc + term
        return acc

    return minor(0, tuple(range(n)))


@dataclass(frozen=True, eq=False)
class CrossedProductPolynomial:
    """Finite sum ``sum_i a_i U^i`` with symbol coefficients (``i`` may be negative)."""

    coeffs: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for i, a in dict(self.coeffs).items():
            a = as_symbol(a)
            if not a.is_zero():
                clean[int(i)] = a
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def parse(cls, text: str) -> "CrossedProductPolynomial":
        """Parse ``sum a_i(y, z) * U^i`` with coefficients written left of ``U``."""
        terms = parse_terms(text, ("y", "z", "U"), noncommuting=("U", ("y", "z")))
        grouped: dict = {}
        for (j, k, i), c in terms.items():
            grouped.setdefault(i, {})[(j, k)] = c
        coeffs = {}
        for i, t in grouped.items():
            if any(k for _, k in t):
                coeffs[i] = ScalarSymbol.poly(LaurentPoly2(t))
            else:
                coeffs[i] = ScalarSymbol.poly(LaurentPoly1({j: c for (j, _), c in t.items()}))
        return cls(coeffs)

    @property
    def powers(self) -> list:
        return sorted(self.coeffs)

    @property
    def low(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def high(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    @property
    def degree(self) -> int:
        return self.high - self.low

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i: int) -> ScalarSymbol:
        return self.coeffs.get(i, ScalarSymbol.poly(LaurentPoly1()))

    def shifted(self, k: int) -> "CrossedProductPolynomial":
        """``Phi U^k``: every power moves by ``k``, coefficients unchanged."""
        return CrossedProductPolynomial({i + k: a for i, a in self.coeffs.items()})

    def describe(self) -> str:
        return " + ".join(f"({a.descriptor})*U^{i}" for i, a in sorted(self.coeffs.items())) or "0"

    def __repr__(self):
        return f"CrossedProductPolynomial({self.describe()})"


# ---------------------------------------------------------------------------
# cocycles
# ---------------------------------------------------------------------------

MAX_SAFE_STEPS = 1000


def _orbit_points(system: ErgodicSystem, omega: TorusPoint, steps):
    return np.array([system.iterate(omega, k).coords for k in steps], dtype=float).reshape(-1, system.dim)


def scalar_cocycle(c, system: ErgodicSystem, omega, i: int) -> complex:
    """``c_i(w)``: ``c(w)...c(gamma^{i-1} w)`` for ``i > 0``, inverses for ``i < 0``, 1 at 0."""
    c = as_symbol(c)
    omega = system._check(omega)
    i = int(i)
    if i == 0:
        return 1.0 + 0j
    steps = range(i) if i > 0 else range(i, 0)
    vals = c.evaluate(_orbit_points(system, omega, steps))
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise SingularCocycleError(f"singular_cocycle: c vanishes along the orbit of {omega.coords}")
    return complex(np.prod(vals) if i > 0 else 1.0 / np.prod(vals))


def matrix_cocycle(A: MatrixSymbol, system: ErgodicSystem, omega, n: int,
                   return_cond: bool = False):
    """The ordered product ``A_n(w)`` (identity for ``n = 0``).

    Intended for ``|n| <= 1000``; longer products should go through
    :func:`fkdet.lyapunov.lyapunov_spectrum`. With ``return_cond=True``
    also returns the 2-norm condition number of the result.
    """
    omega = system._check(omega)
    n = int(n)
    if abs(n) > MAX_SAFE_STEPS:
        warnings.warn(f"raw cocycle product over {abs(n)} steps may overflow", RuntimeWarning, stacklevel=2)
    out = np.eye(A.n, dtype=complex)
    if n > 0:
        mats = A.evaluate(_orbit_points(system, omega, range(n)))
        for k in range(n):
            out = out @ mats[k]
    elif n < 0:
        # A(gamma^{-1} w)^{-1} ... A(gamma^n w)^{-1}
        steps = list(range(-1, n - 1, -1))
        mats = A.evaluate(_orbit_points(system, omega, steps))
        for k, mat in zip(steps, mats):
            if np.linalg.cond(mat) > 1e14:
                raise SingularMatrixError(f"singular_matrix: A(gamma^{k} w) is not invertible", step=k)
            out = out @ np.linalg.inv(mat)
    if return_cond:
        return out, float(np.linalg.cond(out))
    return out


# ---------------------------------------------------------------------------
# integrals of log|a|
# ---------------------------------------------------------------------------

#: samples of log|a| below this are clipped (non-polynomial symbols only)
LOG_FLOOR = -50.0
#: clipped fraction above which a Birkhoff estimate is flagged low-confidence
CLIP_ALERT = 1e-3


@dataclass(frozen=True)
class LogIntegral:
    """Value of ``int log|a| dP`` and how it was obtained."""

    value: float
    method: str
    clipped_fraction: float = 0.0
    n_samples: int = 0

    @property
    def low_confidence(self) -> bool:
        return self.clipped_fraction > CLIP_ALERT


def log_abs_integral(a, system: ErgodicSystem, config: OrbitConfig, clip: bool = True) -> LogIntegral:
    """``int log|a(w)| dP(w)`` for the invariant measure of ``system``.

    Polynomials in the circle coordinate go through Jensen's formula (exact);
    quotients split into numerator minus denominator. Anything else is a
    Birkhoff average along ``config``'s orbit, with ``log|a|`` clipped at
    ``LOG_FLOOR`` when ``clip`` is true. Without clipping a zero sample
    raises :class:`~fkdet.errors.SingularSampleError`.
    """
    a = as_symbol(a)
    if a.is_zero():
        raise ZeroSymbolError(f"zero_symbol: {a.descriptor!r} is identically zero")
    c = a.constant_value()
    if c is not None:
        return LogIntegral(math.log(abs(c)), "exact")
    if a.kind == "poly1" and system.is_circle:
        return LogIntegral(log_mahler_jensen(a.data), "jensen")
    if a.kind == "ratio":
        num, den = (log_abs_integral(s, system, config, clip) for s in a.data)
        method = num.method if num.method == den.method else f"{num.method}-{den.method}"
        return LogIntegral(num.value - den.value, method,
                           max(num.clipped_fraction, den.clipped_fraction),
                           max(num.n_samples, den.n_samples))
    if not clip:
        value = birkhoff_average(system, lambda pts: np.log(np.abs(a.evaluate(pts))), config)
        return LogIntegral(value, "birkhoff", 0.0, effective_steps(system, config.n_steps))
    n = effective_steps(system, int(config.n_steps))
    total = 0.0
    clipped = 0
    for pts in orbit_chunks(system, config, n):
        with np.errstate(divide="ignore"):
            vals = np.log(np.abs(a.evaluate(pts)))
        low = ~(vals >= LOG_FLOOR)
        clipped += int(low.sum())
        vals[low] = LOG_FLOOR
        total += math.fsum(vals)
    if clipped == n:
        raise ZeroSymbolError(f"zero_symbol: {a.descriptor!r} vanishes at every sample")
    return LogIntegral(total / n, "birkhoff", clipped / n, n)
