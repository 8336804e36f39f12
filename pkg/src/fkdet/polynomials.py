"""Laurent polynomials on one and two circles and their Mahler measures.

``log_mahler_jensen`` evaluates ``int log|p| dmu`` over the unit circle from
the roots of ``p``; ``log_mahler_quadrature`` is the independent check by an
equi-angle rule. The module also holds the small parser for the polynomial
text format used on the command line::

    1 - 2*y + (0,1)*y^2*z^-1
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DegenerateQuadratureError,
    InputError,
    ParseError,
    ZeroPolynomialError,
)

#: roots closer than this to the unit circle are treated as lying on it
CIRCLE_TOL = 1e-10
#: relative size below which a coefficient produced by cancellation is dropped
CANCEL_TOL = 1e-14


def _clean(terms: Mapping) -> dict:
    return {k: complex(v) for k, v in terms.items() if complex(v) != 0}


class LaurentPoly1:
    """Finite sum ``sum_j c_j eta^j`` with integer (possibly negative) ``j``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, complex] | None = None):
        self._terms = {int(j): c for j, c in _clean(terms or {}).items()}

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "LaurentPoly1":
        return cls({0: c})

    @classmethod
    def monomial(cls, j: int, c=1.0) -> "LaurentPoly1":
        return cls({j: c})

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[complex], low: int = 0) -> "LaurentPoly1":
        """Build from ascending coefficients ``c_low, c_low+1, ...``."""
        return cls({low + m: c for m, c in enumerate(coeffs)})

    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead=1.0) -> "LaurentPoly1":
        p = cls.constant(lead)
        for r in roots:
            p = p * cls({1: 1.0, 0: -complex(r)})
        return p

    # structure ----------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def low(self) -> int:
        return min(self._terms) if self._terms else 0

    @property
    def high(self) -> int:
        return max(self._terms) if self._terms else 0

    @property
    def degree(self) -> int:
        """Width ``high - low`` of the exponent support."""
        return self.high - self.low

    def coeff(self, j: int) -> complex:
        return self._terms.get(j, 0j)

    def dense(self) -> np.ndarray:
        """Ascending coefficients of the monomial-normalised polynomial."""
        out = np.zeros(self.degree + 1, dtype=complex)
        for j, c in self._terms.items():
            out[j - self.low] = c
        return out

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def is_constant(self) -> bool:
        return all(j == 0 for j in self._terms)

    # evaluation ---------------------------------------------------------
    def __call__(self, eta):
        eta = np.asarray(eta, dtype=complex)
        if not self._terms:
            return np.zeros_like(eta)
        c = self.dense()
        acc = np.full_like(eta, c[-1])
        for a in c[-2::-1]:
            acc = acc * eta + a
        if self.low:
            acc = acc * eta ** self.low
        return acc

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _as_poly1(other)
        out = dict(self._terms)
        for j, c in other._terms.items():
            out[j] = out.get(j, 0) + c
        return LaurentPoly1(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly1({j: -c for j, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly1(other))

    def __rsub__(self, other):
        return _as_poly1(other) - self

    def __mul__(self, other):
        other = _as_poly1(other)
        if self.is_zero() or other.is_zero():
            return LaurentPoly1()
        c = np.convolve(self.dense(), other.dense())
        return LaurentPoly1.from_coeffs(c, self.low + other.low)

    __rmul__ = __mul__

    def shift(self, k: int) -> "LaurentPoly1":
        """Multiply by ``eta^k``."""
        return LaurentPoly1({j + k: c for j, c in self._terms.items()})

    def conj_reversed(self) -> "LaurentPoly1":
        """``conj(p)(1/eta) * eta^deg``; same modulus on the circle."""
        return LaurentPoly1({self.high + self.low - j: np.conj(c) for j, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = LaurentPoly1.constant(other)
        if not isinstance(other, LaurentPoly1):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"LaurentPoly1({format_poly({(j,): c for j, c in self._terms.items()}, ('y',))!r})"


def _as_poly1(x) -> LaurentPoly1:
    if isinstance(x, LaurentPoly1):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return LaurentPoly1.constant(x)
    raise TypeError(f"cannot combine LaurentPoly1 with {type(x).__name__}")


class LaurentPoly2:
    """Finite sum ``sum c_jk eta^j zeta^k`` in the variables ``y`` and ``z``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple, complex] | None = None):
        self._terms = {(int(j), int(k)): c for (j, k), c in _clean(terms or {}).items()}

    @classmethod
    def constant(cls, c) -> "LaurentPoly2":
        return cls({(0, 0): c})

    @classmethod
    def from_poly1(cls, p: LaurentPoly1) -> "LaurentPoly2":
        return cls({(j, 0): c for j, c in p.terms.items()})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(jk == (0, 0) for jk in self._terms)

    def depends_on_z(self) -> bool:
        return any(k != 0 for _, k in self._terms)

    def __call__(self, eta, zeta):
        eta = np.asarray(eta, dtype=complex)
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros(np.broadcast(eta, zeta).shape, dtype=complex)
        for (j, k), c in self._terms.items():
            out = out + c * eta ** j * zeta ** k
        return out

    def fiber(self, zeta: complex) -> LaurentPoly1:
        """Specialise ``z = zeta``; coefficients cancelled to round-off are pruned."""
        acc: dict = {}
        mag: dict = {}
        for (j, k), c in self._terms.items():
            acc[j] = acc.get(j, 0j) + c * zeta ** k
            mag[j] = mag.get(j, 0.0) + abs(c)
        return LaurentPoly1({j: v for j, v in acc.items() if abs(v) > CANCEL_TOL * mag[j]})

    def __add__(self, other):
        other = _as_poly2(other)
        out = dict(self._terms)
        for jk, c in other._terms.items():
            out[jk] = out.get(jk, 0) + c
        return LaurentPoly2(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly2({jk: -c for jk, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly2(other))

    def __rsub__(self, other):
        return _as_poly2(other) - self

    def __mul__(self, other):
        other = _as_poly2(other)
        out: dict = {}
        for (j1, k1), c1 in self._terms.items():
            for (j2, k2), c2 in other._terms.items():
                key = (j1 + j2, k1 + k2)
                out[key] = out.get(key, 0) + c1 * c2
        return LaurentPoly2(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = LaurentPoly2.constant(other)
        if not isinstance(other, LaurentPoly2):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"LaurentPoly2({format_poly(self._terms, ('y', 'z'))!r})"


def _as_poly2(x) -> LaurentPoly2:
    if isinstance(x, LaurentPoly2):
        return x
    if isinstance(x, LaurentPoly1):
        return LaurentPoly2.from_poly1(x)
    if isinstance(x, (int, float, complex, np.number)):
        return LaurentPoly2.constant(x)
    raise TypeError(f"cannot combine LaurentPoly2 with {type(x).__name__}")


# ---------------------------------------------------------------------------
# roots and Mahler measure
# ---------------------------------------------------------------------------

def eval1(p: LaurentPoly1, eta):
    """Evaluate ``p`` at points of the unit circle."""
    eta_arr = np.asarray(eta, dtype=complex)
    if np.any(np.abs(np.abs(eta_arr) - 1.0) > 1e-12):
        raise InputError("eval1 expects points on the unit circle")
    out = p(eta_arr)
    return complex(out) if out.ndim == 0 else out


def fiber(p: LaurentPoly2, zeta: complex) -> LaurentPoly1:
    return p.fiber(zeta)


def roots(p: LaurentPoly1) -> np.ndarray:
    """Roots (with multiplicity) of ``p`` after removing ``eta^low``.

    Companion-matrix eigenvalues, each followed by one Newton step that is
    kept only if it lowers the residual.
    """
    if p.is_zero():
        raise ZeroPolynomialError("zero_polynomial: the zero polynomial has no root set")
    c = p.dense()
    d = c.shape[0] - 1
    if d == 0:
        return np.empty(0, dtype=complex)
    mono = c[:-1] / c[-1]
    comp = np.zeros((d, d), dtype=complex)
    comp[1:, :-1] = np.eye(d - 1)
    comp[:, -1] = -mono
    z = np.linalg.eigvals(comp)

    desc = c[::-1]
    deriv = np.polyder(desc)
    val = np.polyval(desc, z)
    dval = np.polyval(deriv, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_new = z - val / dval
    better = np.isfinite(z_new) & (np.abs(np.polyval(desc, z_new)) < np.abs(val))
    return np.where(better, z_new, z)


def log_mahler_jensen(p: LaurentPoly1) -> float:
    """``int_{S^1} log|p(eta)| dmu(eta)`` by Jensen's formula.

    Equals ``log|c_lead| + sum log+ |root|``. Always finite for a non-zero
    polynomial.
    """
    if p.is_zero():
        raise ZeroPolynomialError("zero_polynomial: log|0| is not integrable")
    lead = p.coeff(p.high)
    mods = np.abs(roots(p))
    outside = mods[mods > 1.0 + CIRCLE_TOL]
    return float(math.log(abs(lead)) + np.sum(np.log(outside)))


def log_mahler_quadrature(p: LaurentPoly1, n_points: int, full_output: bool = False):
    """Equi-angle average of ``log|p|`` over ``n_points`` circle nodes.

    Nodes where ``|p| < 1e-13 * ||p||_1`` are skipped. With
    ``full_output=True`` returns ``(value, info)`` where ``info`` holds the
    node count and the number skipped.
    """
    if p.is_zero():
        raise ZeroPolynomialError("zero_polynomial: log|0| is not integrable")
    n_points = int(n_points)
    if n_points < 16:
        raise InputError("log_mahler_quadrature needs at least 16 nodes")
    eta = np.exp(2j * np.pi * np.arange(n_points) / n_points)
    vals = np.abs(p(eta))
    keep = vals >= 1e-13 * p.norm1()
    if not keep.any():
        raise DegenerateQuadratureError("degenerate_quadrature: every node is a zero of p")
    value = float(np.mean(np.log(vals[keep])))
    if full_output:
        return value, {"n_points": n_points, "skipped": int(n_points - keep.sum())}
    return value


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>\*\*|[-+*^(),]))"
)


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    """Recursive-descent parser producing ``{exponent tuple: coefficient}``."""

    def __init__(self, text, variables, noncommuting=None):
        self.text = text
        self.vars = tuple(variables)
        self.index = {v: i for i, v in enumerate(self.vars)}
        self.toks = _tokenize(text)
        self.i = 0
        self.nc = None
        self.nc_blockers = ()
        if noncommuting is not None:
            name, blockers = noncommuting
            self.nc = self.index[name]
            self.nc_blockers = tuple(self.index[b] for b in blockers)

    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.advance()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}", self.text, tok[2])
        return tok

    def zero_exp(self):
        return (0,) * len(self.vars)

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", self.text, 0)
        poly = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return poly

    def expr(self):
        sign = 1.0
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.advance()[1] == "-" else 1.0
        acc = _scale(self.term(), sign)
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.advance()[1] == "-" else 1.0
            acc = _add(acc, _scale(self.term(), sign))
        return acc

    def term(self):
        acc = self.power()
        while self.peek()[1] == "*":
            self.advance()
            pos = self.peek()[2]
            rhs = self.power()
            self.check_order(acc, rhs, pos)
            acc = _mul(acc, rhs)
        tok = self.peek()
        if tok[0] in ("num", "name") or tok[1] == "(":
            raise ParseError("missing '*' between factors", self.text, tok[2])
        return acc

    def check_order(self, left, right, pos):
        if self.nc is None:
            return
        left_nc = any(e[self.nc] != 0 for e in left)
        right_blocked = any(e[b] != 0 for e in right for b in self.nc_blockers)
        if left_nc and right_blocked:
            name = self.vars[self.nc]
            raise ParseError(
                f"coefficients must stand to the left of {name}; write the operator as sum a_i*{name}^i",
                self.text, pos,
            )

    def power(self):
        base_pos = self.peek()[2]
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.advance()
            neg = False
            if self.peek()[1] in ("-", "+"):
                neg = self.advance()[1] == "-"
            tok = self.advance()
            if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
                raise ParseError("exponent must be an integer", self.text, tok[2])
            k = int(tok[1]) * (-1 if neg else 1)
            if k < 0 or k >= 2:
                self.check_order(base, base, base_pos)
            if len(base) == 1:
                (e, c), = base.items()
                if k < 0 and c != 1:
                    raise ParseError("negative powers apply to monomials only", self.text, base_pos)
                return {tuple(x * k for x in e): c ** k if k >= 0 else 1.0}
            if k < 0:
                raise ParseError("negative powers apply to monomials only", self.text, base_pos)
            out = {self.zero_exp(): 1.0}
            for _ in range(k):
                out = _mul(out, base)
            return out
        return base

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return {self.zero_exp(): complex(float(val))}
        if kind == "name":
            if val not in self.index:
                raise ParseError(
                    f"unknown variable {val!r}; allowed: {', '.join(self.vars)}", self.text, pos
                )
            e = [0] * len(self.vars)
            e[self.index[val]] = 1
            return {tuple(e): 1.0 + 0j}
        if val == "(":
            lit = self.complex_literal()
            if lit is not None:
                return {self.zero_exp(): lit}
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {val!r}", self.text, pos)

    def complex_literal(self):
        # (re,im) with optionally signed numbers
        j = 0
        parts = []
        for _ in range(2):
            sign = 1.0
            tok = self.peek(j)
            if tok[1] in ("+", "-") and tok[0] == "op":
                sign = -1.0 if tok[1] == "-" else 1.0
                j += 1
                tok = self.peek(j)
            if tok[0] != "num":
                return None
            parts.append(sign * float(tok[1]))
            j += 1
            sep = self.peek(j)[1]
            if len(parts) == 1 and sep != ",":
                return None
            j += 1
        if self.peek(j - 1)[1] != ")":
            return None
        self.i += j
        return complex(parts[0], parts[1])


def _add(a, b):
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + c
    return {e: c for e, c in out.items() if c != 0}


def _scale(a, s):
    return {e: c * s for e, c in a.items()}


def _mul(a, b):
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def parse_terms(text: str, variables, noncommuting=None) -> dict:
    """Parse polynomial text into ``{exponent tuple: complex}``.

    ``noncommuting=(name, blockers)`` enforces that no factor involving a
    variable in ``blockers`` appears to the right of ``name`` in a product.
    """
    return _Parser(text, variables, noncommuting).parse()


def parse_poly1(text: str) -> LaurentPoly1:
    """Parse a univariate Laurent polynomial in ``y``."""
    return LaurentPoly1({e[0]: c for e, c in parse_terms(text, ("y",)).items()})


def parse_poly2(text: str) -> LaurentPoly2:
    """Parse a Laurent polynomial in ``y`` and ``z``."""
    return LaurentPoly2(parse_terms(text, ("y", "z")))


def _fmt_coeff(c: complex) -> tuple:
    if c.imag == 0:
        return ("-" if c.real < 0 else "+"), repr(abs(float(c.real)))
    return "+", f"({float(c.real)!r},{float(c.imag)!r})"


def format_poly(terms: Mapping[tuple, complex], variables) -> str:
    """Inverse of :func:`parse_terms` (round-trips exactly)."""
    if not terms:
        return "0"
    out = ""
    for e in sorted(terms):
        sign, coeff = _fmt_coeff(complex(terms[e]))
        factors = [coeff]
        for v, k in zip(variables, e):
            if k == 1:
                factors.append(v)
            elif k:
                factors.append(f"{v}^{k}")
        body = "*".join(factors)
        if not out:
            out = body if sign == "+" else "-" + body
        else:
            out += f" {sign} {body}"
    return out
