"""Determinants in the group von Neumann algebra of the discrete Heisenberg group.

The algebra decomposes over the central character ``z = zeta`` into
rotation algebras: ``x`` becomes the unitary ``U`` of the rotation by
``zeta`` and ``y`` the circle coordinate ``eta``. The log-determinant of
``Phi = sum a_i(y, z) x^i`` is the average over ``zeta`` of the fiber
log-determinants, computed here with an equi-angle outer rule.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cocycle import CrossedProductPolynomial, ScalarSymbol
from .determinant import det_polynomial
from .ergodic import GOLDEN, ErgodicSystem, circle_rotation
from .errors import (
    FiberFailuresError,
    FKDetError,
    InputError,
    NotNormalizedError,
    ParseError,
    ZeroPolynomialError,
)
from .lyapunov import SpectrumConfig
from .polynomials import LaurentPoly1, LaurentPoly2, log_mahler_jensen, parse_terms

FAILURE_THRESHOLD = 0.05


@dataclass(frozen=True, eq=False)
class HeisenbergOperator:
    """``Phi = sum_{i >= 0} a_i(y, z) x^i`` with coefficients left of ``x``."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for i, a in dict(self.coeffs).items():
            i = int(i)
            if i < 0:
                raise InputError(
                    "negative powers of x are not supported; multiply by a power of x "
                    "or pass to the adjoint form first"
                )
            if not isinstance(a, LaurentPoly2):
                a = LaurentPoly2.from_poly1(a) if isinstance(a, LaurentPoly1) else LaurentPoly2.constant(a)
            if not a.is_zero():
                clean[i] = a
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def parse(cls, text: str) -> "HeisenbergOperator":
        """Parse text in ``x``, ``y``, ``z``; ``x`` must stand right of ``y`` and ``z``."""
        terms = parse_terms(text, ("y", "z", "x"), noncommuting=("x", ("y", "z")))
        grouped: dict = {}
        for (j, k, i), c in terms.items():
            if i < 0:
                raise ParseError(
                    f"negative power x^{i} in {text!r}; multiply by x^{-i} or use the adjoint normalization",
                    text=text,
                )
            grouped.setdefault(i, {})[(j, k)] = c
        return cls({i: LaurentPoly2(t) for i, t in grouped.items()})

    @classmethod
    def affine(cls, a) -> "HeisenbergOperator":
        """``1 - a(y, z) x``."""
        return cls({0: LaurentPoly2.constant(1.0), 1: -_as_poly2(a)})

    @property
    def degree(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    @property
    def normalized(self) -> bool:
        return self.coeffs.get(0) == LaurentPoly2.constant(1.0)

    def coefficient(self, i: int) -> LaurentPoly2:
        return self.coeffs.get(i, LaurentPoly2())

    def affine_symbol(self) -> LaurentPoly2 | None:
        """``a`` when ``Phi = 1 - a x``, else ``None``."""
        if self.normalized and self.degree == 1:
            return -self.coeffs[1]
        return None

    def depends_on_z(self) -> bool:
        return any(a.depends_on_z() for a in self.coeffs.values())

    def __repr__(self):
        body = " + ".join(f"({a!r})*x^{i}" for i, a in sorted(self.coeffs.items()))
        return f"HeisenbergOperator({body or '0'})"


def _as_poly2(a) -> LaurentPoly2:
    if isinstance(a, LaurentPoly2):
        return a
    if isinstance(a, LaurentPoly1):
        return LaurentPoly2.from_poly1(a)
    if isinstance(a, str):
        return LaurentPoly2(parse_terms(a, ("y", "z")))
    return LaurentPoly2.constant(a)


@dataclass(frozen=True)
class FiberPlan:
    """Outer quadrature over ``zeta`` and the per-fiber spectrum settings.

    Nodes are ``exp(2 pi i (k + offset) / outer_nodes)``; with
    ``skip_roots_of_unity`` the irrational ``offset`` keeps every node away
    from roots of unity, otherwise the plain grid (``offset = 0``) is used.
    """

    outer_nodes: int = 64
    per_fiber: SpectrumConfig = field(default_factory=lambda: SpectrumConfig(100_000))
    skip_roots_of_unity: bool = True
    offset: float = GOLDEN
    threads: int | None = None

    def __post_init__(self):
        if int(self.outer_nodes) < 8:
            raise InputError("outer_nodes must be >= 8")

    def zetas(self) -> np.ndarray:
        phi0 = self.offset if self.skip_roots_of_unity else 0.0
        k = np.arange(int(self.outer_nodes))
        return np.exp(2j * np.pi * (k + phi0) / int(self.outer_nodes))


@dataclass
class HeisenbergResult:
    """Outer average plus error diagnostics.

    ``outer_error`` sums the changes between the rules on every node, every
    2nd and every 4th node;
    ``error_estimate`` adds the RMS of the per-fiber standard errors.
    """

    log_det: float
    route: str
    zetas: np.ndarray
    fiber_values: np.ndarray
    outer_error: float
    fiber_stderr_rms: float = 0.0
    skipped: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __float__(self):
        return float(self.log_det)

    @property
    def error_estimate(self) -> float:
        return self.outer_error + self.fiber_stderr_rms

    @property
    def sample_variance(self) -> float:
        v = self.fiber_values[np.isfinite(self.fiber_values)]
        return float(np.var(v, ddof=1)) if v.size > 1 else 0.0

    def to_json(self) -> dict:
        return {
            "log_det": float(self.log_det),
            "route": self.route,
            "outer_nodes": int(self.zetas.size),
            "outer_error": float(self.outer_error),
            "fiber_stderr_rms": float(self.fiber_stderr_rms),
            "error_estimate": float(self.error_estimate),
            "sample_variance": self.sample_variance,
            "skipped": [[z.real, z.imag] for z in self.skipped],
            "failures": [[z.real, z.imag] for z in self.failures],
        }


def fiber_system(zeta: complex) -> ErgodicSystem:
    """Rotation of the circle by ``zeta``."""
    if abs(abs(zeta) - 1.0) > 1e-12:
        raise InputError(f"zeta={zeta!r} is not on the unit circle")
    t = math.atan2(zeta.imag, zeta.real) / (2 * math.pi)
    t = t % 1.0
    return circle_rotation(0.0 if t >= 1.0 else t)


def fiber_operator(phi: HeisenbergOperator, zeta: complex) -> CrossedProductPolynomial:
    """``sum a_i(., zeta) U^i`` over the rotation by ``zeta``."""
    zeta = complex(zeta)
    if abs(abs(zeta) - 1.0) > 1e-12:
        raise InputError(f"zeta={zeta!r} is not on the unit circle")
    return CrossedProductPolynomial({i: ScalarSymbol.poly(a.fiber(zeta)) for i, a in phi.coeffs.items()})


def _outer(values: np.ndarray, ok: np.ndarray) -> tuple:
    """Outer average and its error estimate.

    The estimate adds the last two refinement differences (all nodes vs
    every 2nd, every 2nd vs every 4th); a single difference is too
    optimistic for the kinked integrand.
    """
    def rule(stride):
        sub = ok.copy()
        sub[np.arange(sub.size) % stride != 0] = False
        return math.fsum(values[sub]) / sub.sum() if sub.any() else math.nan

    full, half, quarter = rule(1), rule(2), rule(4)
    floor = 64 * np.finfo(float).eps * max(1.0, abs(full))
    if math.isnan(half) or math.isnan(quarter):
        return full, max(abs(full), floor)
    return full, max(abs(full - half) + abs(half - quarter), floor)


def det_heisenberg_affine(a, plan: FiberPlan | None = None) -> HeisenbergResult:
    """``log det(1 - a x)`` with exact (Jensen) fiber integrals.

    Each fiber contributes ``(int log|a(eta, zeta)| deta)^+``; fibers where
    ``a(., zeta)`` vanishes identically are skipped and reported.

    Parameters
    ----------
    a : LaurentPoly2, LaurentPoly1, str or number
    plan : FiberPlan, optional
    """
    plan = plan or FiberPlan()
    a = _as_poly2(a)
    if a.is_zero():
        raise ZeroPolynomialError("zero_polynomial: a(y, z) is identically zero")
    zetas = plan.zetas()
    values = np.full(zetas.size, np.nan)
    skipped = []
    for k, zeta in enumerate(zetas):
        f = a.fiber(zeta)
        if f.is_zero():
            skipped.append(complex(zeta))
            continue
        values[k] = max(0.0, log_mahler_jensen(f))
    ok = np.isfinite(values)
    if not ok.any():
        raise ZeroPolynomialError("zero_polynomial: every fiber vanished")
    log_det, err = _outer(values, ok)
    return HeisenbergResult(log_det, "affine", zetas, values, err, skipped=skipped)


def _threads(plan: FiberPlan, n: int) -> int:
    if plan.threads is not None:
        cap = int(plan.threads)
    else:
        env = os.environ.get("FKDET_THREADS", "").strip()
        cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n))


def det_heisenberg(phi: HeisenbergOperator, plan: FiberPlan | None = None) -> HeisenbergResult:
    """``log det Phi`` as the average of companion-route fiber determinants.

    Raises
    ------
    NotNormalizedError
        The ``x^0`` coefficient is not 1.
    FiberFailuresError
        More than 5% of the fibers raised a numerical error; ``err.zetas``
        lists them.
    """
    plan = plan or FiberPlan()
    if not phi.normalized:
        raise NotNormalizedError("not_normalized: the x^0 coefficient must be 1")
    if phi.degree == 0:
        raise InputError("constant_operator: no positive power of x")
    zetas = plan.zetas()

    def one(zeta):
        try:
            res = det_polynomial(fiber_operator(phi, zeta), fiber_system(zeta), plan.per_fiber)
        except FKDetError as exc:
            if isinstance(exc, InputError):
                raise
            return None
        return res.log_det, res.spectrum.combined_stderr if res.spectrum is not None else 0.0

    workers = _threads(plan, zetas.size)
    if workers == 1:
        out = [one(z) for z in zetas]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, zetas))

    failures = [complex(z) for z, r in zip(zetas, out) if r is None]
    if len(failures) > FAILURE_THRESHOLD * zetas.size:
        raise FiberFailuresError(
            f"fiber_failures: {len(failures)} of {zetas.size} fibers failed", zetas=failures
        )
    values = np.array([np.nan if r is None else r[0] for r in out])
    errs = np.array([r[1] for r in out if r is not None])
    ok = np.isfinite(values)
    log_det, err = _outer(values, ok)
    rms = float(math.sqrt(np.mean(errs ** 2))) if errs.size else 0.0
    return HeisenbergResult(log_det, "lyapunov_fibers", zetas, values, err, rms, failures=failures)
