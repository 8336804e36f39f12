"""Fuglede-Kadison determinants in the crossed product ``L^inf(Omega) x Z``.

Logarithmic determinants of scalar operators ``b - aU`` come from integrals
of ``log|a|`` and ``log|b|``; matrix operators ``1 - AU`` and polynomials
``sum a_i U^i`` (through their companion matrix) from the positive part of
the Lyapunov spectrum. :func:`finite_dim_oracle` evaluates the normalised
determinant of a periodic finite-dimensional model instead and serves as
the independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cocycle import (
    CrossedProductPolynomial,
    LogIntegral,
    MatrixSymbol,
    ScalarSymbol,
    as_symbol,
    log_abs_integral,
)
from .ergodic import ErgodicSystem, OrbitConfig, orbit_chunks
from .errors import (
    ConstantOperatorError,
    InputError,
    NotNormalizableError,
    NotNormalizedError,
    ZeroSymbolError,
)
from .lyapunov import LyapunovSpectrum, SpectrumConfig, lyapunov_spectrum, sum_rule_check
from .polynomials import CIRCLE_TOL, roots

ROUTES = ("scalar_formula", "lyapunov_formula", "companion", "oracle", "abelian")


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "-inf" if x < 0 else "inf"


@dataclass
class DetResult:
    """A logarithmic determinant together with how it was computed."""

    log_det: float
    route: str
    spectrum: LyapunovSpectrum | None = None
    sum_rule_gap: float | None = None
    clipped_fraction: float = 0.0
    q_used: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.log_det)

    def to_json(self) -> dict:
        spec = [] if self.spectrum is None else [
            {"chi": _json_float(c), "r": r} for c, r in self.spectrum.pairs
        ]
        return {
            "log_det": _json_float(self.log_det),
            "route": self.route,
            "spectrum": spec,
            "sum_rule_gap": _json_float(self.sum_rule_gap),
            "clipped_fraction": float(self.clipped_fraction),
            "q_used": self.q_used,
        }


@dataclass(frozen=True)
class BrownMeasureSupport:
    """Circles ``|lambda| = radius`` carrying rotation-invariant mass."""

    circles: tuple

    @property
    def radii(self) -> list:
        return [r for r, _ in self.circles]

    @property
    def masses(self) -> list:
        return [m for _, m in self.circles]

    @property
    def total_mass(self) -> int:
        return sum(m for _, m in self.circles)

    def to_json(self) -> dict:
        return {
            "circles": [{"radius": r, "mass": m} for r, m in self.circles],
            "total_mass": self.total_mass,
        }


# ---------------------------------------------------------------------------
# scalar operators
# ---------------------------------------------------------------------------

def _orbit(config) -> OrbitConfig:
    if config is None:
        return OrbitConfig(1_000_000)
    if isinstance(config, SpectrumConfig):
        return config.orbit_config
    return config


def _integral(a, system, config, clip=True) -> LogIntegral:
    return log_abs_integral(as_symbol(a), system, _orbit(config), clip=clip)


def _diag(integral: LogIntegral, **extra) -> dict:
    out = {"method": integral.method, "low_confidence": integral.low_confidence}
    out.update(extra)
    return out


def det_abelian(a, system: ErgodicSystem, config: OrbitConfig | None = None) -> DetResult:
    """``log det a = int log|a| dP`` for a multiplication operator."""
    i = _integral(a, system, config)
    return DetResult(i.value, "abelian", clipped_fraction=i.clipped_fraction, diagnostics=_diag(i))


def det_one_minus_aU(a, system: ErgodicSystem, config: OrbitConfig | None = None) -> DetResult:
    """``log det(1 - aU) = (int log|a| dP)^+``."""
    i = _integral(a, system, config)
    return DetResult(max(0.0, i.value), "scalar_formula", LyapunovSpectrum.scalar(i.value),
                     clipped_fraction=i.clipped_fraction, diagnostics=_diag(i))


def det_b_minus_aU(b, a, system: ErgodicSystem, config: OrbitConfig | None = None) -> DetResult:
    """``log det(b - aU) = max(int log|a|, int log|b|)`` for non-vanishing ``a``, ``b``."""
    ia = _integral(a, system, config)
    ib = _integral(b, system, config, clip=False)
    return DetResult(max(ia.value, ib.value), "scalar_formula",
                     clipped_fraction=max(ia.clipped_fraction, ib.clipped_fraction),
                     diagnostics={"log_abs_a": ia.value, "log_abs_b": ib.value,
                                  "method": f"{ia.method}/{ib.method}"})


def det_z_minus_aU(z: complex, a, system: ErgodicSystem, config: OrbitConfig | None = None) -> DetResult:
    """``log det(z - aU) = max(log|z|, log M(a))``; ``z = 0`` gives ``log M(a)``."""
    i = _integral(a, system, config)
    log_z = -math.inf if z == 0 else math.log(abs(z))
    return DetResult(max(log_z, i.value), "scalar_formula", LyapunovSpectrum.scalar(i.value),
                     clipped_fraction=i.clipped_fraction, diagnostics=_diag(i))


# ---------------------------------------------------------------------------
# matrix and polynomial operators
# ---------------------------------------------------------------------------

def det_one_minus_AU(A: MatrixSymbol, system: ErgodicSystem,
                     spec_config: SpectrumConfig | None = None) -> DetResult:
    """``log det(1 - AU) = sum_j r_j max(chi_j, 0)`` from the Lyapunov spectrum of ``A``."""
    spec_config = spec_config or SpectrumConfig()
    spectrum = lyapunov_spectrum(A, system, spec_config)
    rule = sum_rule_check(A, system, spectrum, spec_config.orbit_config)
    return DetResult(spectrum.positive_part, "lyapunov_formula", spectrum, rule.gap,
                     diagnostics={"stderr": list(spectrum.stderr), "sum_rule": rule._asdict()})


def build_companion(phi: CrossedProductPolynomial) -> MatrixSymbol:
    """Companion matrix of ``1 + a_1 U + ... + a_N U^N``.

    Ones on the superdiagonal, ``(-a_N, ..., -a_1)`` in the last row; its
    determinant is ``(-1)^N a_N``.
    """
    if phi.is_zero() or phi.low < 0 or not phi.coefficient(0).is_one():
        raise NotNormalizedError(f"not_normalized: constant coefficient of {phi.describe()} is not 1")
    N = phi.high
    if N == 0:
        raise ConstantOperatorError("constant_operator: no positive power of U")
    zero = ScalarSymbol.constant(0.0)
    one = ScalarSymbol.constant(1.0)
    grid = [[zero] * N for _ in range(N)]
    for i in range(N - 1):
        grid[i][i + 1] = one
    for col in range(N):
        grid[N - 1][col] = -phi.coefficient(N - col)
    a_n = phi.coefficient(N)
    det = a_n if N % 2 == 0 else -a_n
    return MatrixSymbol(N, tuple(tuple(r) for r in grid), det_hint=det,
                        descriptor=f"companion[{phi.describe()}]")


def _invertibility(a: ScalarSymbol, system: ErgodicSystem, config: OrbitConfig) -> str | None:
    """'bounded' if ``1/a`` is bounded on the support, 'integrable' if only
    ``log|a|`` is integrable, ``None`` otherwise."""
    if a.is_zero():
        return None
    if a.constant_value() is not None:
        return "bounded"
    if a.kind == "poly1" and system.is_circle:
        r = np.abs(roots(a.data))
        return "integrable" if np.any(np.abs(r - 1.0) <= CIRCLE_TOL) else "bounded"
    probe = OrbitConfig(min(4096, int(config.n_steps)), start=config.start, seed=config.seed)
    smallest = min(float(np.min(np.abs(a.evaluate(p)))) for p in orbit_chunks(system, probe))
    return "bounded" if smallest > 0.0 else None


def normalize(phi: CrossedProductPolynomial, system: ErgodicSystem, config: OrbitConfig,
              mode: str = "auto"):
    """Rewrite ``phi`` as ``u * Phi'`` with ``Phi' = 1 + ... `` and ``|det u|`` known.

    Returns ``(phi_normalized, abelian_integral, path)`` where ``path`` is
    ``'constant'`` (divide by the constant term) or ``'adjoint'`` (divide by
    the leading term and pass to ``U^N Psi^*``). ``abelian_integral`` is
    ``None`` when no division was needed.
    """
    if phi.is_zero():
        raise NotNormalizableError("not_normalizable: zero operator")
    psi = phi.shifted(-phi.low)
    N = psi.high
    a0, an = psi.coefficient(0), psi.coefficient(N)
    if mode == "auto":
        k0 = _invertibility(a0, system, config)
        kn = _invertibility(an, system, config)
        if k0 == "bounded":
            mode = "constant"
        elif kn == "bounded":
            mode = "adjoint"
        elif k0 == "integrable":
            mode = "constant"
        elif kn == "integrable":
            mode = "adjoint"
        else:
            raise NotNormalizableError(
                "not_normalizable: neither the constant nor the leading coefficient has integrable log; "
                "factor the operator or supply a polynomial symbol"
            )
    if mode == "constant":
        if a0.is_one():
            return psi, None, "constant"
        integral = log_abs_integral(a0, system, config)
        coeffs = {i: (ScalarSymbol.constant(1.0) if i == 0 else a / a0) for i, a in psi.coeffs.items()}
        return CrossedProductPolynomial(coeffs), integral, "constant"
    if mode == "adjoint":
        integral = None
        monic = psi.coeffs
        if not an.is_one():
            integral = log_abs_integral(an, system, config)
            monic = {i: (ScalarSymbol.constant(1.0) if i == N else c / an) for i, c in psi.coeffs.items()}
        coeffs = {}
        for j in range(N + 1):
            c = monic.get(N - j)
            if c is not None:
                coeffs[j] = ScalarSymbol.constant(1.0) if j == 0 else c.conj_shift(system, j)
        return CrossedProductPolynomial(coeffs), integral, "adjoint"
    raise InputError(f"unknown normalization mode {mode!r}")


def det_polynomial(phi: CrossedProductPolynomial, system: ErgodicSystem,
                   spec_config: SpectrumConfig | None = None, normalization: str = "auto") -> DetResult:
    """``log det Phi`` for a finite sum ``Phi = sum a_i U^i``.

    The operator is shifted to start at ``U^0``, normalised to constant term
    1 (dividing by ``a_0``, or by ``a_N`` followed by the adjoint flip), and
    the companion cocycle supplies ``sum r_j chi_j^+``.

    Parameters
    ----------
    phi : CrossedProductPolynomial
    system : ErgodicSystem
    spec_config : SpectrumConfig, optional
    normalization : {'auto', 'constant', 'adjoint'}
        'auto' prefers dividing by the constant term.
    """
    spec_config = spec_config or SpectrumConfig()
    oc = spec_config.orbit_config
    if phi.is_zero():
        raise NotNormalizableError("not_normalizable: zero operator")
    if phi.degree == 0:
        res = det_abelian(phi.coefficient(phi.low), system, oc)
        res.diagnostics["shift"] = phi.low
        return res
    phi1, integral, path = normalize(phi, system, oc, normalization)
    A = build_companion(phi1)
    spectrum = lyapunov_spectrum(A, system, spec_config)
    rule = sum_rule_check(A, system, spectrum, oc)
    abelian = 0.0 if integral is None else integral.value
    return DetResult(
        abelian + spectrum.positive_part, "companion", spectrum, rule.gap,
        clipped_fraction=0.0 if integral is None else integral.clipped_fraction,
        diagnostics={
            "normalization": path,
            "shift": phi.low,
            "abelian_part": abelian,
            "stderr": list(spectrum.stderr),
            "sum_rule": rule._asdict(),
        },
    )


# ---------------------------------------------------------------------------
# Brown measure and the z-curve
# ---------------------------------------------------------------------------

def brown_support(spectrum: LyapunovSpectrum) -> BrownMeasureSupport:
    """Circles of radius ``exp(chi_j)`` with mass ``r_j``; ``chi = -inf`` is the Dirac mass at 0."""
    if spectrum.pairs and spectrum.pairs[0][0] == -math.inf:
        if len(spectrum.pairs) != 1:
            raise InputError("a zero radius is only allowed as the sole circle")
        return BrownMeasureSupport(((0.0, spectrum.pairs[0][1]),))
    return BrownMeasureSupport(tuple((math.exp(c), r) for c, r in spectrum.pairs))


def det_z_curve(spectrum: LyapunovSpectrum, z_values) -> list:
    """``log det(z - AU) = sum_j r_j max(log|z|, chi_j)`` for each ``z``."""
    out = []
    for z in np.atleast_1d(np.asarray(z_values, dtype=complex)):
        if z == 0:
            out.append(spectrum.total)
        else:
            lz = math.log(abs(z))
            out.append(math.fsum(r * max(lz, c) for c, r in spectrum.pairs))
    return out


# ---------------------------------------------------------------------------
# finite-dimensional oracle
# ---------------------------------------------------------------------------

def best_convergent(alpha: float, q_max: int) -> tuple:
    """Last continued-fraction convergent ``p/q`` of ``alpha`` with ``q <= q_max``."""
    x = Fraction(alpha)
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = math.floor(x)
        p2, q2 = a * p1 + p0, a * q1 + q0
        if q2 > q_max:
            break
        p0, q0, p1, q1 = p1, q1, p2, q2
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return p1, q1


def _oracle_grid(system: ErgodicSystem, q: int):
    if system.kind == "finite_cycle":
        L = system.length
        q_used = max(L, (q // L) * L)
        return q_used, q_used // L
    if system.kind == "circle_rotation":
        p, qq = best_convergent(system.shift[0], q)
        if qq <= 1:
            raise InputError(f"no convergent of {system.shift[0]} with denominator in 2..{q}")
        if Fraction(system.shift[0]) == Fraction(p, qq):
            # rational angle: repeat the exact period
            m = max(1, q // qq)
            return qq * m, p * m
        return qq, p
    raise InputError("finite_dim_oracle supports circle rotations and finite cycles")


def finite_dim_oracle(phi: CrossedProductPolynomial, system: ErgodicSystem, q: int,
                      start: float = 0.0, full_output: bool = False):
    """Normalised log-determinant of the periodic ``q x q`` model of ``phi``.

    Builds ``M[k, (k+i) mod q] += a_i(w_k)`` on the orbit ``w_k`` of the
    rational rotation approximating ``system`` and returns
    ``(1/q) log|det M|``. Irrational angles are replaced by the best
    convergent with denominator ``<= q``; finite cycles use the largest
    multiple of the cycle length ``<= q``. May return ``-inf`` when ``M``
    is singular, a finite-size artefact.
    """
    q = int(q)
    if q < 2:
        raise InputError("finite_dim_oracle needs q >= 2")
    q_used, step = _oracle_grid(system, q)
    k = np.arange(q_used)
    pts = np.mod(float(start) + ((k * step) % q_used) / q_used, 1.0)[:, None]
    M = np.zeros((q_used, q_used), dtype=complex)
    for i, a in phi.coeffs.items():
        M[k, (k + i) % q_used] += a.evaluate(pts)
    sign, logabs = np.linalg.slogdet(M)
    value = -math.inf if sign == 0 else float(logabs) / q_used
    if full_output:
        return value, {"q_used": q_used, "step": step, "singular": sign == 0}
    return value


def oracle_result(phi: CrossedProductPolynomial, system: ErgodicSystem, q: int,
                  start: float = 0.0) -> DetResult:
    value, info = finite_dim_oracle(phi, system, q, start, full_output=True)
    return DetResult(value, "oracle", q_used=info["q_used"],
                     diagnostics={"singular": info["singular"], "finite_size_artifact": info["singular"]})


def scalar_log_integral(a, system: ErgodicSystem, config: OrbitConfig | None = None) -> LogIntegral:
    """``int log|a| dP`` with the routing used by the scalar formulas."""
    a = as_symbol(a)
    if a.is_zero():
        raise ZeroSymbolError(f"zero_symbol: {a.descriptor!r}")
    return _integral(a, system, config)
