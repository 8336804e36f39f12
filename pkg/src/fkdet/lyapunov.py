"""Lyapunov spectrum of a matrix cocycle over a rotation by the discrete QR method.

An orthonormal frame is pushed along the orbit by ``w -> A(gamma^k w)^T w``
(the column form of the row action ``v -> v A``) and re-orthonormalised
every ``reortho_every`` steps; the time averages of ``log R_ii`` are the
exponents. Nearly equal exponents are merged into one exponent with a
multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .cocycle import MatrixSymbol, log_abs_integral
from .ergodic import ErgodicSystem, OrbitConfig, OrbitStream, birkhoff_average
from .errors import CocycleOverflowError, DegenerateCocycleError, InputError

DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class SpectrumConfig:
    """Parameters of a spectrum run.

    ``orbit`` supplies start, seed, burn-in and orbit mode; its ``n_steps``
    is ignored in favour of ``n_steps`` here. ``backend`` picks the kernel
    implementation ('numba' or 'numpy'); ``None`` uses the active one.
    """

    n_steps: int = 1_000_000
    reortho_every: int = 1
    cluster_tol: float | None = None
    orbit: OrbitConfig | None = None
    n_batches: int = 32
    backend: str | None = None

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise InputError("n_steps must be >= 1")
        if not 1 <= int(self.reortho_every) <= 20:
            raise InputError("reortho_every must lie in 1..20")

    @property
    def tol(self) -> float:
        if self.cluster_tol is not None:
            return float(self.cluster_tol)
        return max(1e-3, 5.0 / math.sqrt(self.n_steps))

    @property
    def orbit_config(self) -> OrbitConfig:
        o = self.orbit
        if o is None:
            return OrbitConfig(self.n_steps, burn_in=DEFAULT_BURN_IN)
        return OrbitConfig(self.n_steps, o.burn_in, o.start, o.seed, o.exact_orbit)


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Exponents ``chi_1 < ... < chi_M`` with multiplicities ``r_j``.

    ``raw`` and ``stderr`` hold the unclustered per-direction estimates
    (ascending) and their batch-means standard errors, so callers can
    re-cluster with another tolerance.
    """

    pairs: tuple
    n: int
    cluster_tol: float = 0.0
    raw: tuple = ()
    stderr: tuple = ()
    n_steps: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pairs = tuple((float(c), int(r)) for c, r in self.pairs)
        if sum(r for _, r in pairs) != self.n:
            raise InputError(f"multiplicities {[r for _, r in pairs]} do not sum to {self.n}")
        if any(r < 1 for _, r in pairs):
            raise InputError("multiplicities must be positive")
        for (c0, _), (c1, _) in zip(pairs, pairs[1:]):
            if not c1 - c0 > self.cluster_tol:
                raise InputError("exponents must be strictly ascending with gaps above cluster_tol")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_pairs(cls, pairs, cluster_tol: float = 0.0) -> "LyapunovSpectrum":
        pairs = sorted((float(c), int(r)) for c, r in pairs)
        return cls(tuple(pairs), sum(r for _, r in pairs), cluster_tol)

    @classmethod
    def scalar(cls, chi: float) -> "LyapunovSpectrum":
        """One exponent of multiplicity one; ``-inf`` marks ``M(a) = 0``."""
        return cls(((float(chi), 1),), 1)

    @classmethod
    def from_raw(cls, raw, cluster_tol: float, stderr=None, n_steps: int = 0,
                 diagnostics=None) -> "LyapunovSpectrum":
        raw = np.asarray(raw, dtype=float)
        order = np.argsort(raw, kind="stable")
        raw = raw[order]
        err = np.zeros_like(raw) if stderr is None else np.asarray(stderr, dtype=float)[order]
        return cls(cluster_exponents(raw, cluster_tol), raw.shape[0], cluster_tol,
                   tuple(raw.tolist()), tuple(err.tolist()), n_steps, dict(diagnostics or {}))

    @property
    def exponents(self) -> list:
        return [c for c, _ in self.pairs]

    @property
    def multiplicities(self) -> list:
        return [r for _, r in self.pairs]

    @property
    def chi_max(self) -> float:
        return self.pairs[-1][0]

    @property
    def total(self) -> float:
        """``sum_j r_j chi_j``."""
        return math.fsum(r * c for c, r in self.pairs)

    @property
    def positive_part(self) -> float:
        """``sum_j r_j max(chi_j, 0)``."""
        return math.fsum(r * c for c, r in self.pairs if c > 0)

    @property
    def combined_stderr(self) -> float:
        return float(math.sqrt(sum(e * e for e in self.stderr))) if self.stderr else 0.0

    def to_dict(self) -> dict:
        return {
            "spectrum": [{"chi": c, "r": r} for c, r in self.pairs],
            "n": self.n,
            "cluster_tol": self.cluster_tol,
            "raw": list(self.raw),
            "stderr": list(self.stderr),
            "n_steps": self.n_steps,
        }


def cluster_exponents(raw, tol: float) -> tuple:
    """Merge sorted exponents whose consecutive gaps are ``<= tol``.

    Each cluster is replaced by its mean, so ``sum r_j chi_j`` equals the sum
    of the raw values.
    """
    raw = np.sort(np.asarray(raw, dtype=float))
    if raw.size == 0:
        return ()
    groups = [[raw[0]]]
    for x in raw[1:]:
        if x - groups[-1][-1] <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return tuple((math.fsum(g) / len(g), len(g)) for g in groups)


def _raise_status(status, stage):
    if status == _kernels.STATUS_DEGENERATE:
        raise DegenerateCocycleError(f"degenerate_cocycle: |R_ii| < 1e-300 during {stage}")
    if status == _kernels.STATUS_OVERFLOW:
        raise CocycleOverflowError(f"overflow: non-finite frame during {stage}")


def _batch_sizes(n: int, b: int) -> list:
    base, extra = divmod(n, b)
    return [base + (1 if i < extra else 0) for i in range(b)]


def lyapunov_spectrum(A: MatrixSymbol, system: ErgodicSystem,
                      config: SpectrumConfig | None = None) -> LyapunovSpectrum:
    """Estimate the Lyapunov exponents and multiplicities of ``A`` over ``system``.

    Parameters
    ----------
    A : MatrixSymbol
        Cocycle generator, invertible along the orbit.
    system : ErgodicSystem
    config : SpectrumConfig, optional

    Returns
    -------
    LyapunovSpectrum

    Raises
    ------
    DegenerateCocycleError
        A diagonal entry of ``R`` fell below 1e-300.
    CocycleOverflowError
        The frame became non-finite.
    """
    config = config or SpectrumConfig()
    kern = _kernels.get_kernels(config.backend)
    oc = config.orbit_config
    every = int(config.reortho_every)
    stream = OrbitStream(system, oc.resolve_start(system), exact=oc.exact_orbit)

    n = A.n
    Q = np.eye(n, dtype=complex)
    scratch = np.zeros(n)
    phase = 0
    for pts in stream.chunks(int(oc.burn_in)):
        phase, status = kern.qr_chunk(A.evaluate(pts), Q, scratch, every, phase)
        _raise_status(status, "burn-in")
    if phase:
        _raise_status(kern.reorthonormalize(Q, scratch), "burn-in")
        phase = 0

    n_steps = int(config.n_steps)
    n_batches = max(1, min(int(config.n_batches), n_steps))
    logsum = np.zeros(n)
    batch_means = []
    for size in _batch_sizes(n_steps, n_batches):
        before = logsum.copy()
        for pts in stream.chunks(size):
            phase, status = kern.qr_chunk(A.evaluate(pts), Q, logsum, every, phase)
            _raise_status(status, "accumulation")
        if phase:
            _raise_status(kern.reorthonormalize(Q, logsum), "accumulation")
            phase = 0
        batch_means.append((logsum - before) / size)

    raw = logsum / n_steps
    if not np.all(np.isfinite(raw)):
        raise CocycleOverflowError("overflow: non-finite exponent estimate")
    if n_batches > 1:
        stderr = np.std(np.array(batch_means), axis=0, ddof=1) / math.sqrt(n_batches)
    else:
        stderr = np.zeros(n)
    diagnostics = {"backend": kern.name, "batches": n_batches, "burn_in": int(oc.burn_in)}
    return LyapunovSpectrum.from_raw(raw, config.tol, stderr, n_steps, diagnostics)


class SumRule(NamedTuple):
    lhs: float
    rhs: float
    gap: float
    method: str


def sum_rule_check(A: MatrixSymbol, system: ErgodicSystem, spectrum: LyapunovSpectrum,
                   config: OrbitConfig) -> SumRule:
    """Compare ``sum r_j chi_j`` with ``int log|det A| dP``.

    The right side is exact (Jensen) when ``det A`` is a Laurent polynomial
    in the circle coordinate, otherwise a Birkhoff average along ``config``.
    """
    lhs = spectrum.total
    det = A.determinant_symbol()
    if det is not None:
        integral = log_abs_integral(det, system, config, clip=False)
        rhs, method = integral.value, integral.method
    else:
        rhs = birkhoff_average(
            system, lambda pts: np.log(np.abs(np.linalg.det(A.evaluate(pts)))), config
        )
        method = "birkhoff"
    return SumRule(lhs, rhs, abs(lhs - rhs), method)
