"""Measure-preserving rotations used as the base dynamics of a crossed product.

Points on the torus ``(S^1)^d`` are stored as angles in ``[0, 1)``; the
circle coordinate is ``eta = exp(2 pi i t)``. Three systems are provided:
rotation of the circle, rotation of a torus, and the finite cycle
``t -> t + 1/q`` which models the uniform measure on ``q`` equally spaced
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionError, InputError, SingularSampleError

#: golden-ratio conjugate, the default irrational rotation angle
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

CHUNK = 1 << 16


def _wrap(t):
    t = math.fmod(t, 1.0)
    if t < 0.0:
        t += 1.0
    if t >= 1.0:  # -tiny + 1.0 can round up to 1.0
        t = 0.0
    return t


@dataclass(frozen=True)
class TorusPoint:
    """A point of ``(S^1)^d`` given by angles in ``[0, 1)``."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        for c in coords:
            if not (0.0 <= c < 1.0):
                raise InputError(f"torus coordinate {c!r} outside [0, 1)")
        if not coords:
            raise DimensionError("a torus point needs at least one coordinate")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, value) -> "TorusPoint":
        if isinstance(value, TorusPoint):
            return value
        if np.ndim(value) == 0:
            return cls((float(value),))
        return cls(tuple(np.asarray(value, dtype=float).ravel()))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)

    def eta(self) -> complex:
        """The first coordinate as a unit complex number."""
        return complex(np.exp(2j * np.pi * self.coords[0]))


@dataclass(frozen=True)
class ErgodicSystem:
    """A rotation ``t -> t + shift (mod 1)`` on a torus or on a finite cycle.

    Use the constructors :func:`circle_rotation`, :func:`golden_rotation`,
    :func:`torus_rotation` and :func:`finite_cycle` rather than building
    instances directly.
    """

    kind: str
    shift: tuple
    length: int | None = None
    uniquely_ergodic: bool = False
    descriptor: str = ""

    @property
    def dim(self) -> int:
        return len(self.shift)

    @property
    def is_circle(self) -> bool:
        """True when the invariant measure is Haar measure on one circle."""
        return self.kind == "circle_rotation"

    def _check(self, point) -> TorusPoint:
        point = TorusPoint.of(point)
        if point.dim != self.dim:
            raise DimensionError(
                f"dimension: point has {point.dim} coordinates, system {self.descriptor} needs {self.dim}"
            )
        return point

    def step(self, point) -> TorusPoint:
        point = self._check(point)
        return TorusPoint(tuple(_wrap(t + a) for t, a in zip(point.coords, self.shift)))

    def step_inverse(self, point) -> TorusPoint:
        point = self._check(point)
        return TorusPoint(tuple(_wrap(t - a) for t, a in zip(point.coords, self.shift)))

    def iterate(self, point, k: int) -> TorusPoint:
        """Apply ``gamma^k`` (``k`` may be negative) one step at a time."""
        point = self._check(point)
        move = self.step if k >= 0 else self.step_inverse
        for _ in range(abs(k)):
            point = move(point)
        return point

    def inverse(self) -> "ErgodicSystem":
        """The system driven by ``gamma^{-1}``."""
        shift = tuple(_wrap(-a) for a in self.shift)
        if self.kind == "finite_cycle":
            return ErgodicSystem("finite_cycle", shift, self.length, False, f"cycle:{self.length}^-1")
        return ErgodicSystem(self.kind, shift, None, self.uniquely_ergodic, f"{self.descriptor}^-1")

    def random_point(self, seed) -> TorusPoint:
        rng = np.random.default_rng(seed)
        if self.kind == "finite_cycle":
            return TorusPoint((rng.integers(self.length) / self.length,))
        return TorusPoint(tuple(rng.random(self.dim)))

    def orbit(self, start, n: int, exact: bool = False) -> np.ndarray:
        """Return the ``(n, dim)`` array of ``gamma^k(start)``, ``k < n``."""
        stream = OrbitStream(self, self._check(start), exact=exact)
        return stream.take(n)


def circle_rotation(angle: float, irrational: bool = False) -> ErgodicSystem:
    """Rotation of ``S^1`` by ``angle`` (a fraction of a full turn).

    ``irrational`` declares the angle irrational, which marks the system as
    uniquely ergodic; floats cannot certify this themselves.
    """
    angle = float(angle)
    if not (0.0 <= angle < 1.0):
        raise InputError(f"rotation angle {angle!r} outside [0, 1)")
    label = "rot:golden" if angle == GOLDEN else f"rot:{angle!r}"
    return ErgodicSystem("circle_rotation", (angle,), None, bool(irrational), label)


def golden_rotation() -> ErgodicSystem:
    return circle_rotation(GOLDEN, irrational=True)


def torus_rotation(angles: Sequence[float], irrational: bool = False) -> ErgodicSystem:
    angles = tuple(float(a) for a in angles)
    if not angles:
        raise DimensionError("torus rotation needs at least one angle")
    for a in angles:
        if not (0.0 <= a < 1.0):
            raise InputError(f"rotation angle {a!r} outside [0, 1)")
    label = "torus:" + ",".join(repr(a) for a in angles)
    return ErgodicSystem("torus_rotation", angles, None, bool(irrational), label)


def finite_cycle(q: int) -> ErgodicSystem:
    q = int(q)
    if q < 1:
        raise InputError("finite cycle length must be positive")
    return ErgodicSystem("finite_cycle", (1.0 / q,), q, q == 1, f"cycle:{q}")


def parse_system(text: str) -> ErgodicSystem:
    """Parse ``rot:<angle>``, ``rot:golden`` or ``cycle:<q>``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    arg = arg.strip()
    if kind == "rot":
        if arg.lower() == "golden":
            return golden_rotation()
        try:
            return circle_rotation(float(arg))
        except ValueError:
            raise InputError(f"bad rotation angle {arg!r}") from None
    if kind == "cycle":
        try:
            return finite_cycle(int(arg))
        except ValueError:
            raise InputError(f"bad cycle length {arg!r}") from None
    raise InputError(f"unknown system descriptor {text!r}; expected rot:<angle>, rot:golden or cycle:<q>")


@dataclass(frozen=True)
class OrbitConfig:
    """How to sample an orbit.

    ``start=None`` draws a seeded random start. ``exact_orbit`` computes
    ``start + k * shift (mod 1)`` directly instead of accumulating additions.
    """

    n_steps: int
    burn_in: int = 0
    start: object = None
    seed: int = 0
    exact_orbit: bool = False

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise InputError("n_steps must be >= 1")
        if int(self.burn_in) < 0:
            raise InputError("burn_in must be >= 0")

    def resolve_start(self, system: ErgodicSystem) -> TorusPoint:
        if self.start is None:
            return system.random_point(self.seed)
        return system._check(self.start)


class OrbitStream:
    """Sequential reader of an orbit, handing out consecutive blocks."""

    def __init__(self, system: ErgodicSystem, start: TorusPoint, exact: bool = False):
        self.system = system
        self.start = start.as_array()
        self.shift = np.array(system.shift)
        self.k = 0
        if system.kind == "finite_cycle":
            self.mode = "cycle"
        else:
            self.mode = "exact" if exact else "add"
        self._state = self.start.copy()

    def take(self, m: int) -> np.ndarray:
        if m <= 0:
            return np.empty((0, self.system.dim))
        if self.mode == "add":
            pts = _kernels.rotation_orbit(self._state, self.shift, m)
            self._state = pts[m].copy()
            pts = pts[:m]
        else:
            k = np.arange(self.k, self.k + m)
            if self.mode == "cycle":
                q = self.system.length
                k = (k % q) / q
                pts = np.mod(self.start[None, :] + k[:, None], 1.0)
            else:
                pts = np.mod(self.start[None, :] + k[:, None] * self.shift[None, :], 1.0)
            pts[pts >= 1.0] = 0.0
        self.k += m
        return pts

    def skip(self, m: int) -> None:
        while m > 0:
            step = min(m, CHUNK)
            self.take(step)
            m -= step

    def chunks(self, n: int, size: int = CHUNK) -> Iterator[np.ndarray]:
        while n > 0:
            step = min(n, size)
            yield self.take(step)
            n -= step


def orbit_chunks(system: ErgodicSystem, config: OrbitConfig, n: int | None = None,
                 size: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield the post-burn-in orbit in blocks of at most ``size`` points."""
    stream = OrbitStream(system, config.resolve_start(system), exact=config.exact_orbit)
    stream.skip(int(config.burn_in))
    yield from stream.chunks(int(config.n_steps if n is None else n), size)


def effective_steps(system: ErgodicSystem, n_steps: int) -> int:
    """Number of orbit points averaged; whole periods only on a finite cycle."""
    if system.kind == "finite_cycle" and n_steps >= system.length:
        return (n_steps // system.length) * system.length
    return n_steps


def birkhoff_average(system: ErgodicSystem, f: Callable[[np.ndarray], np.ndarray],
                     config: OrbitConfig) -> float:
    """Time average ``(1/n) sum_k f(gamma^k w0)`` along a sampled orbit.

    Parameters
    ----------
    system : ErgodicSystem
    f : callable
        Vectorised observable. Receives an ``(m, dim)`` array of points and
        returns ``m`` real values.
    config : OrbitConfig

    Returns
    -------
    float

    Raises
    ------
    SingularSampleError
        If ``f`` returns a non-finite value; ``err.point`` is the offending
        point.
    """
    n = effective_steps(system, int(config.n_steps))
    total = 0.0
    for pts in orbit_chunks(system, config, n):
        vals = np.asarray(f(pts), dtype=float).reshape(-1)
        if vals.shape[0] != pts.shape[0]:
            raise DimensionError("dimension: observable must return one value per point")
        bad = ~np.isfinite(vals)
        if bad.any():
            point = TorusPoint(tuple(pts[np.argmax(bad)]))
            raise SingularSampleError(f"observable is not finite at {point.coords}", point=point)
        total += math.fsum(vals)
    return total / n
