"""Hot loops: orbit generation and the discrete-QR Lyapunov recursion.

Two interchangeable implementations live here. The numba versions are
compiled with ``@njit``; the pure-numpy versions are plain Python/numpy and
produce the same numbers (bit-identical for orbits, round-off level for QR).
The numpy path is used when numba is unavailable or when the environment
variable ``FKDET_DISABLE_NUMBA`` is set to a truthy value at import time.

Status codes returned by the QR kernels:
    0 ok, 1 degenerate (|R_ii| < 1e-300), 2 overflow (non-finite values).
"""

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is installed in CI
    numba = None

STATUS_OK = 0
STATUS_DEGENERATE = 1
STATUS_OVERFLOW = 2

TINY_PIVOT = 1e-300


def _flag(name):
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _flag("FKDET_DISABLE_NUMBA")
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pure numpy / python implementations
# ---------------------------------------------------------------------------

def _orbit_numpy(start, shift, n):
    """Return ``n + 1`` points of the rotation orbit by repeated mod-1 addition.

    Row ``k`` holds ``gamma^k(start)``; the extra last row is the state to
    resume from. Python floats keep the arithmetic identical to the compiled
    loop.
    """
    d = start.shape[0]
    out = np.empty((n + 1, d))
    for i in range(d):
        t = float(start[i])
        a = float(shift[i])
        col = [0.0] * (n + 1)
        for k in range(n + 1):
            col[k] = t
            t += a
            if t >= 1.0:
                t -= 1.0
        out[:, i] = col
    return out


def _reortho_numpy(Q, logsum):
    q, r = np.linalg.qr(Q)
    d = np.diagonal(r)
    absd = np.abs(d)
    if not (np.all(np.isfinite(absd)) and np.all(np.isfinite(q))):
        return STATUS_OVERFLOW
    if np.any(absd < TINY_PIVOT):
        return STATUS_DEGENERATE
    logsum += np.log(absd)
    # absorb the phases of diag(R) into Q so that R has a positive diagonal
    Q[...] = q * (d / absd)
    return STATUS_OK


def _qr_chunk_numpy(mats, Q, logsum, every, phase):
    # overflow is detected from the result, not reported as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(mats.shape[0]):
            Q[...] = mats[k].T @ Q
            phase += 1
            if phase == every:
                status = _reortho_numpy(Q, logsum)
                if status != STATUS_OK:
                    return phase, status
                phase = 0
    return phase, STATUS_OK


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _orbit_loop(start, shift, n):
    d = start.shape[0]
    out = np.empty((n + 1, d))
    t = start.copy()
    for k in range(n + 1):
        for i in range(d):
            out[k, i] = t[i]
            s = t[i] + shift[i]
            if s >= 1.0:
                s -= 1.0
            t[i] = s
    return out


def _mgs_loop(Q, logsum):
    # modified Gram-Schmidt, two passes per column; R_jj > 0 by construction
    n = Q.shape[0]
    m = Q.shape[1]
    for j in range(m):
        for _ in range(2):
            for i in range(j):
                r = 0j
                for l in range(n):
                    r += Q[l, i].conjugate() * Q[l, j]
                for l in range(n):
                    Q[l, j] -= r * Q[l, i]
        scale = 0.0
        for l in range(n):
            a = abs(Q[l, j])
            if not math.isfinite(a):
                return STATUS_OVERFLOW
            if a > scale:
                scale = a
        if scale == 0.0:
            return STATUS_DEGENERATE
        acc = 0.0
        for l in range(n):
            a = abs(Q[l, j]) / scale
            acc += a * a
        nrm = scale * math.sqrt(acc)
        if not math.isfinite(nrm):
            return STATUS_OVERFLOW
        if nrm < TINY_PIVOT:
            return STATUS_DEGENERATE
        logsum[j] += math.log(nrm)
        for l in range(n):
            Q[l, j] /= nrm
    return STATUS_OK


def _qr_chunk_loop(mats, Q, logsum, every, phase):
    n = Q.shape[0]
    tmp = np.empty_like(Q)
    for k in range(mats.shape[0]):
        a = mats[k]
        # row-vector action v -> v A  is  w -> A^T w  on columns
        for i in range(n):
            for j in range(n):
                s = 0j
                for l in range(n):
                    s += a[l, i] * Q[l, j]
                tmp[i, j] = s
        for i in range(n):
            for j in range(n):
                Q[i, j] = tmp[i, j]
        phase += 1
        if phase == every:
            status = _reortho_numba(Q, logsum)
            if status != STATUS_OK:
                return phase, status
            phase = 0
    return phase, STATUS_OK


if HAVE_NUMBA:
    _orbit_numba = numba.njit(cache=True, nogil=True)(_orbit_loop)
    _reortho_numba = numba.njit(cache=True, nogil=True)(_mgs_loop)
    _qr_chunk_numba = numba.njit(cache=True, nogil=True)(_qr_chunk_loop)


_IMPLS = {
    "numpy": SimpleNamespace(
        name="numpy",
        rotation_orbit=_orbit_numpy,
        reorthonormalize=_reortho_numpy,
        qr_chunk=_qr_chunk_numpy,
    ),
}
if HAVE_NUMBA:
    _IMPLS["numba"] = SimpleNamespace(
        name="numba",
        rotation_orbit=_orbit_numba,
        reorthonormalize=_reortho_numba,
        qr_chunk=_qr_chunk_numba,
    )


def get_kernels(backend=None):
    """Return the kernel namespace for ``backend`` ('numba' or 'numpy').

    ``None`` selects the active backend.
    """
    name = BACKEND if backend is None else backend
    try:
        return _IMPLS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(_IMPLS)}") from None


_active = get_kernels()
rotation_orbit = _active.rotation_orbit
reorthonormalize = _active.reorthonormalize
qr_chunk = _active.qr_chunk
