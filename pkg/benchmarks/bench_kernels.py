"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py --steps 20000

Reports seconds per million steps for orbit generation and the QR
recursion at several cocycle dimensions, plus the speed-up.
"""

import argparse
import time

import numpy as np

from fkdet import _kernels


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_orbit(kern, steps, repeat):
    start = np.array([0.1])
    shift = np.array([(5 ** 0.5 - 1) / 2])
    return _best_of(lambda: kern.rotation_orbit(start, shift, steps), repeat)


def bench_qr(kern, n, steps, repeat):
    rng = np.random.default_rng(0)
    mats = rng.normal(size=(steps, n, n)) + 1j * rng.normal(size=(steps, n, n))
    mats /= np.abs(np.linalg.det(mats))[:, None, None] ** (1.0 / n)

    def run():
        Q = np.eye(n, dtype=complex)
        kern.qr_chunk(mats, Q, np.zeros(n), 1, 0)

    return _best_of(run, repeat)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    kernels = {b: _kernels.get_kernels(b) for b in backends}
    if "numba" in kernels:  # compile outside the timed region
        bench_orbit(kernels["numba"], 10, 1)
        for n in (1, 2, 3, 4):
            bench_qr(kernels["numba"], n, 10, 1)

    per_m = 1e6 / args.steps
    rows = [("orbit", lambda k: bench_orbit(k, args.steps, args.repeat))]
    rows += [(f"qr N={n}", lambda k, n=n: bench_qr(k, n, args.steps, args.repeat)) for n in (1, 2, 3, 4)]
    header = f"{'kernel':<10}" + "".join(f"{b + ' s/1e6':>16}" for b in backends)
    if len(backends) == 2:
        header += f"{'speed-up':>12}"
    print(header)
    for name, fn in rows:
        times = {b: fn(kernels[b]) * per_m for b in backends}
        line = f"{name:<10}" + "".join(f"{times[b]:>16.3f}" for b in backends)
        if len(backends) == 2:
            line += f"{times['numpy'] / times['numba']:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
