"""Command-line front end.

Every subcommand prints one JSON report on stdout::

    {"command": [...], "inputs": {...}, "payload": {...},
     "seed": ..., "version": ..., "wall_time": ...}

Exit status is 0 on success, 2 on input errors and 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cocycle import CrossedProductPolynomial, MatrixSymbol, ScalarSymbol
from .determinant import (
    brown_support,
    det_polynomial,
    det_z_curve,
    oracle_result,
    scalar_log_integral,
)
from .ergodic import OrbitConfig, parse_system
from .errors import FKDetError, InputError, NumericalError
from .heisenberg import FiberPlan, HeisenbergOperator, det_heisenberg, det_heisenberg_affine
from .lyapunov import LyapunovSpectrum, SpectrumConfig, lyapunov_spectrum, sum_rule_check
from .polynomials import log_mahler_jensen, log_mahler_quadrature, parse_poly1

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _finite(obj):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("-inf" if obj < 0 else "inf")
    return obj


def _spectrum_config(args) -> SpectrumConfig:
    orbit = OrbitConfig(args.steps, burn_in=1000, seed=args.seed)
    return SpectrumConfig(args.steps, cluster_tol=getattr(args, "tol", None), orbit=orbit)


def _spectrum_payload(spectrum: LyapunovSpectrum) -> dict:
    return {
        "spectrum": [{"chi": c, "r": r} for c, r in spectrum.pairs],
        "raw": list(spectrum.raw),
        "stderr": list(spectrum.stderr),
        "cluster_tol": spectrum.cluster_tol,
    }


def _read_matrix(path: str) -> MatrixSymbol:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read matrix file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"matrix file {path!r} is not valid JSON: {exc.msg}") from None
    grid = data.get("matrix") if isinstance(data, dict) else data
    if not isinstance(grid, list) or not grid or not all(isinstance(r, list) for r in grid):
        raise InputError('matrix file must hold a list of rows or {"matrix": [...]}')
    cells = [[ScalarSymbol.parse(str(c)) if isinstance(c, str) else ScalarSymbol.constant(c) for c in row]
             for row in grid]
    return MatrixSymbol.from_grid(cells, descriptor=Path(path).name)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_mahler(args) -> tuple:
    p = parse_poly1(args.poly)
    payload = {"log_det": log_mahler_jensen(p), "method": "jensen"}
    if args.quadrature_n:
        value, info = log_mahler_quadrature(p, args.quadrature_n, full_output=True)
        payload["quadrature"] = {"value": value, "n_points": info["n_points"], "skipped": info["skipped"],
                                 "difference": abs(value - payload["log_det"])}
    return {"poly": args.poly, "quadrature_n": args.quadrature_n}, payload


def cmd_lyapunov(args) -> tuple:
    A = _read_matrix(args.matrix)
    system = parse_system(args.system)
    config = _spectrum_config(args)
    spectrum = lyapunov_spectrum(A, system, config)
    rule = sum_rule_check(A, system, spectrum, config.orbit_config)
    payload = _spectrum_payload(spectrum)
    payload["sum_rule"] = rule._asdict()
    payload["sum_rule_gap"] = rule.gap
    inputs = {"matrix": args.matrix, "system": system.descriptor, "steps": args.steps, "tol": config.tol}
    return inputs, payload


def cmd_det(args) -> tuple:
    phi = CrossedProductPolynomial.parse(args.operator)
    system = parse_system(args.system)
    inputs = {"operator": args.operator, "system": system.descriptor, "route": args.route,
              "steps": args.steps, "q": args.q}
    payload = {}
    if args.route in ("formula", "both"):
        res = det_polynomial(phi, system, _spectrum_config(args), args.normalization)
        payload["formula"] = res.to_json()
        payload["formula"]["normalization"] = res.diagnostics.get("normalization")
        payload["log_det"] = res.log_det
    if args.route in ("oracle", "both"):
        res = oracle_result(phi, system, args.q)
        payload["oracle"] = res.to_json()
        payload.setdefault("log_det", res.log_det)
    if args.route == "both":
        a, b = payload["formula"]["log_det"], payload["oracle"]["log_det"]
        payload["discrepancy"] = abs(a - b) if isinstance(b, float) else "inf"
    return inputs, payload


def cmd_heisenberg(args) -> tuple:
    phi = HeisenbergOperator.parse(args.operator)
    per_fiber = SpectrumConfig(args.per_fiber_steps, orbit=OrbitConfig(args.per_fiber_steps, 1000, seed=args.seed))
    plan = FiberPlan(args.outer_nodes, per_fiber, threads=args.threads)
    inputs = {"operator": args.operator, "outer_nodes": args.outer_nodes,
              "per_fiber_steps": args.per_fiber_steps, "affine": args.affine}
    if args.affine:
        a = phi.affine_symbol()
        if a is None:
            raise InputError("--affine needs an operator of the form 1 - a(y, z)*x")
        res = det_heisenberg_affine(a, plan)
    else:
        res = det_heisenberg(phi, plan)
    return inputs, res.to_json()


def _log_radial_grid(spectrum: LyapunovSpectrum, n: int) -> np.ndarray:
    finite = [c for c in spectrum.exponents if math.isfinite(c)]
    lo = (min(finite) if finite else 0.0) - math.log(10.0)
    hi = (max(finite) if finite else 0.0) + math.log(10.0)
    return np.exp(np.linspace(lo, hi, n))


def cmd_brown(args) -> tuple:
    system = parse_system(args.system)
    config = _spectrum_config(args)
    inputs = {"symbol": args.symbol, "system": system.descriptor, "steps": args.steps}
    path = Path(args.symbol)
    if args.symbol.endswith(".json") or path.is_file():
        A = _read_matrix(args.symbol)
        spectrum = lyapunov_spectrum(A, system, config)
    else:
        a = ScalarSymbol.parse(args.symbol)
        spectrum = LyapunovSpectrum.scalar(scalar_log_integral(a, system, config.orbit_config).value)
    support = brown_support(spectrum)
    payload = support.to_json()
    payload.update(_spectrum_payload(spectrum))
    payload["curve_at_zero"] = det_z_curve(spectrum, [0.0])[0]
    if args.curve_csv:
        radii = _log_radial_grid(spectrum, args.curve_points)
        values = det_z_curve(spectrum, radii)
        with open(args.curve_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "log_det"])
            for r, v in zip(radii, values):
                w.writerow([repr(float(r)), repr(float(v))])
        payload["curve_csv"] = args.curve_csv
        inputs["curve_points"] = args.curve_points
    return inputs, payload


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fkdet", description="Fuglede-Kadison determinants in crossed products.")
    parser.add_argument("--output", "-o", help="write the JSON report to this file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, steps=1_000_000):
        p.add_argument("--steps", type=int, default=steps, help="orbit length for spectra and averages")
        p.add_argument("--seed", type=int, default=0, help="seed for the orbit start")

    p = sub.add_parser("mahler", help="log Mahler measure of a polynomial in y")
    p.add_argument("poly")
    p.add_argument("--quadrature-n", type=int, default=None, help="also evaluate the equi-angle rule with n nodes")
    p.set_defaults(func=cmd_mahler, seed=None)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum of a matrix cocycle read from JSON")
    p.add_argument("matrix", help='JSON file: list of rows of polynomial strings, or {"matrix": ...}')
    p.add_argument("system", nargs="?", default="rot:golden")
    common(p)
    p.add_argument("--tol", type=float, default=None, help="clustering tolerance")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("det", help="log det of sum a_i(y) U^i")
    p.add_argument("operator")
    p.add_argument("system", nargs="?", default="rot:golden")
    p.add_argument("--route", choices=("formula", "oracle", "both"), default="formula")
    p.add_argument("--q", type=int, default=4181, help="oracle size (snapped to a convergent denominator)")
    p.add_argument("--normalization", choices=("auto", "constant", "adjoint"), default="auto")
    common(p)
    p.set_defaults(func=cmd_det)

    p = sub.add_parser("heisenberg", help="log det in the discrete Heisenberg group algebra")
    p.add_argument("operator")
    p.add_argument("--outer-nodes", type=int, default=64)
    p.add_argument("--per-fiber-steps", type=int, default=100_000)
    p.add_argument("--affine", action="store_true", help="exact fiber integrals for 1 - a(y, z)*x")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="fiber worker threads (default FKDET_THREADS)")
    p.set_defaults(func=cmd_heisenberg)

    p = sub.add_parser("brown", help="Brown measure support of aU or AU")
    p.add_argument("symbol", help="scalar symbol text, or a JSON matrix file")
    p.add_argument("system", nargs="?", default="rot:golden")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--curve-csv", default=None, help="write log det(z - AU) on a log-radial grid")
    p.add_argument("--curve-points", type=int, default=200)
    p.set_defaults(func=cmd_brown)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        inputs, payload = args.func(args)
    except InputError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    except FKDetError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    report = {
        "command": argv,
        "inputs": inputs,
        "payload": payload,
        "seed": args.seed,
        "version": __version__,
        "wall_time": time.perf_counter() - t0,
    }
    text = json.dumps(_finite(report), indent=2, sort_keys=True, allow_nan=False)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
