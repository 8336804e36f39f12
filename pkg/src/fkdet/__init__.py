"""Fuglede-Kadison determinants in crossed products ``L^inf(Omega) x Z``.

Scalar and matrix operators are handled through integrals of ``log|a|`` and
Lyapunov spectra of matrix cocycles over rotations; the discrete Heisenberg
group algebra through its decomposition into rotation algebras.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .cocycle import (
    CrossedProductPolynomial,
    LogIntegral,
    MatrixSymbol,
    ScalarSymbol,
    log_abs_integral,
    matrix_cocycle,
    scalar_cocycle,
)
from .determinant import (
    BrownMeasureSupport,
    DetResult,
    best_convergent,
    brown_support,
    build_companion,
    det_abelian,
    det_b_minus_aU,
    det_one_minus_aU,
    det_one_minus_AU,
    det_polynomial,
    det_z_curve,
    det_z_minus_aU,
    finite_dim_oracle,
    oracle_result,
)
from .ergodic import (
    GOLDEN,
    ErgodicSystem,
    OrbitConfig,
    TorusPoint,
    birkhoff_average,
    circle_rotation,
    finite_cycle,
    golden_rotation,
    parse_system,
    torus_rotation,
)
from .errors import FKDetError, InputError, NumericalError
from .heisenberg import (
    FiberPlan,
    HeisenbergOperator,
    HeisenbergResult,
    det_heisenberg,
    det_heisenberg_affine,
    fiber_operator,
    fiber_system,
)
from .lyapunov import LyapunovSpectrum, SpectrumConfig, lyapunov_spectrum, sum_rule_check
from .polynomials import (
    LaurentPoly1,
    LaurentPoly2,
    log_mahler_jensen,
    log_mahler_quadrature,
    parse_poly1,
    parse_poly2,
    roots,
)
