import math

import numpy as np
import pytest

from fkdet import _kernels

LOG2 = math.log(2.0)
LOG3 = math.log(3.0)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    return request.param


def random_poly_coeffs(rng, degree, avoid_circle=1e-2):
    """Random complex coefficients with no root within ``avoid_circle`` of |z| = 1."""
    while True:
        c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
        if degree == 0 or np.all(np.abs(np.abs(np.roots(c[::-1])) - 1.0) > avoid_circle):
            return c
