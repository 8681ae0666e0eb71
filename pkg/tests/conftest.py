import numpy as np
import pytest

from dsubset import kernels


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run the test once per available kernel backend."""
    with kernels.using(request.param):
        yield request.param


def gaussian(n, m, seed):
    return np.random.default_rng(seed).standard_normal((n, m))


def near_collinear(n, m, cond, seed):
    """Rows of ``U diag(s) V'`` with singular values log-spaced down to 1/cond."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, m)))
    V, _ = np.linalg.qr(rng.standard_normal((m, m)))
    s = np.logspace(0, -np.log10(cond), m)
    return (U * s) @ V.T
