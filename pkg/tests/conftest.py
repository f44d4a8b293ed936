import numpy as np
import pytest

from mtlasso.core import ProblemData
from mtlasso.solver import fit_multitask_lasso


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure steady state."""
    data = ProblemData(np.array([[1.0]]), np.array([[2.0]]))
    fit_multitask_lasso(data, 0.5)


def random_problem(rng, n, p, t, s=None, sigma=0.5, fill=1.0):
    """Small synthetic instance with a planted row-sparse signal."""
    x = rng.standard_normal((n, p))
    b = np.zeros((p, t))
    if s:
        rows = rng.choice(p, size=s, replace=False)
        b[rows, :] = fill * rng.standard_normal((s, t))
    y = x @ b + sigma * rng.standard_normal((n, t))
    return ProblemData(x, y), b
