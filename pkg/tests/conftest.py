import os
import sys

import numpy as np
import pytest

# allow running the suite from a bare checkout, without installation
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), "src"))

from specsum import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so no single test pays for it."""
    A = np.tile(np.eye(2), (2, 1, 1))
    b = np.zeros((2, 2))
    idx = np.array([0], dtype=np.int64)
    x = np.ones(2)
    kernels.quad_value(A, b, idx, x)
    kernels.quad_gradient(A, b, idx, x)
    feats = np.ones((2, 2))
    labels = np.array([1.0, -1.0])
    kernels.logistic_value(feats, labels, 1e-4, idx, x)
    kernels.logistic_gradient(feats, labels, 1e-4, idx, x)


def make_logistic(n, N, seed, lam=1e-4):
    """Small synthetic logistic problem with labels from a planted model."""
    from specsum.problems import LogisticProblem

    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((N, n))
    w = rng.standard_normal(n)
    labels = np.where(feats @ w + 0.3 * rng.standard_normal(N) > 0, 1.0, -1.0)
    return LogisticProblem(feats, labels, lam, label=f"synthetic-logistic-{seed}")
