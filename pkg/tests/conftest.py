import numpy as np
import pytest

from rdsi.model import DistortionSpec, JointSource


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def bsc_pair(crossover: float) -> JointSource:
    """Uniform binary X, Y through a binary symmetric channel."""
    p = crossover
    return JointSource.from_pxy([[0.5 * (1 - p), 0.5 * p], [0.5 * p, 0.5 * (1 - p)]])


def hamming(n: int) -> np.ndarray:
    return 1.0 - np.eye(n)


def hamming_spec(n: int = 2) -> DistortionSpec:
    return DistortionSpec(xhat_size=n, dd=hamming(n), de=hamming(n))


def random_binary_instance(rng: np.random.Generator):
    """Random valid binary instance satisfying the zero-distortion assumption."""
    pxy = rng.random((2, 2)) + 0.05
    pxy /= pxy.sum()
    dd = rng.random((2, 2))
    de = rng.random((2, 2))
    np.fill_diagonal(dd, 0.0)
    np.fill_diagonal(de, 0.0)
    return JointSource.from_pxy(pxy), DistortionSpec(xhat_size=2, dd=dd, de=de)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
