import math

import numpy as np
import pytest

from magicsparse.engine.stab_terms import SparseDecomposition
from magicsparse.schemas import SamplingMode

PI_4 = math.pi / 4


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_decomposition(rng):
    """Random bit strings with random complex coefficients; no sampling invariants."""

    def factory(t: int, k: int, phi: float = PI_4) -> SparseDecomposition:
        bits = rng.integers(0, 2, size=(k, t), dtype=np.uint8)
        coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
        return SparseDecomposition(t=t, phi=phi, mode=SamplingMode.EXACT_FULL, bits=bits,
                                   coeffs=coeffs / math.sqrt(k))

    return factory
