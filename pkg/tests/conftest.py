import numpy as np
import pytest

from trimodal.alignment import AlignedConceptSpace


def make_space(rng, n=10, dims=(6, 3, 9)) -> AlignedConceptSpace:
    """Random aligned space; standard-normal entries never give zero columns."""
    t, g, v = dims
    return AlignedConceptSpace(
        [f"c{i:03d}" for i in range(n)],
        rng.normal(size=(t, n)),
        rng.normal(size=(g, n)),
        rng.normal(size=(v, n)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
