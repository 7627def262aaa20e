import numpy as np
import pytest

from mixrec.model import SupportMatrix


def columns(*bitstrings: str) -> SupportMatrix:
    """Support matrix from column bitstrings, e.g. columns('1100', '0110')."""
    n = len(bitstrings[0])
    bits = np.zeros((n, len(bitstrings)), dtype=bool)
    for j, s in enumerate(bitstrings):
        assert len(s) == n
        for i, ch in enumerate(s):
            bits[i, j] = ch == "1"
    return SupportMatrix(bits)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
