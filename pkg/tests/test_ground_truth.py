import math
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixrec.ground_truth import (
    exact_rank, is_flip_independent, kruskal_rank, minimal_p, nzcount_overlap,
    occ_bruteforce, supports_equal_up_to_permutation,
)
from mixrec.model import SupportMatrix

from conftest import columns


# --- occ ------------------------------------------------------------------

def test_occ_examples():
    m = columns("11000", "01100")  # supports {0,1} and {1,2}
    assert occ_bruteforce(m, (1,), (1,)) == 2
    assert occ_bruteforce(m, (0, 2), (1, 1)) == 0


def test_occ_all_zero_matrix():
    m = SupportMatrix(np.zeros((5, 4), dtype=bool))
    assert occ_bruteforce(m, (0, 1, 2), (0, 0, 0)) == 4


@st.composite
def random_support_matrix(draw, max_n=8, max_ell=5):
    n = draw(st.integers(2, max_n))
    ell = draw(st.integers(1, max_ell))
    bits = draw(st.lists(st.lists(st.booleans(), min_size=n, max_size=n),
                         min_size=ell, max_size=ell))
    return SupportMatrix(np.array(bits, dtype=bool).T)


@settings(max_examples=60, deadline=None)
@given(random_support_matrix(), st.data())
def test_occ_partition_and_chain_identities(m, data):
    size = data.draw(st.integers(1, min(3, m.n - 1)))
    C = tuple(sorted(data.draw(
        st.lists(st.integers(0, m.n - 1), min_size=size, max_size=size, unique=True))))
    total = sum(occ_bruteforce(m, C, a) for a in product((0, 1), repeat=len(C)))
    assert total == m.ell
    j = data.draw(st.integers(0, m.n - 1))
    if j not in C:
        a = data.draw(st.tuples(*[st.integers(0, 1)] * len(C)))
        assert occ_bruteforce(m, C, a) == (
            occ_bruteforce(m, C + (j,), a + (1,)) + occ_bruteforce(m, C + (j,), a + (0,))
        )


# --- minimal_p --------------------------------------------------------------

def test_minimal_p_spec_example():
    # index 0 isolates the middle column; the survivors differ at index 2
    assert minimal_p(columns("1100", "0110", "1110")) == 1


def test_minimal_p_single_column_convention():
    assert minimal_p(columns("0110")) == 1
    assert minimal_p(columns("0000")) == 1


def test_minimal_p_needs_two_bits_for_all_two_bit_patterns():
    assert minimal_p(columns("00", "01", "10", "11")) == 2


def test_minimal_p_rejects_duplicates():
    with pytest.raises(ValueError):
        minimal_p(columns("10", "10"))


def test_minimal_p_bounded_for_random_distinct_columns(rng):
    for _ in range(25):
        ell = int(rng.integers(2, 5))
        n = int(rng.integers(4, 10))
        cols = set()
        while len(cols) < ell:
            cols.add(tuple(int(b) for b in rng.integers(0, 2, size=n)))
        m = SupportMatrix(np.array(sorted(cols), dtype=bool).T)
        assert minimal_p(m) <= max(1, math.ceil(math.log2(ell)))


# --- flip independence -------------------------------------------------------

def test_known_unflippable_matrix():
    # rows (0101), (0011), (1111), (1111)
    m = SupportMatrix(np.array(
        [[0, 1, 0, 1], [0, 0, 1, 1], [1, 1, 1, 1], [1, 1, 1, 1]], dtype=bool))
    ok, witness = is_flip_independent(m)
    assert not ok and witness is None


def test_identity_columns_flip_independent_with_empty_witness():
    ok, witness = is_flip_independent(columns("100", "010", "001"))
    assert ok and witness == frozenset()


def test_flip_search_matches_independent_reimplementation():
    # exhaustive oracle: test all flip subsets with a determinant-based rank
    m = columns("110", "011", "111")

    def det3(cols):
        (a, b, c), (d, e, f), (g, h, i) = zip(*cols)
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)

    expected = False
    base = m.columns()
    for flip_bits in product((0, 1), repeat=3):
        flipped = [tuple(c[i] ^ flip_bits[i] for i in range(3)) for c in base]
        if det3(flipped) != 0:
            expected = True
            break
    ok, _ = is_flip_independent(m)
    assert ok == expected


def test_flip_witness_uses_off_support_row():
    # columns (1,0), (0,1), (1,1) over n=3: dependent until the zero row flips
    m = columns("100", "010", "110")
    ok, witness = is_flip_independent(m)
    assert ok and witness == frozenset({2})


# --- kruskal rank -------------------------------------------------------------

def test_kruskal_rank_examples():
    assert kruskal_rank(columns("100", "010", "001")) == 3
    assert kruskal_rank(columns("100", "010", "110")) == 2
    assert kruskal_rank(columns("100", "000")) == 0


def test_kruskal_rank_rejects_duplicates():
    with pytest.raises(ValueError):
        kruskal_rank(columns("10", "10"))


def test_kruskal_rank_witnessed_dependency(rng):
    for _ in range(20):
        ell = int(rng.integers(2, 5))
        n = int(rng.integers(3, 8))
        cols = set()
        while len(cols) < ell:
            c = tuple(int(b) for b in rng.integers(0, 2, size=n))
            if any(c):
                cols.add(c)
        m = SupportMatrix(np.array(sorted(cols), dtype=bool).T)
        r = kruskal_rank(m)
        assert r >= 1
        if r < ell:
            dependent_exists = any(
                exact_rank(list(zip(*sub))) < r + 1
                for sub in combinations(m.columns(), r + 1)
            )
            assert dependent_exists


def test_exact_rank_matches_numpy_on_random_int_matrices(rng):
    for _ in range(100):
        rows = int(rng.integers(1, 6))
        cols_n = int(rng.integers(1, 6))
        mat = rng.integers(-3, 4, size=(rows, cols_n))
        assert exact_rank(mat.tolist()) == np.linalg.matrix_rank(mat.astype(float))


# --- multiset equality ---------------------------------------------------------

def test_supports_equal_up_to_permutation():
    assert supports_equal_up_to_permutation([(1, 1, 0), (0, 1, 1)], [(0, 1, 1), (1, 1, 0)])
    assert not supports_equal_up_to_permutation([(1, 1, 0), (1, 1, 0)], [(1, 1, 0)])


def test_nzcount_overlap_monotone_under_support_growth(rng):
    m = columns("1100", "0110", "0011")
    assert nzcount_overlap(m, {0}) <= nzcount_overlap(m, {0, 2})
    assert nzcount_overlap(m, set()) == 0
    assert nzcount_overlap(m, {0, 1, 2, 3}) == 3
