import json
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixrec.errors import CffDeficiencyError, InconsistencyError
from mixrec.ground_truth import occ_bruteforce
from mixrec.model import GeneratorSpec, SupportMatrix, generate_instance, support_matrix
from mixrec.occ_engine import (
    OccParams, OccTable, build_occ_table, compute_singletons, compute_union_counts,
    intersections_from_unions, occ_from_intersections, singleton_batch, union_batch,
)
from mixrec.oracle import MLC, MLR, OracleHandle

from conftest import columns


def brute_union_counts(m: SupportMatrix, max_size: int) -> dict:
    """Reference |union of occ((i),1) over S| from the support matrix."""
    occ_sets = {
        i: {j for j in range(m.ell) if m.bits[i, j]}
        for i in range(m.n) if m.bits[i].any()
    }
    out = {}
    for size in range(2, max_size + 1):
        for S in combinations(sorted(occ_sets), size):
            out[frozenset(S)] = len(set().union(*(occ_sets[i] for i in S)))
    return out


def brute_singletons(m: SupportMatrix) -> np.ndarray:
    return np.array([occ_bruteforce(m, (i,), (1,)) for i in range(m.n)], dtype=int)


# --- pure integer stages -----------------------------------------------------

def test_intersections_hand_example():
    m = columns("1100", "0110")  # supports {0,1}, {1,2}
    inter = intersections_from_unions(brute_union_counts(m, 2), brute_singletons(m), 2, 2)
    assert inter[frozenset({0, 1})] == 1  # |S_0 ^ S_1| = 1 + 2 - 2


def test_intersections_disjoint_supports():
    m = columns("1100", "0011")
    inter = intersections_from_unions(brute_union_counts(m, 2), brute_singletons(m), 2, 2)
    assert inter[frozenset({0, 2})] == 0
    assert inter[frozenset({0, 3})] == 0


def test_occ_from_intersections_examples():
    m = columns("1100", "0110")
    inter = intersections_from_unions(brute_union_counts(m, 3), brute_singletons(m), 3, 2)
    # all-ones pattern equals the plain intersection
    assert occ_from_intersections(inter, 2, (0, 1), (1, 1)) == inter[frozenset({0, 1})]
    # single zero is the complement base case
    assert occ_from_intersections(inter, 2, (1,), (0,)) == 2 - 2
    assert occ_from_intersections(inter, 2, (0, 2), (1, 0)) == 1


def test_inconsistent_unions_raise():
    m = columns("1100", "0110")
    unions = brute_union_counts(m, 2)
    bad = dict(unions)
    bad[frozenset({0, 1})] = 5  # exceeds ell
    with pytest.raises(InconsistencyError):
        intersections_from_unions(bad, brute_singletons(m), 2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_inclusion_exclusion_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 10))
    ell = int(rng.integers(1, 5))
    bits = rng.random((n, ell)) < 0.4
    m = SupportMatrix(bits)
    singles = brute_singletons(m)
    inter = intersections_from_unions(brute_union_counts(m, 3), singles, 3, ell)
    u = [i for i in range(n) if singles[i] > 0]
    for size in range(1, min(3, len(u)) + 1):
        for C in combinations(u, size):
            for a in product((0, 1), repeat=size):
                assert occ_from_intersections(inter, ell, C, a) == occ_bruteforce(m, C, a)


# --- exact table --------------------------------------------------------------

def test_exact_table_matches_bruteforce_and_lookup_extension():
    m = columns("110000", "011000")
    table = OccTable.exact(m, s=3)
    for (C, a), v in table.counts.items():
        assert v == occ_bruteforce(m, C, a)
    # off-union extension: a one outside U is impossible, zeros drop out
    assert table.occ((0, 5), (1, 1)) == 0
    assert table.occ((0, 5), (1, 0)) == table.occ((0,), (1,))
    assert table.occ((4, 5), (0, 0)) == 2
    with pytest.raises(ValueError):
        table.occ((0, 0), (1, 1))  # repeated index


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_exact_table_partition_identity(seed):
    rng = np.random.default_rng(seed)
    bits = rng.random((7, 3)) < 0.45
    table = OccTable.exact(SupportMatrix(bits), s=3)
    u = table.u
    for size in range(1, min(3, len(u)) + 1):
        for C in combinations(u, size):
            assert sum(table.occ(C, a) for a in product((0, 1), repeat=size)) == 3


def test_table_json_export_shape():
    table = OccTable.exact(columns("110", "011"), s=2)
    payload = json.loads(table.to_json())
    assert payload["s"] == 2 and payload["ell"] == 2
    assert {"C", "a", "count"} <= set(payload["entries"][0])


def test_union_count_reduces_outside_u():
    table = OccTable.exact(columns("11000", "01100"), s=2)
    assert table.union_count({0, 1}) == 2
    assert table.union_count({0, 4}) == table.union_count({0}) == 1  # 4 is off U
    assert table.union_count({3, 4}) == 0


# --- oracle-driven stages ------------------------------------------------------

def _mlc_handle(seed=0, **kw):
    defaults = dict(n=30, ell=3, k=3, support_mode="random-disjointish",
                    value_distribution="positive-uniform", delta=0.5, eta=0.1, seed=seed)
    defaults.update(kw)
    spec = GeneratorSpec(**defaults)
    inst = generate_instance(spec)
    return OracleHandle(inst, MLC, seed=seed + 1), support_matrix(inst)


def test_singletons_single_component_is_support_indicator():
    h, sm = _mlc_handle(seed=2, ell=1, eta=0.0)
    res = compute_singletons(h, OccParams())
    assert np.array_equal(res.counts, sm.bits[:, 0].astype(int))
    assert res.stats.queries == res.stats.expected_queries == res.stats.rows * 2 * res.stats.batch


def test_singletons_union_design_levels():
    spec = GeneratorSpec(n=40, ell=3, k=4, support_mode="union-design",
                         value_distribution="positive-uniform", delta=0.5, eta=0.0, seed=9)
    inst = generate_instance(spec)
    sm = support_matrix(inst)
    h = OracleHandle(inst, MLC, seed=10)
    res = compute_singletons(h, OccParams())
    assert np.array_equal(res.counts, brute_singletons(sm))


def test_singletons_all_zero_instance():
    spec = GeneratorSpec(n=12, ell=2, k=0, seed=1)
    inst = generate_instance(spec)
    h = OracleHandle(inst, MLC, seed=2)
    res = compute_singletons(h, OccParams())
    assert not res.counts.any()


def test_union_counts_single_component():
    h, sm = _mlc_handle(seed=4, ell=1, eta=0.0)
    sing = compute_singletons(h, OccParams())
    res = compute_union_counts(h, 2, sing.counts, OccParams())
    for S, c in res.union_counts.items():
        assert c == 1
    assert res.stats.queries == res.stats.expected_queries


def test_union_counts_match_bruteforce():
    h, sm = _mlc_handle(seed=6)
    sing = compute_singletons(h, OccParams())
    res = compute_union_counts(h, 2, sing.counts, OccParams())
    want = brute_union_counts(sm, 2)
    assert res.union_counts == {k: v for k, v in want.items() if k in res.union_counts}
    assert set(res.union_counts) == set(want)


def test_cff_deficiency_error_when_scan_truncated():
    h, _ = _mlc_handle(seed=7)
    sing = compute_singletons(h, OccParams())
    with pytest.raises(CffDeficiencyError):
        compute_union_counts(h, 2, sing.counts, OccParams(max_scan_rows=1))


def test_build_occ_table_matches_bruteforce_end_to_end():
    for model in (MLC, MLR):
        spec = GeneratorSpec(n=24, ell=3, k=3, support_mode="random-disjointish",
                             value_distribution="pm-uniform", delta=1.0,
                             eta=0.1 if model == MLC else 0.0, sigma=1.0, seed=8)
        inst = generate_instance(spec)
        sm = support_matrix(inst)
        h = OracleHandle(inst, model, seed=13)
        table, stats = build_occ_table(h, 3, OccParams())
        for (C, a), v in table.counts.items():
            assert v == occ_bruteforce(sm, C, a), (model, C, a)
        assert stats.total_queries == stats.total_expected == h.ledger


def test_ledger_closed_forms():
    # singleton stage: m *

    h, _ = _mlc_handle(seed=14)
    params = OccParams(batch_T=20)
    res = compute_singletons(h, params)
    assert res.stats.queries == res.stats.rows * 2 * 20
    before = h.ledger
    union = compute_union_counts(h, 2, res.counts, params)
    assert h.ledger - before == union.stats.rows * (3 + 1) * 2 * union_batch(h, 1, params)
    assert union.stats.batch == 50  # ceil(2.5 * 20)


def test_batch_override_ratio():
    h, _ = _mlc_handle(seed=15)
    params = OccParams(batch_T=8)
    assert singleton_batch(h, 100, params) == 8
    assert union_batch(h, 100, params) == 20
