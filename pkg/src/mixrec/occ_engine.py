"""The occ-table pipeline: singleton counts, union counts, inclusion-exclusion.

Stage 1 queries every row of a RUFF incidence matrix and reads off
|occ((i), 1)| per index from column-majority thresholds.  Stage 2 isolates
each subset S of the recovered support union with a CFF row and estimates
|union of occ((i), 1) over S| as the max nonzero count over the query bundle.
Stage 3 is pure integer arithmetic: intersections via inclusion-exclusion,
then any |occ(C, a)| via complement expansion.

Union counts are computed only for S inside the support union U: occ((i), 1)
is empty off U, so those unions reduce analytically, cutting the loop from
C(n, s) to C(|U|, s) subsets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Optional

import numpy as np

from .errors import CffDeficiencyError, InconsistencyError, NegativeCountError
from .ground_truth import occ_bruteforce
from .model import SupportMatrix
from .nzcount import NzParamsMlr, nzcount_mlc, nzcount_mlr
from .oracle import MLC, OracleHandle
from .set_families import (
    CFF_ROW_BLOCK, DEFAULT_C1, DEFAULT_C2, DEFAULT_C3, LazyCff, SetFamily,
    build_ruff, to_query_bundle,
)


@dataclass(frozen=True)
class OccParams:
    """Knobs of the estimation pipeline.

    ``batch_T`` of None means the analytic batch sizes: 4 l^2 ln(mn)/(1-2eta)^2
    per singleton row (times 36pi for MLR) and the same with constant 10 for
    union rows.  An explicit override T is the singleton batch; the union
    stage keeps the analytic 10:4 allocation, i.e. runs at ceil(T * 10/4).
    """

    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    c3: float = DEFAULT_C3
    batch_T: Optional[int] = None
    union_batch_ratio: float = 2.5
    family_seed: int = 0
    bundle_seed: int = 1_000_003
    max_scan_rows: int = 2_000_000


@dataclass
class StageStats:
    rows: int
    batch: int
    queries: int
    expected_queries: int


def _mlc_noise_factor(eta: float) -> float:
    return 1.0 / (1.0 - 2.0 * eta) ** 2


def singleton_batch(h: OracleHandle, m: int, params: OccParams) -> int:
    if params.batch_T is not None:
        return params.batch_T
    p = h.public
    base = 4.0 * p.ell ** 2 * math.log(m * p.n)
    if h.model == MLC:
        return math.ceil(base * _mlc_noise_factor(p.eta))
    return math.ceil(36.0 * math.pi * base)


def union_batch(h: OracleHandle, m: int, params: OccParams) -> int:
    if params.batch_T is not None:
        return math.ceil(params.batch_T * params.union_batch_ratio)
    p = h.public
    base = 10.0 * p.ell ** 2 * math.log(p.n * m)
    if h.model == MLC:
        return math.ceil(base * _mlc_noise_factor(p.eta))
    return math.ceil(36.0 * math.pi * base)


@lru_cache(maxsize=64)
def _mlr_params(ell: int, sigma: float, delta: float, T: int) -> NzParamsMlr:
    return NzParamsMlr(ell=ell, sigma=sigma, delta=delta, T=T)


def _nzcount(h: OracleHandle, x: np.ndarray, T: int) -> int:
    if h.model == MLC:
        return nzcount_mlc(h, x, T)
    p = h.public
    return nzcount_mlr(h, x, _mlr_params(p.ell, p.sigma, p.delta, T))


def _calls_per_nzcount(model: str, T: int) -> int:
    return 2 * T if model == MLC else T


@dataclass
class SingletonResult:
    counts: np.ndarray          # |occ((i), 1)| estimate per index
    family: SetFamily
    stats: StageStats


def compute_singletons(h: OracleHandle, params: OccParams) -> SingletonResult:
    """Estimate |occ((i), 1)| for every index from RUFF-row nonzero counts.

    An index belongs to level h when at least half of its RUFF set's rows
    report a nonzero count of h or more; the levels are nested by
    construction, and the singleton value is the largest level attained.
    """
    p = h.public
    t = max(1, p.ell * p.k)
    fam = build_ruff(p.n, t=t, alpha=0.5, seed=params.family_seed, c1=params.c1, c2=params.c2)
    T = singleton_batch(h, fam.m, params)
    before = h.ledger

    incidence = fam.incidence()
    w = np.empty(fam.m, dtype=int)
    for row in range(fam.m):
        w[row] = _nzcount(h, incidence[row], T)

    d = fam.kind.d
    counts = np.zeros(p.n, dtype=int)
    for j in range(p.n):
        wj = w[fam.sets[j]]
        level = 0
        for hlev in range(p.ell, -1, -1):
            if 2 * int(np.count_nonzero(wj >= hlev)) >= d:
                level = hlev
                break
        counts[j] = level

    stats = StageStats(
        rows=fam.m, batch=T,
        queries=h.ledger - before,
        expected_queries=fam.m * _calls_per_nzcount(h.model, T),
    )
    return SingletonResult(counts=counts, family=fam, stats=stats)


@dataclass
class UnionResult:
    union_counts: dict          # frozenset(S) -> |union of occ((i),1) over S|
    rows_used: dict             # frozenset(S) -> row index
    stats: StageStats


def compute_union_counts(h: OracleHandle, s: int, singletons: np.ndarray,
                         params: OccParams) -> UnionResult:
    """Estimate |union over S of occ((i), 1)| for every S in U of size s.

    Each S is served by the smallest CFF row whose support meets U exactly
    in S; the count is the max of ell + 1 independent nonzero-count
    estimates on that row (pigeonhole over pairwise independent scalings).
    """
    if s < 2:
        raise ValueError("union counts start at subset size 2")
    p = h.public
    U = [int(i) for i in np.flatnonzero(singletons > 0)]
    wanted = {frozenset(S) for S in combinations(U, s)}
    if not wanted:
        return UnionResult({}, {}, StageStats(0, 0, 0, 0))

    t = max(1, p.ell * p.k)
    fam = LazyCff(p.n, r=s, t=t, seed=params.family_seed + s, c3=params.c3)
    bundle = to_query_bundle(fam, h.model, p.ell, seed=params.bundle_seed + s)
    T = union_batch(h, fam.m, params)

    u_arr = np.array(U, dtype=int)
    rows_used: dict = {}
    scan_limit = min(fam.m, params.max_scan_rows)
    for block_start in range(0, scan_limit, CFF_ROW_BLOCK):
        block = fam.row_block(block_start // CFF_ROW_BLOCK)[:, u_arr]
        hits = np.flatnonzero(block.sum(axis=1) == s)
        for offset in hits:
            row = block_start + int(offset)
            if row >= scan_limit:
                break
            key = frozenset(int(u_arr[j]) for j in np.flatnonzero(block[offset]))
            if key in wanted:
                rows_used[key] = row
                wanted.remove(key)
        if not wanted:
            break
    if wanted:
        missing = sorted(tuple(sorted(k)) for k in wanted)[0]
        raise CffDeficiencyError(
            f"no CFF row isolates S={missing} within {scan_limit} rows; reseed the family"
        )

    before = h.ledger
    union_counts: dict = {}
    estimates = p.ell + 1  # pigeonhole over ell + 1 independent scalings
    for key in sorted(rows_used, key=lambda k: rows_used[k]):
        row = rows_used[key]
        sup = bundle.row_support(row)
        best = 0
        for est in range(estimates):
            wmat = est if bundle.num_matrices > 1 else 0
            x = np.zeros(p.n)
            x[sup] = bundle.row_values(wmat, row, sup)
            best = max(best, _nzcount(h, x, T))
        union_counts[key] = best

    stats = StageStats(
        rows=len(rows_used), batch=T,
        queries=h.ledger - before,
        expected_queries=len(rows_used) * estimates * _calls_per_nzcount(h.model, T),
    )
    return UnionResult(union_counts=union_counts, rows_used=rows_used, stats=stats)


def intersections_from_unions(union_counts: dict, singletons: np.ndarray,
                              s: int, ell: int) -> dict:
    """All |intersection over A of occ((i), 1)| for A in U with 1 <= |A| <= s.

    Inclusion-exclusion, solved upward in subset size:
    |I(A)| = (-1)^(|A|+1) (|union(A)| - sum over proper nonempty B of
    (-1)^(|B|+1) |I(B)|).  Exact integer arithmetic; any intermediate value
    outside [0, ell] marks the upstream estimates as inconsistent.
    """
    U = [int(i) for i in np.flatnonzero(singletons > 0)]
    inter: dict = {frozenset((i,)): int(singletons[i]) for i in U}
    for size in range(2, min(s, len(U)) + 1):
        for A in combinations(U, size):
            key = frozenset(A)
            if key not in union_counts:
                raise InconsistencyError(f"missing union count for {tuple(sorted(A))}")
            total = union_counts[key]
            acc = 0
            for sub_size in range(1, size):
                for B in combinations(A, sub_size):
                    acc += (-1) ** (sub_size + 1) * inter[frozenset(B)]
            value = (-1) ** (size + 1) * (total - acc)
            if not 0 <= value <= ell:
                raise InconsistencyError(
                    f"intersection of {tuple(sorted(A))} computed as {value}"
                )
            inter[key] = value
    return inter


def occ_from_intersections(intersections: dict, ell: int, C, a) -> int:
    """|occ(C, a)| by complement expansion over the zero positions of a.

    occ(C, a) = sum over B inside the zero set of (-1)^|B| |I(ones(a) + B)|,
    with the empty intersection read as ell.
    """
    ones = [i for i, b in zip(C, a) if b]
    zeros = [i for i, b in zip(C, a) if not b]
    value = 0
    for size in range(len(zeros) + 1):
        for B in combinations(zeros, size):
            key = frozenset(ones) | frozenset(B)
            base = ell if not key else intersections.get(frozenset(key))
            if base is None:
                raise InconsistencyError(f"missing intersection for {tuple(sorted(key))}")
            value += (-1) ** size * base
    if not 0 <= value <= ell:
        raise InconsistencyError(f"occ({tuple(C)}, {tuple(a)}) computed as {value}")
    return value


class OccTable:
    """Counts |occ(C, a)| for every C inside U with |C| <= s, all patterns.

    Lookups canonicalize (C, a) to sorted order and extend analytically off
    U: a 1 requested outside U forces the count to zero, and zeros outside U
    are dropped from C.  The table never consults the oracle after build.
    """

    def __init__(self, s: int, ell: int, n: int, u, counts: dict,
                 singleton: np.ndarray, union_counts: dict):
        self.s = s
        self.ell = ell
        self.n = n
        self.u = tuple(sorted(int(i) for i in u))
        self._uset = set(self.u)
        self.counts = counts                      # (sorted C tuple, bits tuple) -> int
        self.singleton = np.asarray(singleton, dtype=int)
        self.union_counts = dict(union_counts)

    def occ(self, C, a) -> int:
        if len(C) != len(a):
            raise ValueError("index tuple and pattern must have equal length")
        if len(set(C)) != len(C):
            raise ValueError("occ lookup requires distinct indices")
        pairs = sorted(zip((int(i) for i in C), (int(b) for b in a)))
        reduced = [(i, b) for i, b in pairs if i in self._uset]
        if any(b for i, b in pairs if i not in self._uset):
            return 0
        if not reduced:
            return self.ell
        key = (tuple(i for i, _ in reduced), tuple(b for _, b in reduced))
        if len(key[0]) > self.s:
            raise ValueError(f"table holds sizes up to {self.s}, asked for {len(key[0])}")
        return self.counts[key]

    def union_count(self, S) -> int:
        """|union over S of occ((i), 1)|; indices outside U contribute nothing."""
        reduced = frozenset(int(i) for i in S) & self._uset
        if not reduced:
            return 0
        if len(reduced) == 1:
            return int(self.singleton[next(iter(reduced))])
        return self.union_counts[reduced]

    def copy(self) -> "OccTable":
        return OccTable(self.s, self.ell, self.n, self.u, dict(self.counts),
                        self.singleton.copy(), dict(self.union_counts))

    def subtract_support(self, support_bits, weight: int) -> None:
        """Remove ``weight`` copies of a recovered support from every entry."""
        for (C, a), value in self.counts.items():
            if all(int(support_bits[i]) == b for i, b in zip(C, a)):
                new = value - weight
                if new < 0:
                    raise NegativeCountError(f"count for {(C, a)} driven to {new}")
                self.counts[(C, a)] = new

    def to_json(self) -> str:
        entries = [
            {"C": list(C), "a": "".join(str(b) for b in a), "count": int(v)}
            for (C, a), v in sorted(self.counts.items())
        ]
        return json.dumps({
            "s": self.s, "ell": self.ell, "n": self.n,
            "singleton": self.singleton.tolist(), "entries": entries,
        })

    @classmethod
    def exact(cls, m: SupportMatrix, s: int) -> "OccTable":
        """Ground-truth table straight from a support matrix (no oracle)."""
        singleton = np.array([occ_bruteforce(m, (i,), (1,)) for i in range(m.n)], dtype=int)
        u = [int(i) for i in np.flatnonzero(singleton > 0)]
        counts: dict = {}
        union_counts: dict = {}
        for size in range(1, min(s, len(u)) + 1):
            for C in combinations(u, size):
                for a in product((0, 1), repeat=size):
                    counts[(C, a)] = occ_bruteforce(m, C, a)
                union_counts[frozenset(C)] = m.ell - counts[(C, tuple([0] * size))]
        return cls(s=s, ell=m.ell, n=m.n, u=u, counts=counts,
                   singleton=singleton, union_counts=union_counts)


@dataclass
class BuildStats:
    singleton: StageStats
    unions: dict            # size -> StageStats
    total_queries: int
    total_expected: int


def build_occ_table(h: OracleHandle, s: int, params: OccParams | None = None):
    """Run the full estimation pipeline; returns (OccTable, BuildStats)."""
    if s < 1:
        raise ValueError("table size s must be >= 1")
    params = params or OccParams()
    p = h.public
    before = h.ledger

    sing = compute_singletons(h, params)
    U = [int(i) for i in np.flatnonzero(sing.counts > 0)]

    union_counts: dict = {}
    union_stats: dict = {}
    for size in range(2, min(s, len(U)) + 1):
        res = compute_union_counts(h, size, sing.counts, params)
        union_counts.update(res.union_counts)
        union_stats[size] = res.stats

    inter = intersections_from_unions(union_counts, sing.counts, s, p.ell)
    counts: dict = {}
    for size in range(1, min(s, len(U)) + 1):
        for C in combinations(U, size):
            for a in product((0, 1), repeat=size):
                counts[(C, a)] = occ_from_intersections(inter, p.ell, C, a)

    table = OccTable(s=s, ell=p.ell, n=p.n, u=U, counts=counts,
                     singleton=sing.counts, union_counts=union_counts)
    stats = BuildStats(
        singleton=sing.stats, unions=union_stats,
        total_queries=h.ledger - before,
        total_expected=sing.stats.expected_queries
        + sum(st.expected_queries for st in union_stats.values()),
    )
    return table, stats
