"""The three support-recovery algorithms plus the end-to-end driver.

All three consume an OccTable (exact or estimated; the code path is the
same) and emit the recovered support multiset.  None of them touches the
oracle: the query ledger is frozen once the table is built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import (
    AllFlipsFailedError,
    ConfigError,
    InconsistencyError,
    RecoveryFailure,
    StuckError,
)
from .occ_engine import OccParams, OccTable, build_occ_table
from .oracle import OracleHandle
from .tensor import bruteforce_cp, build_occ_tensor_order3, build_occ_tensor_orderw, jennrich


@dataclass(frozen=True)
class RecoveredSupports:
    """Unordered multiset of recovered supports (one entry per component)."""

    supports: tuple       # tuple of length-n binary tuples, multiplicity expanded
    method: str
    queries_used: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "queries_used": self.queries_used,
            "supports": ["".join(str(b) for b in s) for s in self.supports],
        })


def _zero_supports(n: int, ell: int, method: str) -> RecoveredSupports:
    return RecoveredSupports(supports=tuple(tuple([0] * n) for _ in range(ell)), method=method)


def recover_p_identifiable(table: OccTable, ell: int, p: int) -> RecoveredSupports:
    """Pattern-elimination recovery.

    Scans (C, a) pairs with C inside U, |C| <= p, in increasing size then
    lexicographic order.  A pair with count w > 0 qualifies when every
    one-index extension has count 0 or w; its group then shares one support,
    which is read off the extensions, recorded with multiplicity w, and
    subtracted from every stored entry.  Indices outside U extend
    analytically (count 0 on pattern 1), so they are never scanned.
    """
    if p < 1:
        raise ConfigError("p must be at least 1")
    work = table.copy()
    n = work.n
    U = list(work.u)
    if not U:
        return _zero_supports(n, ell, "p_identifiable")

    recovered: list[tuple[tuple, int]] = []
    count = 0
    while count < ell:
        found = None
        for size in range(1, min(p, len(U)) + 1):
            for C in combinations(U, size):
                for a in product((0, 1), repeat=size):
                    w = work.occ(C, a)
                    if w <= 0:
                        continue
                    bits = {}
                    qualified = True
                    for j in U:
                        if j in C:
                            continue
                        c_one = work.occ(C + (j,), a + (1,))
                        if c_one == w:
                            bits[j] = 1
                        elif c_one == 0:
                            bits[j] = 0
                        else:
                            qualified = False
                            break
                    if qualified:
                        found = (C, a, w, bits)
                        break
                if found:
                    break
            if found:
                break
        if not found:
            raise StuckError(
                f"no qualifying (C, a) with |C| <= {p}; instance not p-identifiable "
                "at this p or the table is corrupted"
            )
        C, a, w, bits = found
        support = np.zeros(n, dtype=int)
        for i, bit in zip(C, a):
            support[i] = bit
        for j, bit in bits.items():
            support[j] = bit
        work.subtract_support(support, w)
        recovered.append((tuple(int(b) for b in support), w))
        count += w
        if count > ell:
            raise InconsistencyError(f"recovered multiplicities sum to {count} > ell={ell}")

    supports = tuple(s for s, w in recovered for _ in range(w))
    return RecoveredSupports(supports=supports, method="p_identifiable")


def recover_flip_independent(table: OccTable, ell: int, n: int,
                             rng: np.random.Generator) -> RecoveredSupports:
    """Flip-search recovery via order-3 tensor decomposition.

    Candidate flip sets F run over subsets of U' = U + one off-support index,
    by increasing cardinality (plain independence, F = empty, comes first).
    For each F the flipped-pattern occ tensor is decomposed; the first F
    whose decomposition reconstructs exactly, accounts for all ell
    components, and flips back onto U wins.
    """
    U = list(table.u)
    if not U:
        return _zero_supports(n, ell, "flip_independent")
    u_set = set(U)
    extra = next((i for i in range(n) if i not in u_set), None)
    u_prime = sorted(U + [extra]) if extra is not None else sorted(U)

    for size in range(len(u_prime) + 1):
        for F in combinations(u_prime, size):
            tensor = build_occ_tensor_order3(table, F, u_prime)
            try:
                res = jennrich(tensor, rng)
            except RecoveryFailure:
                continue
            if sum(res.weights) != ell:
                continue
            supports = []
            valid = True
            for z, lam in zip(res.factors, res.weights):
                bits = np.zeros(n, dtype=int)
                for pos, idx in enumerate(u_prime):
                    bits[idx] = z[pos]
                for idx in F:
                    bits[idx] ^= 1
                if any(bits[i] and i not in u_set for i in u_prime):
                    valid = False  # support leaked outside U: wrong flip set
                    break
                supports.extend([tuple(int(b) for b in bits)] * lam)
            if valid:
                return RecoveredSupports(supports=tuple(supports), method="flip_independent")
    raise AllFlipsFailedError("no flip set yields an exactly reconstructing decomposition")


def kruskal_order(ell: int, r: int) -> int:
    """Smallest tensor order w with w (r - 1) >= 2 ell - 1, floored at 3."""
    if r < 2:
        raise ConfigError("Kruskal-rank recovery needs r >= 2")
    return max(3, math.ceil((2 * ell - 1) / (r - 1)))


def recover_kruskal(table: OccTable, ell: int, r: int,
                    rng: np.random.Generator) -> RecoveredSupports:
    """Single-tensor recovery under a Kruskal-rank promise.

    Builds the order-w all-ones occ tensor over U with w = kruskal_order
    and decomposes it: simultaneous diagonalization when w = 3, exhaustive
    search otherwise.  Components with empty support are invisible to the
    tensor and are returned as explicit zero supports.
    """
    w = kruskal_order(ell, r)
    U = list(table.u)
    n = table.n
    if not U:
        return _zero_supports(n, ell, "kruskal")

    if w == 3:
        tensor = build_occ_tensor_order3(table, frozenset(), sorted(U))
        res = jennrich(tensor, rng)
    else:
        tensor = build_occ_tensor_orderw(table, w, sorted(U))
        res = bruteforce_cp(tensor, ell)
    total = sum(res.weights)
    if total > ell:
        raise InconsistencyError(f"decomposition weights sum to {total} > ell={ell}")

    supports = []
    for z, lam in zip(res.factors, res.weights):
        bits = np.zeros(n, dtype=int)
        for pos, idx in enumerate(sorted(U)):
            bits[idx] = z[pos]
        supports.extend([tuple(int(b) for b in bits)] * lam)
    supports.extend([tuple([0] * n)] * (ell - total))
    return RecoveredSupports(supports=tuple(supports), method="kruskal")


@dataclass(frozen=True)
class Strategy:
    kind: str             # "p_identifiable" | "flip_independent" | "kruskal"
    p: int | None = None
    r: int | None = None

    def table_size(self, ell: int) -> int:
        if self.kind == "p_identifiable":
            return self.p + 1
        if self.kind == "flip_independent":
            return 3
        return kruskal_order(ell, self.r)


def parse_strategy(text: str) -> Strategy:
    """CLI strategy syntax: ``p-ident:<p>``, ``flip``, or ``kruskal:<r>``."""
    if text == "flip":
        return Strategy(kind="flip_independent")
    head, sep, arg = text.partition(":")
    if head == "p-ident" and sep:
        p = int(arg)
        if p < 1:
            raise ConfigError("p must be >= 1")
        return Strategy(kind="p_identifiable", p=p)
    if head == "kruskal" and sep:
        r = int(arg)
        if r < 2:
            raise ConfigError("r must be >= 2")
        return Strategy(kind="kruskal", r=r)
    raise ConfigError(f"unknown strategy {text!r}")


def recover(h: OracleHandle, strategy: Strategy, params: OccParams | None = None,
            aux_seed: int = 0) -> RecoveredSupports:
    """End-to-end driver: build the occ table, then run the chosen algorithm.

    ``aux_seed`` seeds the non-oracle randomness (tensor slice mixtures).
    Failures propagate as RecoveryFailure subclasses; the harness records
    them as failed trials rather than errors.
    """
    p = h.public
    s = strategy.table_size(p.ell)
    table, _stats = build_occ_table(h, s, params)
    rng = np.random.default_rng(aux_seed)
    if strategy.kind == "p_identifiable":
        result = recover_p_identifiable(table, p.ell, strategy.p)
    elif strategy.kind == "flip_independent":
        result = recover_flip_independent(table, p.ell, p.n, rng)
    else:
        result = recover_kruskal(table, p.ell, strategy.r, rng)
    return RecoveredSupports(supports=result.supports, method=result.method,
                             queries_used=h.ledger)
