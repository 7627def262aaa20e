"""Brute-force oracles computed directly from hidden supports.

These functions are the reference implementations the estimation pipeline is
tested against, and they decide the structural preconditions (identifiability,
flip-independence, Kruskal rank) of each recovery algorithm.  Linear
independence is decided by exact integer elimination, never by floating-point
rank.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import ceil, log2
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import SupportMatrix


def occ_bruteforce(m: SupportMatrix, C: Sequence[int], a: Sequence[int]) -> int:
    """Exact |occ(C, a)|: columns whose restriction to C equals pattern a."""
    if len(C) != len(a):
        raise ValueError("index tuple and pattern must have equal length")
    count = 0
    for j in range(m.ell):
        if all(bool(m.bits[i, j]) == bool(b) for i, b in zip(C, a)):
            count += 1
    return count


def exact_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank over the rationals of an integer matrix, by exact elimination."""
    mat = [[Fraction(x) for x in row] for row in rows]
    if not mat:
        return 0
    n_rows, n_cols = len(mat), len(mat[0])
    rank, pivot_row = 0, 0
    for col in range(n_cols):
        pivot = next((r for r in range(pivot_row, n_rows) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        lead = mat[pivot_row][col]
        for r in range(pivot_row + 1, n_rows):
            if mat[r][col] != 0:
                factor = mat[r][col] / lead
                mat[r] = [x - factor * y for x, y in zip(mat[r], mat[pivot_row])]
        pivot_row += 1
        rank += 1
        if pivot_row == n_rows:
            break
    return rank


def _columns_independent(columns: Sequence[tuple]) -> bool:
    rows = list(zip(*columns))
    return exact_rank(rows) == len(columns)


def _find_unique_pattern_column(columns, p, active_rows):
    """Index of the first column carrying a unique pattern of size <= p.

    (C, a) pairs are scanned in increasing |C|, then lexicographic C, then
    lexicographic a; per C, columns are bucketed by their restriction, and a
    singleton bucket is a certificate.  Returns None when no column has one.
    """
    for size in range(1, p + 1):
        for C in combinations(active_rows, size):
            buckets = Counter(tuple(col[i] for i in C) for col in columns)
            singles = sorted(a for a, cnt in buckets.items() if cnt == 1)
            if singles:
                a = singles[0]
                return next(
                    j for j, col in enumerate(columns)
                    if tuple(col[i] for i in C) == a
                )
    return None


def _eliminate_with_p(columns, p, active_rows) -> bool:
    """Run the recursive column elimination; True if every column falls."""
    remaining = list(columns)
    while remaining:
        victim = _find_unique_pattern_column(remaining, p, active_rows)
        if victim is None:
            return False
        remaining.pop(victim)
    return True


def minimal_p(m: SupportMatrix) -> int:
    """Smallest p for which recursive unique-pattern elimination succeeds.

    Requires distinct columns.  A single-column matrix is resolved as p = 1
    (any one index identifies it vacuously).  For ell' >= 2 distinct columns
    the answer is at most ceil(log2(ell')).
    """
    if not m.has_distinct_columns():
        raise ValueError("minimal_p requires deduplicated (distinct) columns")
    columns = m.columns()
    if len(columns) == 1:
        return 1
    active_rows = [i for i in range(m.n) if len({c[i] for c in columns}) > 1]
    bound = max(1, ceil(log2(len(columns))))
    for p in range(1, m.n + 1):
        if _eliminate_with_p(columns, p, active_rows):
            return p
        if p > bound + 2:  # theorem guarantees success well before this
            break
    raise AssertionError("elimination failed beyond the theoretical bound")


def is_flip_independent(m: SupportMatrix) -> tuple[bool, Optional[frozenset]]:
    """Whether some row complementation makes all columns independent.

    Search is restricted to subsets of U plus one off-support row (rows
    outside the support union are identical, so flipping more than one of
    them is redundant).  Flip sets are tried in increasing cardinality; the
    first witness F* is returned alongside the verdict.
    """
    if not m.has_distinct_columns():
        raise ValueError("is_flip_independent requires distinct columns")
    columns = m.columns()
    union = sorted({i for c in columns for i in range(m.n) if c[i]})
    u_prime = list(union)
    extra = next((i for i in range(m.n) if i not in set(union)), None)
    if extra is not None:
        u_prime.append(extra)

    if len(columns) > len(u_prime):
        return False, None  # more columns than potentially nonzero rows

    for size in range(len(u_prime) + 1):
        for F in combinations(u_prime, size):
            fset = set(F)
            flipped = [
                tuple(c[i] ^ 1 if i in fset else c[i] for i in u_prime)
                for c in columns
            ]
            if _columns_independent(flipped):
                return True, frozenset(F)
    return False, None


def kruskal_rank(m: SupportMatrix) -> int:
    """Largest r such that every r columns are linearly independent."""
    if not m.has_distinct_columns():
        raise ValueError("kruskal_rank requires distinct columns")
    columns = m.columns()
    if any(not any(c) for c in columns):
        return 0
    r = 0
    for size in range(1, len(columns) + 1):
        if all(_columns_independent(sub) for sub in combinations(columns, size)):
            r = size
        else:
            break
    return r


def supports_equal_up_to_permutation(a: Iterable, b: Iterable) -> bool:
    """Multiset equality of two collections of binary support vectors."""
    norm = lambda s: tuple(int(x) for x in s)
    return Counter(map(norm, a)) == Counter(map(norm, b))


def nzcount_true(inst_vectors, x: np.ndarray) -> int:
    """Number of components with literally nonzero inner product against x."""
    return sum(1 for v in inst_vectors if abs(float(np.dot(x, v))) > 1e-12)


def nzcount_overlap(m: SupportMatrix, x_support: Iterable[int]) -> int:
    """Components whose support meets supp(x); the MLR-effective nonzero count.

    For Gaussian-scaled binary queries the inner product is almost surely
    nonzero exactly when supports overlap, so this count is monotone under
    support inclusion (unlike raw inner products, which can cancel).
    """
    xs = set(x_support)
    return sum(
        1 for j in range(m.ell)
        if xs & set(np.flatnonzero(m.bits[:, j]).tolist())
    )
