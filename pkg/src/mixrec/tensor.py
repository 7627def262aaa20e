"""Symmetric occ tensors and their exact CP decompositions.

Order-3 tensors are decomposed by simultaneous diagonalization (random slice
mixtures, then a generalized eigenproblem solved through a pseudo-inverse);
higher orders fall back to pruned exhaustive search over binary factors.
Both return integer-weighted binary factors and insist on exact integer
reconstruction, which is what lets the flip-search reject wrong flip sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import (
    EnumerationBudgetExceededError,
    NoDecompositionError,
    RankDeficientError,
    ReconstructionMismatchError,
)

RANK_TOL = 1e-8          # singular values below tol * s_max count as zero
EIGEN_GAP_TOL = 1e-6     # relative eigenvalue gap that triggers one redraw
SUPPORT_THRESHOLD = 2e-3  # |entry| above this marks a support index


@dataclass(frozen=True)
class SymmetricTensor:
    """Dense order-w tensor over a restricted index set.

    ``index_set`` maps axis positions to original vector indices; ``data``
    has shape (len(index_set),) * order.  Occ-derived tensors are symmetric
    with nonnegative integer entries bounded by the mixture size.
    """

    order: int
    index_set: tuple
    data: np.ndarray

    def __post_init__(self):
        if self.order < 3:
            raise ValueError("tensor order must be at least 3")
        if self.data.shape != (len(self.index_set),) * self.order:
            raise ValueError("data shape does not match index set and order")


@dataclass(frozen=True)
class CpResult:
    """factors[i] is a binary vector over index_set with weight weights[i]."""

    factors: tuple        # tuple of binary tuples, aligned with index_set
    weights: tuple        # positive integer multiplicities
    method: str           # "jennrich" | "bruteforce"


def _collapsed_occ(table, tuple_indices, flip_set) -> int:
    distinct = sorted(set(tuple_indices))
    pattern = [0 if i in flip_set else 1 for i in distinct]
    return table.occ(tuple(distinct), tuple(pattern))


def build_occ_tensor_order3(table, flip_set, index_set) -> SymmetricTensor:
    """Order-3 tensor of flipped-support occ counts.

    Entry (i1, i2, i3) counts components whose support, complemented on the
    flip set, is 1 on all three indices; repeated indices collapse to their
    distinct set.  Requires table size >= 3.
    """
    idx = tuple(sorted(index_set))
    if table.s < min(3, len(idx)):
        raise ValueError("occ table too small for the collapsed index tuples")
    u = len(idx)
    fset = set(flip_set)
    cache: dict = {}
    data = np.zeros((u, u, u), dtype=np.int64)
    for p1, p2, p3 in product(range(u), repeat=3):
        key = frozenset((idx[p1], idx[p2], idx[p3]))
        if key not in cache:
            cache[key] = _collapsed_occ(table, key, fset)
        data[p1, p2, p3] = cache[key]
    return SymmetricTensor(order=3, index_set=idx, data=data)


def build_occ_tensor_orderw(table, w: int, index_set) -> SymmetricTensor:
    """Order-w all-ones-pattern occ tensor over the index set."""
    idx = tuple(sorted(index_set))
    if table.s < min(w, len(idx)):
        raise ValueError("occ table too small for the collapsed index tuples")
    u = len(idx)
    cache: dict = {}
    data = np.zeros((u,) * w, dtype=np.int64)
    for positions in product(range(u), repeat=w):
        key = frozenset(idx[p] for p in positions)
        if key not in cache:
            cache[key] = _collapsed_occ(table, key, set())
        data[positions] = cache[key]
    return SymmetricTensor(order=w, index_set=idx, data=data)


def _rank_one(z: np.ndarray, order: int) -> np.ndarray:
    acc = z
    for _ in range(order - 1):
        acc = np.multiply.outer(acc, z)
    return acc


def _reconstruct(factors, weights, order: int) -> np.ndarray:
    terms = [lam * _rank_one(np.array(z, dtype=np.int64), order)
             for z, lam in zip(factors, weights)]
    return sum(terms)


def _solve_weights(factors, tensor: SymmetricTensor):
    """Integer multiplicities via least squares over the rank-one basis."""
    basis = [_rank_one(np.array(z, dtype=float), tensor.order).ravel() for z in factors]
    A = np.stack(basis, axis=1)
    coeffs, *_ = np.linalg.lstsq(A, tensor.data.ravel().astype(float), rcond=None)
    weights = [int(round(c)) for c in coeffs]
    if any(abs(c - wgt) > 1e-6 for c, wgt in zip(coeffs, weights)):
        return None
    if any(wgt < 1 for wgt in weights):
        return None
    return weights


def jennrich(t: SymmetricTensor, rng: np.random.Generator,
             expected_rank: int | None = None) -> CpResult:
    """Order-3 CP decomposition by simultaneous diagonalization.

    Random unit vectors a, b weight the tensor slices into T1, T2; the
    eigenvectors of T1 pinv(T2) with the largest-magnitude eigenvalues are
    rescaled to unit max entry, thresholded to binary supports, and checked
    by exact integer reconstruction.  Linear dependence of the true factors
    shows up as a rank drop (RankDeficientError when the caller knows the
    expected factor count) or as a reconstruction mismatch.
    """
    if t.order != 3:
        raise ValueError("jennrich applies to order-3 tensors")
    u = len(t.index_set)
    data = t.data.astype(float)

    last_error: Exception | None = None
    for _attempt in range(2):  # one redraw on a degenerate eigenvalue draw
        a = rng.standard_normal(u)
        a /= np.linalg.norm(a)
        b = rng.standard_normal(u)
        b /= np.linalg.norm(b)
        T1 = np.tensordot(data, a, axes=([2], [0]))
        T2 = np.tensordot(data, b, axes=([2], [0]))

        svals = np.linalg.svd(T1, compute_uv=False)
        detected = int(np.sum(svals > RANK_TOL * max(svals[0], 1e-300)))
        if detected == 0:
            raise RankDeficientError("all slice singular values vanish")
        if expected_rank is not None and detected < expected_rank:
            raise RankDeficientError(
                f"slice rank {detected} below expected factor count {expected_rank}"
            )

        M = T1 @ np.linalg.pinv(T2, rcond=RANK_TOL)
        eigvals, eigvecs = np.linalg.eig(M)
        order = np.argsort(-np.abs(eigvals))
        lead = order[:detected]
        scale = max(float(np.abs(eigvals[lead]).max()), 1e-300)
        gaps = [
            abs(eigvals[i] - eigvals[j])
            for i, j in combinations(lead.tolist(), 2)
        ]
        if gaps and min(gaps) < EIGEN_GAP_TOL * scale:
            last_error = RankDeficientError("degenerate eigenvalues; factors not separable")
            continue

        factors = []
        for idx in lead:
            v = np.real(eigvecs[:, idx])
            peak = v[np.argmax(np.abs(v))]
            if peak == 0:
                continue
            v = v / peak
            factors.append(tuple(int(abs(x) > SUPPORT_THRESHOLD) for x in v))
        distinct = sorted(set(f for f in factors if any(f)))
        if not distinct:
            last_error = ReconstructionMismatchError("thresholding produced no factors")
            continue

        weights = _solve_weights(distinct, t)
        if weights is None:
            last_error = ReconstructionMismatchError("no integer weights reproduce the tensor")
            continue
        recon = _reconstruct(distinct, weights, t.order)
        if not np.array_equal(recon, t.data):
            last_error = ReconstructionMismatchError("decomposition does not reproduce the tensor")
            continue
        return CpResult(factors=tuple(distinct), weights=tuple(weights), method="jennrich")

    raise last_error if last_error is not None else ReconstructionMismatchError("decomposition failed")


def bruteforce_cp(t: SymmetricTensor, ell: int, budget: int = 100_000_000) -> CpResult:
    """Exhaustive CP search over distinct binary factors with multiplicities.

    Canonical depth-first order: the pivot is the smallest index with a
    nonzero residual diagonal; every remaining factor is zero below the
    pivot, and the factors containing it form a lexicographically increasing
    group that must clear the pivot's diagonal before the search moves on.
    The residual stays entrywise nonnegative (all terms are nonnegative), so
    any negative entry prunes immediately.  Total weight is capped by the
    mixture size; node visits beyond ``budget`` abort.
    """
    u = len(t.index_set)
    if int(t.data.min()) < 0:
        raise NoDecompositionError("negative entries cannot be decomposed")
    diag_index = tuple(np.arange(u) for _ in range(t.order))
    nodes = [0]
    outer_cache: dict = {}

    def group_candidates(pivot: int, lex_from: tuple, residual: np.ndarray) -> list:
        # supports with zeros below the pivot, a one at the pivot, >= lex_from;
        # any other index must still co-occur with the pivot in the residual
        pair_base = (pivot,) * (t.order - 1)
        free = [i for i in range(pivot + 1, u) if residual[pair_base + (i,)] > 0]
        out = []
        for picks in product((0, 1), repeat=len(free)):
            cand = [0] * u
            cand[pivot] = 1
            for pos, bit in zip(free, picks):
                cand[pos] = bit
            cand = tuple(cand)
            if cand >= lex_from:
                out.append(cand)
        return out

    def next_lex(bits: tuple) -> tuple:
        lst = list(bits)
        for i in range(len(lst) - 1, -1, -1):
            if lst[i] == 0:
                lst[i] = 1
                return tuple(lst)
            lst[i] = 0
        return (1,) * (len(bits) + 1)  # past the end; matches nothing

    def rank_one(cand: tuple) -> np.ndarray:
        if cand not in outer_cache:
            outer_cache[cand] = _rank_one(np.array(cand, dtype=np.int64), t.order)
        return outer_cache[cand]

    def rec(residual: np.ndarray, remaining: int, lex_from: tuple, last_pivot: int):
        nodes[0] += 1
        if nodes[0] > budget:
            raise EnumerationBudgetExceededError(f"search exceeded {budget} nodes")
        if not residual.any():
            return []
        if remaining == 0:
            return None
        diag = residual[diag_index]
        live = np.flatnonzero(diag > 0)
        if len(live) == 0:
            return None  # off-diagonal residue with a clean diagonal: dead end
        pivot = int(live[0])
        if int(diag[pivot]) > remaining:
            return None  # the pivot's diagonal cannot be covered any more
        if pivot != last_pivot:
            lex_from = (0,) * u  # new group: restart the in-group ordering
        for cand in group_candidates(pivot, lex_from, residual):
            outer = rank_one(cand)
            max_lam = min([remaining] + [int(diag[i]) for i in range(u) if cand[i]])
            for lam in range(1, max_lam + 1):
                trial = residual - lam * outer
                if int(trial.min()) < 0:
                    break
                found = rec(trial, remaining - lam, next_lex(cand), pivot)
                if found is not None:
                    return [(cand, lam)] + found
        return None

    solution = rec(t.data.astype(np.int64).copy(), ell, (0,) * u, -1)
    if solution is None:
        raise NoDecompositionError("no exact binary decomposition within the multiplicity bound")
    factors = tuple(bits for bits, _ in solution)
    weights = tuple(lam for _, lam in solution)
    return CpResult(factors=factors, weights=weights, method="bruteforce")
