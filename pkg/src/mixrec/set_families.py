"""Randomized RUFF / CFF constructions, exact verifiers, and query bundles.

A family is n subsets of an alphabet [m]; its incidence matrix (rows indexed
by the alphabet, columns by the family) supplies query vectors.  RUFF columns
are drawn as uniform size-d subsets; CFF incidence bits are i.i.d. with
inclusion probability 1/(t+1), which is the standard probabilistic argument
behind the existence bound m = O(t^{r+1} log n).

CFF alphabets get huge at experiment scale, so rows are also available
lazily: row p is a pure function of (seed, p) and the materialized family is
exactly the transpose of those rows.

Verification is exact but not naive: each obligation is first discharged by
an overlap-sum bound and otherwise decided by branch-and-bound max-coverage
search.  A node budget guards against genuinely infeasible instances.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from math import ceil, log2

import numpy as np

from .errors import ConstructionError, VerificationInfeasibleError
from .oracle import MLC, MLR

log = logging.getLogger(__name__)

DEFAULT_C1 = 4.0   # RUFF alphabet constant
DEFAULT_C2 = 2.0   # RUFF set-size constant
DEFAULT_C3 = 8.0   # CFF alphabet constant

_BNB_NODE_BUDGET = 10_000_000


def _log2ceil(n: int) -> float:
    return max(log2(n), 1.0) if n >= 2 else 1.0


@dataclass
class RuffKind:
    d: int
    t: int
    alpha: float


@dataclass
class CffKind:
    r: int
    t: int


@dataclass
class SetFamily:
    """n subsets of [m], plus the construction metadata."""

    n: int
    m: int
    sets: list            # list of sorted numpy index arrays, one per column
    kind: object          # RuffKind | CffKind
    seed: int
    verified: bool = False
    _row_cache: dict = field(default_factory=dict, repr=False)

    def row_support(self, p: int) -> np.ndarray:
        """Columns whose set contains alphabet element p."""
        if p not in self._row_cache:
            self._row_cache[p] = np.array(
                [j for j, s in enumerate(self.sets) if p in self._as_set(j)], dtype=int
            )
        return self._row_cache[p]

    def _as_set(self, j: int) -> set:
        if not hasattr(self, "_set_views"):
            self._set_views = [set(s.tolist()) for s in self.sets]
        return self._set_views[j]

    def incidence(self) -> np.ndarray:
        """Dense m x n boolean incidence matrix (rows = alphabet elements)."""
        out = np.zeros((self.m, self.n), dtype=bool)
        for j, s in enumerate(self.sets):
            out[s, j] = True
        return out

    def to_json(self) -> str:
        if isinstance(self.kind, RuffKind):
            kind = {"type": "ruff", "d": self.kind.d, "t": self.kind.t, "alpha": self.kind.alpha}
        else:
            kind = {"type": "cff", "r": self.kind.r, "t": self.kind.t}
        return json.dumps({
            "n": self.n, "m": self.m, "kind": kind, "seed": self.seed,
            "sets": [s.tolist() for s in self.sets],
        })

    @classmethod
    def from_json(cls, text: str) -> "SetFamily":
        data = json.loads(text)
        k = data["kind"]
        kind = (RuffKind(k["d"], k["t"], k["alpha"]) if k["type"] == "ruff"
                else CffKind(k["r"], k["t"]))
        return cls(
            n=data["n"], m=data["m"],
            sets=[np.array(s, dtype=int) for s in data["sets"]],
            kind=kind, seed=data["seed"],
        )


def ruff_dimensions(n: int, t: int, alpha: float, c1: float = DEFAULT_C1,
                    c2: float = DEFAULT_C2) -> tuple[int, int]:
    m = max(1, ceil(c1 * t * t * _log2ceil(n) / (alpha * alpha)))
    d = max(1, min(m, ceil(c2 * t * _log2ceil(n) / alpha)))
    return m, d


def build_ruff(n: int, t: int, alpha: float, seed: int = 0,
               c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> SetFamily:
    """Random candidate (d, t, alpha)-RUFF; verification is separate."""
    if n < 1 or t < 1 or not 0 < alpha <= 1:
        raise ConstructionError("build_ruff needs n >= 1, t >= 1, 0 < alpha <= 1")
    m, d = ruff_dimensions(n, t, alpha, c1, c2)
    rng = np.random.default_rng(seed)
    sets = [np.sort(rng.choice(m, size=d, replace=False)) for _ in range(n)]
    return SetFamily(n=n, m=m, sets=sets, kind=RuffKind(d=d, t=t, alpha=alpha), seed=seed)


def cff_dimensions(n: int, r: int, t: int, c3: float = DEFAULT_C3) -> int:
    return max(1, ceil(c3 * t ** (r + 1) * _log2ceil(n)))


CFF_ROW_BLOCK = 512


def cff_row_block(seed: int, block: int, n: int, t: int) -> np.ndarray:
    """Boolean incidence of rows [block*B, (block+1)*B): pure in (seed, block)."""
    rng = np.random.default_rng([seed, block])
    return rng.random((CFF_ROW_BLOCK, n)) < 1.0 / (t + 1)


def cff_row_support(seed: int, p: int, n: int, t: int) -> np.ndarray:
    """Row p of the random CFF incidence: pure function of (seed, p)."""
    block, offset = divmod(p, CFF_ROW_BLOCK)
    return np.flatnonzero(cff_row_block(seed, block, n, t)[offset])


def build_cff(n: int, r: int, t: int, seed: int = 0, c3: float = DEFAULT_C3) -> SetFamily:
    """Random candidate (r, t)-CFF, materialized column-wise.

    The columns are the transpose of the lazy rows produced by
    ``cff_row_support`` with the same seed, so explicit and lazy views of one
    seed describe the same family.
    """
    if n < 1 or r < 1 or t < 1:
        raise ConstructionError("build_cff needs n >= 1, r >= 1, t >= 1")
    m = cff_dimensions(n, r, t, c3)
    if m * n > 50_000_000:
        raise ConstructionError(
            f"materializing this CFF needs {m}x{n} incidence; use the lazy row view"
        )
    blocks = [cff_row_block(seed, b, n, t)
              for b in range(-(-m // CFF_ROW_BLOCK))]
    incidence = np.concatenate(blocks, axis=0)[:m]
    sets = [np.flatnonzero(incidence[:, j]) for j in range(n)]
    return SetFamily(n=n, m=m, sets=sets, kind=CffKind(r=r, t=t), seed=seed)


class LazyCff:
    """Row-sampled view of a random (r, t)-CFF too large to materialize."""

    def __init__(self, n: int, r: int, t: int, seed: int = 0, c3: float = DEFAULT_C3):
        self.n, self.r, self.t, self.seed = n, r, t, seed
        self.m = cff_dimensions(n, r, t, c3)
        self.kind = CffKind(r=r, t=t)

    def row_support(self, p: int) -> np.ndarray:
        return cff_row_support(self.seed, p, self.n, self.t)

    def row_block(self, block: int) -> np.ndarray:
        return cff_row_block(self.seed, block, self.n, self.t)


# ---------------------------------------------------------------------------
# exact verification


def _cover_decision(element_masks: list[int], candidates: list[int], t: int,
                    target: int, budget: list) -> bool:
    """True iff some <= t candidate masks union to >= target covered elements.

    ``element_masks`` is unused beyond its length (elements are bit positions
    of the candidate masks); kept for clarity of the call sites.
    """
    cands = sorted((c for c in candidates if c), key=lambda c: -c.bit_count())
    counts = [c.bit_count() for c in cands]

    def rec(chosen: int, start: int, remaining: int) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            raise VerificationInfeasibleError("verification exceeded its node budget")
        covered = chosen.bit_count()
        if covered >= target:
            return True
        if remaining == 0 or start >= len(cands):
            return False
        bound = covered + sum(counts[start:start + remaining])
        if bound < target:
            return False
        for i in range(start, len(cands)):
            gain = (cands[i] & ~chosen).bit_count()
            if gain == 0:
                continue
            if covered + sum(counts[i:i + remaining]) < target:
                break  # sorted by size: nothing later can reach the target
            if rec(chosen | cands[i], i + 1, remaining - 1):
                return True
        return False

    return rec(0, 0, t)


def verify_ruff(f: SetFamily, d: int, t: int, alpha: float) -> bool:
    """Exact check of the RUFF condition: every set keeps more than (1-alpha)d
    elements outside the union of any t others.

    Uses an overlap-sum bound per column and branch-and-bound max-coverage
    for the columns the bound cannot discharge; raises
    VerificationInfeasibleError past the node budget.
    """
    if f.n <= 1 or t >= f.n:
        f.verified = True
        return True  # no t-subset avoiding j exists: condition is vacuous
    col_sets = [f._as_set(j) for j in range(f.n)]
    budget = [_BNB_NODE_BUDGET]
    for j in range(f.n):
        hj = sorted(col_sets[j])
        pos = {e: i for i, e in enumerate(hj)}
        # violated iff some t-union covers >= |H_j| - (1-alpha) d elements of H_j
        threshold = len(hj) - (1.0 - alpha) * d
        masks = []
        for i in range(f.n):
            if i == j:
                continue
            mask = 0
            for e in col_sets[i] & col_sets[j]:
                mask |= 1 << pos[e]
            if mask:
                masks.append(mask)
        top = sorted((mk.bit_count() for mk in masks), reverse=True)[:t]
        if sum(top) < threshold:
            continue  # even the t largest overlaps cannot cover alpha*d
        target = ceil(threshold) if threshold != int(threshold) else int(threshold)
        if _cover_decision(hj, masks, t, target, budget):
            f.verified = False
            return False
    f.verified = True
    return True


def verify_cff(f: SetFamily, r: int, t: int) -> bool:
    """Exact check of the CFF condition: no r-wise intersection is covered by
    the union of any t disjoint other sets."""
    if f.n < r + t:
        f.verified = True
        return True  # no disjoint (T1, T2) pair exists
    col_sets = [f._as_set(j) for j in range(f.n)]
    budget = [_BNB_NODE_BUDGET]
    for T1 in combinations(range(f.n), r):
        inter = set.intersection(*(col_sets[j] for j in T1))
        if not inter:
            f.verified = False
            return False  # empty intersection is trivially covered
        elems = sorted(inter)
        pos = {e: i for i, e in enumerate(elems)}
        masks, full = [], (1 << len(elems)) - 1
        others_union = 0
        for q in range(f.n):
            if q in T1:
                continue
            mask = 0
            for e in col_sets[q] & inter:
                mask |= 1 << pos[e]
            if mask:
                masks.append(mask)
                others_union |= mask
        if others_union != full:
            continue  # some element of the intersection survives any T2
        if _cover_decision(elems, masks, t, len(elems), budget):
            f.verified = False
            return False
    f.verified = True
    return True


def build_verified_ruff(n: int, t: int, alpha: float, seed: int = 0,
                        c1: float = DEFAULT_C1, c2: float = DEFAULT_C2,
                        attempts: int = 10) -> SetFamily:
    """Construct-and-verify loop, reseeding on failure up to ``attempts``.

    When verification is infeasible at this scale the family is returned
    unverified with a logged warning (the existence bounds make failure
    overwhelmingly unlikely at formula sizes).
    """
    last = None
    for attempt in range(attempts):
        fam = build_ruff(n, t, alpha, seed=seed + attempt, c1=c1, c2=c2)
        try:
            if verify_ruff(fam, fam.kind.d, t, alpha):
                return fam
        except VerificationInfeasibleError:
            log.warning("RUFF verification infeasible at n=%d, t=%d; using unverified family", n, t)
            return fam
        last = fam
    warnings.warn("RUFF verification failed on every seed; returning last candidate")
    return last


def to_query_bundle(family, model: str, ell: int, seed: int = 0) -> "QueryMatrixBundle":
    return QueryMatrixBundle(family=family, model=model, ell=ell, seed=seed)


class QueryMatrixBundle:
    """Query matrices over a family's incidence pattern.

    MLC: ell + 1 matrices sharing the incidence support, nonzeros i.i.d.
    Uniform[0, 1] (any continuous distribution works; distinct values give
    pairwise linear independence almost surely).  MLR: a single binary
    incidence matrix; the Gaussian scaling inside the MLR nzcount supplies
    the randomness instead.

    Values are generated per (matrix index, row) from a child seed, so rows
    can be produced lazily without materializing the full matrices.
    """

    def __init__(self, family, model: str, ell: int, seed: int = 0):
        if model not in (MLC, MLR):
            raise ConstructionError(f"unknown model {model!r}")
        self.family = family
        self.model = model
        self.ell = ell
        self.seed = seed
        self.num_matrices = ell + 1 if model == MLC else 1

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def m(self) -> int:
        return self.family.m

    def row_support(self, p: int) -> np.ndarray:
        return self.family.row_support(p)

    def row_values(self, w: int, p: int, support: np.ndarray | None = None) -> np.ndarray:
        if support is None:
            support = self.row_support(p)
        if self.model == MLR:
            return np.ones(len(support))
        rng = np.random.default_rng([self.seed, w, p])
        return rng.random(len(support))

    def row(self, w: int, p: int) -> np.ndarray:
        support = self.row_support(p)
        x = np.zeros(self.n)
        x[support] = self.row_values(w, p, support)
        return x

    def matrix(self, w: int) -> np.ndarray:
        """Dense m x n matrix; only sensible for explicitly sized families."""
        if self.m * self.n > 50_000_000:
            raise ConstructionError("matrix too large to materialize; use row()")
        out = np.zeros((self.m, self.n))
        for p in range(self.m):
            support = self.row_support(p)
            out[p, support] = self.row_values(w, p, support)
        return out

    def matrices(self) -> list:
        return [self.matrix(w) for w in range(self.num_matrices)]
