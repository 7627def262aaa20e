"""Mixture instances, support matrices, and synthetic instance generators.

An instance holds the hidden component vectors; everything downstream sees
them only through the oracle module.  Supports are 0-indexed throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstructionError

SUPPORT_MODES = ("random-disjointish", "union-design", "explicit")
VALUE_DISTRIBUTIONS = ("pm-uniform", "positive-uniform")


@dataclass(frozen=True)
class MixtureInstance:
    """The hidden mixture: ``ell`` sparse vectors of length ``n``.

    ``delta`` is the minimum nonzero magnitude (used by the MLR model),
    ``eta`` the label-flip probability (MLC), ``sigma`` the additive noise
    std (MLR).  One instance type serves both oracles; the parameter the
    other model ignores is simply stored.
    """

    n: int
    ell: int
    k: int
    vectors: tuple  # tuple of length-n numpy arrays
    delta: float = 1.0
    eta: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.n <= 0 or self.ell < 1:
            raise ConstructionError(f"need n > 0 and ell >= 1, got n={self.n}, ell={self.ell}")
        if self.k < 0 or self.k > self.n:
            raise ConstructionError(f"sparsity k={self.k} outside [0, n={self.n}]")
        if not 0.0 <= self.eta < 0.5:
            raise ConstructionError(f"eta={self.eta} must lie in [0, 0.5)")
        if self.delta <= 0:
            raise ConstructionError(f"delta={self.delta} must be positive")
        if self.sigma < 0:
            raise ConstructionError(f"sigma={self.sigma} must be nonnegative")
        if len(self.vectors) != self.ell:
            raise ConstructionError("number of vectors must equal ell")
        for v in self.vectors:
            if len(v) != self.n:
                raise ConstructionError("every vector must have length n")
            nz = np.flatnonzero(v)
            if len(nz) > self.k:
                raise ConstructionError(f"vector has {len(nz)} nonzeros, bound is k={self.k}")
            if len(nz) and np.min(np.abs(np.asarray(v)[nz])) < self.delta - 1e-12:
                raise ConstructionError("nonzero entry below the minimum magnitude delta")

    def supports(self) -> list[frozenset]:
        return [frozenset(np.flatnonzero(v).tolist()) for v in self.vectors]

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "ell": self.ell,
            "k": self.k,
            "delta": self.delta,
            "eta": self.eta,
            "sigma": self.sigma,
            "vectors": [
                [[int(i), float(v[i])] for i in np.flatnonzero(v)] for v in self.vectors
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "MixtureInstance":
        data = json.loads(text)
        vectors = []
        for pairs in data["vectors"]:
            v = np.zeros(data["n"])
            for i, val in pairs:
                v[int(i)] = float(val)
            vectors.append(v)
        return cls(
            n=data["n"], ell=data["ell"], k=data["k"], vectors=tuple(vectors),
            delta=data["delta"], eta=data["eta"], sigma=data["sigma"],
        )


@dataclass(frozen=True)
class SupportMatrix:
    """n x ell binary matrix whose column j is the support indicator of v^j."""

    bits: np.ndarray  # bool array, shape (n, ell)

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))
        if self.bits.ndim != 2:
            raise ConstructionError("support matrix must be two-dimensional")

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def ell(self) -> int:
        return self.bits.shape[1]

    def column(self, j: int) -> tuple:
        return tuple(int(b) for b in self.bits[:, j])

    def columns(self) -> list[tuple]:
        return [self.column(j) for j in range(self.ell)]

    def dedup(self) -> "SupportMatrix":
        """Drop duplicate columns, preserving first-appearance order."""
        seen, keep = set(), []
        for j in range(self.ell):
            c = self.column(j)
            if c not in seen:
                seen.add(c)
                keep.append(j)
        return SupportMatrix(self.bits[:, keep])

    def has_distinct_columns(self) -> bool:
        return len(set(self.columns())) == self.ell


def support_matrix(inst: MixtureInstance) -> SupportMatrix:
    """Column j = indicator of the nonzeros of v^j."""
    bits = np.zeros((inst.n, inst.ell), dtype=bool)
    for j, v in enumerate(inst.vectors):
        bits[np.flatnonzero(v), j] = True
    return SupportMatrix(bits)


def union_support(m: SupportMatrix) -> set:
    """Rows with at least one 1; the active index set for all recovery loops."""
    return set(np.flatnonzero(m.bits.any(axis=1)).tolist())


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a synthetic instance.

    ``support_mode``:
      * ``random-disjointish`` -- each support is an independent uniform
        k-subset of [n] (nearly disjoint when n is large);
      * ``union-design`` -- ell = 3; two size-k supports intersecting on
        exactly 2 indices, the third support being their union;
      * ``explicit`` -- supports given verbatim.

    ``value_distribution``: ``pm-uniform`` draws nonzeros uniformly from
    +-[delta, 1]; ``positive-uniform`` from [delta, 1] only.
    """

    n: int
    ell: int
    k: int
    support_mode: str = "random-disjointish"
    value_distribution: str = "pm-uniform"
    explicit_supports: tuple = ()
    force_distinct: bool = False
    delta: float = 0.1
    eta: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.support_mode not in SUPPORT_MODES:
            raise ConstructionError(f"unknown support mode {self.support_mode!r}")
        if self.value_distribution not in VALUE_DISTRIBUTIONS:
            raise ConstructionError(f"unknown value distribution {self.value_distribution!r}")
        if not 0 < self.delta <= 1.0:
            raise ConstructionError("delta must lie in (0, 1]")


def _draw_values(rng: np.random.Generator, size: int, delta: float, distribution: str) -> np.ndarray:
    mags = rng.uniform(delta, 1.0, size=size)
    if distribution == "pm-uniform":
        signs = rng.integers(0, 2, size=size) * 2 - 1
        return mags * signs
    return mags


def generate_instance(spec: GeneratorSpec) -> MixtureInstance:
    """Build a MixtureInstance from a GeneratorSpec.  Deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    n, ell, k = spec.n, spec.ell, spec.k
    if k > n:
        raise ConstructionError(f"k={k} exceeds n={n}")

    if spec.support_mode == "explicit":
        supports = [frozenset(s) for s in spec.explicit_supports]
        if len(supports) != ell:
            raise ConstructionError("explicit mode needs exactly ell supports")
        for s in supports:
            if len(s) > k or any(not 0 <= i < n for i in s):
                raise ConstructionError("explicit support violates size or range bounds")
        k_eff = k
    elif spec.support_mode == "union-design":
        if ell != 3:
            raise ConstructionError("union-design mode requires ell = 3")
        if k < 2 or 2 * k - 2 > n:
            raise ConstructionError("union-design needs 2 <= k and 2k-2 <= n")
        overlap = 2
        base = rng.choice(n, size=2 * k - overlap, replace=False)
        s1 = frozenset(base[:k].tolist())
        s2 = frozenset(base[k - overlap:].tolist())
        supports = [s1, s2, s1 | s2]
        k_eff = 2 * k - overlap
    else:
        for _ in range(1000):
            supports = [
                frozenset(rng.choice(n, size=k, replace=False).tolist()) for _ in range(ell)
            ]
            if not spec.force_distinct or len(set(supports)) == ell:
                break
        else:
            raise ConstructionError("could not draw distinct supports")
        k_eff = k

    vectors = []
    for s in supports:
        v = np.zeros(n)
        idx = sorted(s)
        v[idx] = _draw_values(rng, len(idx), spec.delta, spec.value_distribution)
        vectors.append(v)
    return MixtureInstance(
        n=n, ell=ell, k=k_eff, vectors=tuple(vectors),
        delta=spec.delta, eta=spec.eta, sigma=spec.sigma,
    )


def supports_to_bitstrings(supports: Iterable[Sequence[int]], n: int) -> list[str]:
    out = []
    for s in supports:
        bits = ["0"] * n
        for i in s:
            bits[i] = "1"
        out.append("".join(bits))
    return out
