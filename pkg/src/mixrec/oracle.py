"""Simulated MLC / MLR query oracles with exact noise semantics.

Every oracle call picks a component uniformly at random, evaluates the inner
product against the query, and applies model noise:

  MLC:  sign(<x, v>) * (1 - 2Z),  Z ~ Ber(eta),  sign(0) := +1
  MLR:  <x, v> + Z,               Z ~ N(0, sigma^2)

RNG discipline (documented so response streams replay bit-exactly): queries
are issued in batches, and responses within a batch are exchangeable (i.i.d.
given the query), so a batch of size T consumes, in order, one multinomial
draw of per-component counts, then one vectorized noise draw (T uniforms for
the Bernoulli flips under MLC, T standard normals under MLR).  Responses are
returned grouped by component index; a single query is a batch of one.  The
ledger counts every individual oracle call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelMismatchError
from .model import MixtureInstance

MLC = "mlc"
MLR = "mlr"


@dataclass(frozen=True)
class PublicParams:
    """Model parameters the estimators are allowed to know."""

    n: int
    ell: int
    k: int
    eta: float
    sigma: float
    delta: float


class OracleHandle:
    """Owns the hidden instance, a seeded RNG stream, and the query ledger.

    Single-threaded by contract: the mutable ledger and RNG stream must not
    be shared across concurrent trials.  Parallel trials each construct their
    own independently seeded handle.
    """

    def __init__(self, instance: MixtureInstance, model: str, seed: int = 0):
        if model not in (MLC, MLR):
            raise ModelMismatchError(f"unknown model {model!r}")
        self._instance = instance
        self.model = model
        self.rng = np.random.default_rng(seed)
        self.ledger = 0
        # dense value matrix (n x ell) for fast batched inner products
        self._values = np.column_stack([np.asarray(v, dtype=float) for v in instance.vectors])
        self._pvals = np.full(instance.ell, 1.0 / instance.ell)

    @property
    def public(self) -> PublicParams:
        i = self._instance
        return PublicParams(n=i.n, ell=i.ell, k=i.k, eta=i.eta, sigma=i.sigma, delta=i.delta)

    def _inner_products(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self._instance.n,):
            raise ModelMismatchError(f"query must have length n={self._instance.n}")
        return x @ self._values

    def _component_counts(self, count: int) -> np.ndarray:
        return self.rng.multinomial(count, self._pvals)

    def mlc_query_batch(self, x: np.ndarray, count: int) -> np.ndarray:
        """``count`` independent MLC responses to the same query vector."""
        if self.model != MLC:
            raise ModelMismatchError("mlc_query on a non-MLC handle")
        ips = self._inner_products(x)
        signs = np.where(ips >= 0, 1, -1)  # sign(0) = +1
        counts = self._component_counts(count)
        flips = self.rng.random(count) < self._instance.eta
        self.ledger += count
        return np.repeat(signs, counts) * np.where(flips, -1, 1)

    def mlc_query(self, x: np.ndarray) -> int:
        return int(self.mlc_query_batch(x, 1)[0])

    def mlc_query_pair_batch(self, x: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
        """``count`` responses each for x and for -x (2 * count oracle calls).

        Equivalent to two consecutive mlc_query_batch calls; the inner
        products are evaluated once and negated (sign(0) stays +1 on both
        sides).  Draw order: the x batch (counts, flips), then the -x batch.
        """
        if self.model != MLC:
            raise ModelMismatchError("mlc_query on a non-MLC handle")
        ips = self._inner_products(x)
        signs_pos = np.where(ips >= 0, 1, -1)
        signs_neg = np.where(ips > 0, -1, 1)
        eta = self._instance.eta
        out = []
        for signs in (signs_pos, signs_neg):
            counts = self._component_counts(count)
            flips = self.rng.random(count) < eta
            out.append(np.repeat(signs, counts) * np.where(flips, -1, 1))
        self.ledger += 2 * count
        return out[0], out[1]

    def mlr_query_batch(self, x: np.ndarray, count: int) -> np.ndarray:
        """``count`` independent MLR responses to the same query vector."""
        if self.model != MLR:
            raise ModelMismatchError("mlr_query on a non-MLR handle")
        ips = self._inner_products(x)
        counts = self._component_counts(count)
        noise = self.rng.standard_normal(count) * self._instance.sigma
        self.ledger += count
        return np.repeat(ips, counts) + noise

    def mlr_query(self, x: np.ndarray) -> float:
        return float(self.mlr_query_batch(x, 1)[0])

    def mlr_query_scaled_batch(self, support: np.ndarray, gamma: float, count: int) -> np.ndarray:
        """Responses to ``count`` fresh Gaussian-scaled binary queries.

        Repetition i queries g(x): zero off ``support``, i.i.d. N(0, gamma^2)
        on it.  The response <g, v> + Z is a sum of independent Gaussians, so
        each response is one standard normal scaled by
        sqrt(gamma^2 ||v restricted to support||^2 + sigma^2) for its drawn
        component; the joint response distribution is identical to drawing
        the full query vector and the noise separately.  RNG order per batch:
        component counts, then one response normal per repetition.
        """
        if self.model != MLR:
            raise ModelMismatchError("mlr_query on a non-MLR handle")
        counts = self._component_counts(count)
        geff = self.rng.standard_normal(count)
        self.ledger += count
        support = np.asarray(support, dtype=int)
        sigma = self._instance.sigma
        if len(support) == 0:
            np.multiply(geff, sigma, out=geff)
            return geff
        norms_sq = (self._values[support, :] ** 2).sum(axis=0)  # (ell,)
        stds = np.sqrt(gamma * gamma * norms_sq + sigma * sigma)
        offset = 0
        for j in range(self._instance.ell):
            block = geff[offset:offset + counts[j]]
            np.multiply(block, stds[j], out=block)
            offset += counts[j]
        return geff


@dataclass(frozen=True)
class SnrReport:
    """Observed signal-to-noise ratio of a query strategy, plus its ceiling.

    ``snr`` is max over the used query distributions of the min over
    components of E|<x, v^j>|^2 / sigma^2.  ``bound`` is the analytic ceiling
    8 ell^2 max_j ||v^j||^2 / delta^2 implied by the Gaussian scaling
    gamma = 2 sqrt(2) ell sigma / delta.
    """

    snr: float
    bound: float


def snr_report(h: OracleHandle, supports, gamma: float) -> SnrReport:
    """SNR of Gaussian-scaled binary queries with the given supports.

    For a binary query x scaled by g_gamma, E<g(x), v>^2 = gamma^2 * sum of
    v_i^2 over supp(x), so each query contributes min_j gamma^2 ||x . v^j||^2.
    """
    if h.model != MLR:
        raise ModelMismatchError("snr_report applies to MLR handles")
    sigma = h.public.sigma
    if sigma <= 0:
        raise ModelMismatchError("snr is undefined for sigma = 0")
    values_sq = h._values ** 2  # (n, ell)
    best = 0.0
    for sup in supports:
        idx = np.asarray(sorted(sup), dtype=int)
        if len(idx) == 0:
            continue
        per_component = values_sq[idx, :].sum(axis=0)
        best = max(best, gamma ** 2 * float(per_component.min()))
    norms_sq = values_sq.sum(axis=0)
    bound = 8 * h.public.ell ** 2 * float(norms_sq.max()) / h.public.delta ** 2
    return SnrReport(snr=best / sigma ** 2, bound=bound)
