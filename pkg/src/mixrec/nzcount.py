"""Estimators for nzcount(x): how many components have nonzero inner product.

MLC: query x and -x in equal batches; paired responses cancel for components
with nonzero inner product and add up for orthogonal ones, so the scaled sum
estimates the zero count directly.

MLR: scale the binary query by fresh Gaussians each repetition and count
responses falling in [-a, a]; orthogonal components land there with
probability phi1, the rest with probability at most phi2.

erf comes from math.erf (C library implementation, well under 1e-12 absolute
error); tests cross-check it against an independent series evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError
from .oracle import MLC, MLR, OracleHandle


def round_half_away(x: float) -> int:
    """round() with .5 ties going away from zero (not banker's rounding)."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def phi1(a: float, sigma: float) -> float:
    """Pr(|N(0, sigma^2)| <= a) = erf(a / (sqrt(2) sigma))."""
    if sigma <= 0:
        raise ValueError("phi1 requires sigma > 0")
    return math.erf(a / (math.sqrt(2.0) * sigma))


def phi2(a: float, sigma: float, gamma: float) -> float:
    """Pr(|N(0, sigma^2 + gamma^2)| <= a)."""
    if sigma < 0 or gamma < 0 or (sigma == 0 and gamma == 0):
        raise ValueError("phi2 requires sigma, gamma >= 0, not both zero")
    return math.erf(a / math.sqrt(2.0 * (sigma ** 2 + gamma ** 2)))


@dataclass(frozen=True)
class NzParamsMlr:
    """Parameters of the MLR nzcount estimator.

    Defaults follow a = sigma/2 and gamma = 2*sqrt(2)*ell*sigma/delta (the
    ell-linear scaling; it keeps the SNR within 8 ell^2 max||v||^2/delta^2).
    Construction enforces 2*ell*phi2(a, sigma, gamma*delta) < phi1(a, sigma):
    the acceptance window then leaks less than half a rounding unit of
    probability mass per non-orthogonal component in the worst case, which is
    exactly what lets round() return the true zero count once the empirical
    fraction has concentrated.
    """

    ell: int
    sigma: float
    delta: float
    T: int
    a: float = 0.0       # 0 means "use sigma / 2"
    gamma: float = 0.0   # 0 means "use 2 sqrt(2) ell sigma / delta"
    phi1_value: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        a = self.a if self.a > 0 else self.sigma / 2.0
        gamma = self.gamma if self.gamma > 0 else 2.0 * math.sqrt(2.0) * self.ell * self.sigma / self.delta
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "gamma", gamma)
        if a <= 0:
            raise ConstructionError("acceptance half-width a must be positive (sigma > 0)")
        if gamma <= 0:
            raise ConstructionError("scaling std gamma must be positive")
        if self.T < 1:
            raise ConstructionError("batch size T must be at least 1")
        if self.delta <= 0:
            raise ConstructionError("delta must be positive")
        p1 = phi1(a, self.sigma)
        p2 = phi2(a, self.sigma, gamma * self.delta)
        if not 2 * self.ell * p2 < p1:
            raise ConstructionError(
                f"rounding margin violated: 2*ell*phi2={2 * self.ell * p2:.4f} "
                f">= phi1={p1:.4f} for a={a}, gamma={gamma}"
            )
        object.__setattr__(self, "phi1_value", p1)

    @property
    def bias_margin(self) -> float:
        """Worst-case rounding bias ell*phi2/phi1; strictly below 1/2."""
        return self.ell * phi2(self.a, self.sigma, self.gamma * self.delta) / self.phi1_value


def nzcount_mlc(h: OracleHandle, x: np.ndarray, T: int) -> int:
    """Estimate nzcount(x) from T paired MLC queries with x and -x.

    Returns ell - clamp(round(ell * sum(y + z) / (2T(1-2eta))), 0, ell).
    Uses exactly 2T oracle calls.
    """
    if h.model != MLC:
        raise ValueError("nzcount_mlc needs an MLC handle")
    if T < 1:
        raise ValueError("batch size T must be >= 1")
    ell, eta = h.public.ell, h.public.eta
    y, z = h.mlc_query_pair_batch(np.asarray(x, dtype=float), T)
    zhat = round_half_away(ell * float(y.sum() + z.sum()) / (2.0 * T * (1.0 - 2.0 * eta)))
    return ell - min(max(zhat, 0), ell)


def nzcount_mlr(h: OracleHandle, x: np.ndarray, p: NzParamsMlr) -> int:
    """Estimate nzcount(x) for binary x from T Gaussian-scaled MLR queries.

    Each of the T repetitions draws a fresh g_gamma(x): zero off supp(x),
    i.i.d. N(0, gamma^2) on supp(x).  The estimate counts responses inside
    [-a, a] and inverts the orthogonal-component acceptance rate phi1.
    """
    if h.model != MLR:
        raise ValueError("nzcount_mlr needs an MLR handle")
    x = np.asarray(x)
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("MLR nzcount queries must be binary")
    support = np.flatnonzero(x)
    ell, T = p.ell, p.T
    responses = h.mlr_query_scaled_batch(support, p.gamma, T)
    np.abs(responses, out=responses)  # the batch buffer is ours to consume
    accepted = int(np.count_nonzero(responses <= p.a))
    zhat = round_half_away(ell * (accepted / T) / p.phi1_value)
    return ell - min(max(zhat, 0), ell)
