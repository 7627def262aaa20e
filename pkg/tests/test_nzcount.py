import math

import numpy as np
import pytest

from mixrec.errors import ConstructionError
from mixrec.model import MixtureInstance
from mixrec.nzcount import NzParamsMlr, nzcount_mlc, nzcount_mlr, phi1, phi2, round_half_away
from mixrec.oracle import MLC, MLR, OracleHandle


def erf_series(x: float, terms: int = 80) -> float:
    """Independent Maclaurin-series erf, accurate far below 1e-12 for |x| <= 3."""
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2.0 / math.sqrt(math.pi) * total


def test_phi1_against_series_oracle():
    # frozen from the series: erf(1 / (2 sqrt 2)) = 0.3829249225480262
    assert phi1(0.5, 1.0) == pytest.approx(0.3829249225480262, abs=1e-12)
    for a, sigma in [(0.5, 1.0), (0.2, 0.7), (1.3, 2.0)]:
        assert phi1(a, sigma) == pytest.approx(erf_series(a / (math.sqrt(2) * sigma)), abs=1e-12)


def test_phi1_limits():
    assert phi1(0.0, 1.0) == 0.0
    assert phi1(1e9, 1.0) == pytest.approx(1.0)


def test_phi2_reductions_and_analytic_bound():
    assert phi2(0.7, 1.3, 0.0) == pytest.approx(phi1(0.7, 1.3))
    assert phi2(0.7, 1.0, 1e12) == pytest.approx(0.0, abs=1e-9)
    for ell in (1, 2, 3, 8):
        sigma = 1.0
        gamma_delta = 2 * math.sqrt(2) * ell * sigma
        assert phi2(sigma / 2, sigma, gamma_delta) <= math.sqrt(2) / (4 * ell * math.sqrt(math.pi))


def test_round_half_away():
    assert round_half_away(0.5) == 1
    assert round_half_away(1.5) == 2
    assert round_half_away(-0.5) == -1
    assert round_half_away(0.49) == 0


def test_params_reject_sigma_zero():
    with pytest.raises(ConstructionError):
        NzParamsMlr(ell=2, sigma=0.0, delta=1.0, T=10)


def test_params_defaults_and_margin():
    p = NzParamsMlr(ell=3, sigma=2.0, delta=0.5, T=100)
    assert p.a == pytest.approx(1.0)
    assert p.gamma == pytest.approx(2 * math.sqrt(2) * 3 * 2.0 / 0.5)
    assert p.phi1_value == pytest.approx(phi1(1.0, 2.0))
    assert p.bias_margin < 0.5  # rounding absorbs the acceptance leak


def _instance(supports, n, values=None, **kw):
    vectors = []
    for idx, s in enumerate(supports):
        v = np.zeros(n)
        for pos, i in enumerate(sorted(s)):
            v[i] = values[idx][pos] if values else 1.0
        vectors.append(v)
    k = max((len(s) for s in supports), default=0)
    return MixtureInstance(n=n, ell=len(supports), k=k, vectors=tuple(vectors), **kw)


def test_nzcount_mlc_zero_query_returns_zero_any_T():
    inst = _instance([{0, 1}, {2}], n=4, eta=0.0)
    h = OracleHandle(inst, MLC, seed=0)
    for T in (1, 2, 7):
        assert nzcount_mlc(h, np.zeros(4), T) == 0


def test_nzcount_mlc_orthogonal_to_all_components_exact():
    # no inner product changes sign between the paired queries: exact recovery
    inst = _instance([{0}, {1}], n=4, eta=0.0)
    h = OracleHandle(inst, MLC, seed=1)
    x = np.zeros(4)
    x[3] = 1.0
    for T in (1, 3, 10):
        assert nzcount_mlc(h, x, T) == 0


def test_nzcount_mlc_single_component_deterministic():
    inst = _instance([{0, 2}], n=4, eta=0.0)
    h = OracleHandle(inst, MLC, seed=2)
    x = np.zeros(4)
    x[0] = 1.0
    for T in (1, 2, 5):
        assert nzcount_mlc(h, x, T) == 1


def test_nzcount_mlc_concentration_against_lemma_bound():
    # l=3, two components orthogonal to x, eta=0.1
    inst = _instance([{0}, {1}, {2}], n=6, eta=0.1)
    sm_true = 1
    T = math.ceil(4 * 9 * math.log(60 * 600) / (1 - 0.2) ** 2)
    h = OracleHandle(inst, MLC, seed=3)
    x = np.zeros(6)
    x[0] = 1.0
    trials = 1000
    wrong = sum(1 for _ in range(trials) if nzcount_mlc(h, x, T) != sm_true)
    bound = 2 * math.exp(-T * (1 - 0.2) ** 2 / (2 * 9))
    assert wrong / trials <= max(2 * bound, 0.01)


def test_nzcount_mlr_zero_query():
    inst = _instance([{0, 1}], n=4, sigma=1.0, delta=1.0)
    h = OracleHandle(inst, MLR, seed=4)
    p = NzParamsMlr(ell=1, sigma=1.0, delta=1.0, T=4000)
    assert nzcount_mlr(h, np.zeros(4), p) == 0


def test_nzcount_mlr_single_component_covered():
    inst = _instance([{0, 1}], n=4, sigma=1.0, delta=1.0)
    h = OracleHandle(inst, MLR, seed=5)
    p = NzParamsMlr(ell=1, sigma=1.0, delta=1.0, T=10_000)
    x = np.zeros(4)
    x[[0, 1]] = 1.0
    wrong = sum(1 for _ in range(50) if nzcount_mlr(h, x, p) != 1)
    assert wrong == 0


def test_nzcount_mlr_rejects_non_binary():
    inst = _instance([{0}], n=3, sigma=1.0, delta=1.0)
    h = OracleHandle(inst, MLR, seed=6)
    p = NzParamsMlr(ell=1, sigma=1.0, delta=1.0, T=10)
    with pytest.raises(ValueError):
        nzcount_mlr(h, np.array([0.5, 0.0, 0.0]), p)


def test_mlr_acceptance_sandwich():
    # zcount/ell * phi1 <= E[accept] <= zcount/ell * phi1 + phi2(a, sigma, gamma delta)
    inst = _instance([{0}, {1}, {2}], n=6, sigma=1.0, delta=1.0)
    h = OracleHandle(inst, MLR, seed=7)
    p = NzParamsMlr(ell=3, sigma=1.0, delta=1.0, T=1)
    x = np.zeros(6)
    x[0] = 1.0  # zcount = 2
    T = 400_000
    responses = h.mlr_query_scaled_batch(np.array([0]), p.gamma, T)
    frac = np.mean(np.abs(responses) <= p.a)
    low = 2 / 3 * p.phi1_value
    high = low + phi2(p.a, 1.0, p.gamma * 1.0)
    sd = math.sqrt(0.25 / T)
    assert low - 3 * sd <= frac <= high + 3 * sd


def test_mlr_failure_probability_bound_from_lemma():
    inst = _instance([{0}, {1}], n=4, sigma=1.0, delta=1.0)
    T = math.ceil(36 * math.pi * 4 * math.log(2 / 0.01))
    p = NzParamsMlr(ell=2, sigma=1.0, delta=1.0, T=T)
    h = OracleHandle(inst, MLR, seed=8)
    x = np.zeros(4)
    x[0] = 1.0
    wrong = sum(1 for _ in range(400) if nzcount_mlr(h, x, p) != 1)
    assert wrong / 400 <= 0.02
