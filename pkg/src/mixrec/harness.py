"""Experiment runner: seeded trials, accuracy statistics, sweep tables.

Per-trial seeds are derived from the master seed through
numpy.random.SeedSequence(master).spawn(trials); child state words seed the
instance generator, the oracle stream, and the auxiliary (tensor) stream in
that order.  Trials are embarrassingly parallel; records are always reported
in trial order, so identical configs produce byte-identical output files.
Wall times are kept on the in-memory records only, never serialized.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, RecoveryFailure
from .ground_truth import supports_equal_up_to_permutation
from .model import (
    SUPPORT_MODES, VALUE_DISTRIBUTIONS, GeneratorSpec, generate_instance, support_matrix,
)
from .occ_engine import OccParams, build_occ_table
from .oracle import MLC, MLR, OracleHandle
from .recovery import parse_strategy, recover, recover_kruskal, recover_p_identifiable
from .set_families import DEFAULT_C1, DEFAULT_C2, DEFAULT_C3

SWEEP_FIELDS = ("T", "alg1_accuracy", "jennrich_accuracy")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = MLC
    n: int = 100
    ell: int = 3
    k: int = 5
    eta: float = 0.0
    sigma: float = 1.0
    delta: float = 0.1
    strategy: str = "p-ident:2"
    batch_T: Optional[int] = None      # None = the analytic batch formulas
    trials: int = 100
    seed: int = 0
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    c3: float = DEFAULT_C3
    support_mode: str = "union-design"
    value_distribution: str = "positive-uniform"
    out: Optional[str] = None
    format: str = "jsonl"

    def __post_init__(self):
        if self.model not in (MLC, MLR):
            raise ConfigError(f"model must be mlc or mlr, got {self.model!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.support_mode not in SUPPORT_MODES:
            raise ConfigError(f"unknown support mode {self.support_mode!r}")
        if self.value_distribution not in VALUE_DISTRIBUTIONS:
            raise ConfigError(f"unknown value distribution {self.value_distribution!r}")
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"format must be jsonl or csv, got {self.format!r}")
        if self.batch_T is not None and self.batch_T < 1:
            raise ConfigError("batch T override must be >= 1")
        parse_strategy(self.strategy)  # raises ConfigError on bad syntax

    def generator_spec(self, seed: int) -> GeneratorSpec:
        return GeneratorSpec(
            n=self.n, ell=self.ell, k=self.k, support_mode=self.support_mode,
            value_distribution=self.value_distribution, delta=self.delta,
            eta=self.eta, sigma=self.sigma, seed=seed,
        )

    def occ_params(self) -> OccParams:
        return OccParams(c1=self.c1, c2=self.c2, c3=self.c3, batch_T=self.batch_T)


@dataclass
class TrialRecord:
    index: int
    seed: int
    success: bool
    failure_kind: Optional[str]
    queries_used: int
    wall_time: float = field(default=0.0, compare=False)

    def public_dict(self) -> dict:
        return {
            "trial": self.index,
            "seed": self.seed,
            "success": self.success,
            "failure_kind": self.failure_kind,
            "queries_used": self.queries_used,
        }


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    records: list
    accuracy: float
    wilson_low: float
    wilson_high: float
    mean_queries: float


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _trial_seeds(master: int, trials: int) -> list[tuple[int, int, int]]:
    children = np.random.SeedSequence(master).spawn(trials)
    out = []
    for child in children:
        state = child.generate_state(3)
        out.append((int(state[0]), int(state[1]), int(state[2])))
    return out


def _run_single_trial(cfg: ExperimentConfig, index: int,
                      seeds: tuple[int, int, int]) -> TrialRecord:
    instance_seed, oracle_seed, aux_seed = seeds
    start = time.perf_counter()
    inst = generate_instance(cfg.generator_spec(instance_seed))
    truth = support_matrix(inst).columns()
    handle = OracleHandle(inst, cfg.model, seed=oracle_seed)
    strategy = parse_strategy(cfg.strategy)
    failure_kind = None
    success = False
    try:
        result = recover(handle, strategy, cfg.occ_params(), aux_seed=aux_seed)
        success = supports_equal_up_to_permutation(result.supports, truth)
        if not success:
            failure_kind = "wrong-supports"
    except RecoveryFailure as err:
        failure_kind = err.kind
    return TrialRecord(
        index=index, seed=instance_seed, success=success, failure_kind=failure_kind,
        queries_used=handle.ledger, wall_time=time.perf_counter() - start,
    )


def _worker_count() -> int:
    raw = os.environ.get("MIXREC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_trials(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]  # submission order == trial order


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """Run cfg.trials independent seeded trials and aggregate accuracy."""
    seeds = _trial_seeds(cfg.seed, cfg.trials)
    jobs = [(cfg, i, seeds[i]) for i in range(cfg.trials)]
    records = _map_trials(_run_single_trial, jobs, _worker_count())
    successes = sum(1 for r in records if r.success)
    low, high = wilson_interval(successes, cfg.trials)
    summary = ExperimentSummary(
        config=cfg, records=records, accuracy=successes / cfg.trials,
        wilson_low=low, wilson_high=high,
        mean_queries=sum(r.queries_used for r in records) / cfg.trials,
    )
    if cfg.out:
        write_records(summary, cfg.out, cfg.format)
    return summary


def records_text(summary: ExperimentSummary, fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r.public_dict()) + "\n" for r in summary.records)
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["trial", "seed", "success", "failure_kind", "queries_used"],
        lineterminator="\n",
    )
    writer.writeheader()
    for r in summary.records:
        writer.writerow(r.public_dict())
    return buf.getvalue()


def write_records(summary: ExperimentSummary, path: str, fmt: str) -> None:
    with open(path, "w") as fh:
        fh.write(records_text(summary, fmt))


def _sweep_trial(cfg: ExperimentConfig, index: int,
                 seeds: tuple[int, int, int]) -> tuple[bool, bool]:
    """One sweep trial: both algorithms share a single size-3 occ table."""
    instance_seed, oracle_seed, aux_seed = seeds
    inst = generate_instance(cfg.generator_spec(instance_seed))
    truth = support_matrix(inst).columns()
    handle = OracleHandle(inst, cfg.model, seed=oracle_seed)
    try:
        table, _ = build_occ_table(handle, 3, cfg.occ_params())
    except RecoveryFailure:
        return False, False

    try:
        alg1 = recover_p_identifiable(table, inst.ell, p=2)
        ok1 = supports_equal_up_to_permutation(alg1.supports, truth)
    except RecoveryFailure:
        ok1 = False
    try:
        rng = np.random.default_rng(aux_seed)
        algj = recover_kruskal(table, inst.ell, r=inst.ell, rng=rng)
        okj = supports_equal_up_to_permutation(algj.supports, truth)
    except RecoveryFailure:
        okj = False
    return ok1, okj


def sweep(cfg: ExperimentConfig, T_values: Sequence[int]) -> list[tuple[int, float, float]]:
    """Accuracy of the pattern algorithm (p=2) and the order-3 tensor path
    per batch size T, reported as two accuracy columns side by side."""
    rows = []
    workers = _worker_count()
    for T in T_values:
        cfg_t = replace(cfg, batch_T=int(T))
        seeds = _trial_seeds(cfg.seed + int(T), cfg.trials)
        jobs = [(cfg_t, i, seeds[i]) for i in range(cfg.trials)]
        outcomes = _map_trials(_sweep_trial, jobs, workers)
        acc1 = sum(1 for a, _ in outcomes if a) / cfg.trials
        accj = sum(1 for _, b in outcomes if b) / cfg.trials
        rows.append((int(T), acc1, accj))
    return rows


def sweep_csv(rows: Sequence[tuple[int, float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_FIELDS)
    for T, acc1, accj in rows:
        writer.writerow([T, f"{acc1:.4f}", f"{accj:.4f}"])
    return buf.getvalue()
