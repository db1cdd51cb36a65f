"""Repeated simulation: sample, compute p-values, apply BH, aggregate metrics and curves."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bh import Metrics, TestOutcome, bh_reject, run_metrics
from .model import MixtureModel, sample_mixture
from .pvalues import METHODS, PLAIN, ConstraintVariant, compute_pvalues

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    model: MixtureModel
    n: int = 5000
    reps: int = 200
    alpha: float = 0.25
    methods: tuple[str, ...] = METHODS
    variant: ConstraintVariant = PLAIN
    seed: int = 20090601
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass
class RepResult:
    """What one repetition contributes to the report."""

    outcomes: dict[str, TestOutcome]
    sorted_p: dict[str, np.ndarray]
    sorted_coeffs: dict[str, np.ndarray]
    infeasible: dict[str, int]


@dataclass
class SimReport:
    config: SimConfig
    metrics: dict[str, Metrics]
    curves: dict[str, tuple[np.ndarray, np.ndarray]]
    coeff_curves: dict[str, tuple[np.ndarray, np.ndarray]]
    infeasible_counts: dict[str, int] = field(default_factory=dict)


def run_repetition(config: SimConfig, rep: int) -> RepResult:
    model = config.model
    sample = sample_mixture(model, config.n, config.seed, rep)
    psets = compute_pvalues(sample, model.family, model.prior, config.methods, config.variant)
    outcomes, sorted_p, sorted_coeffs, infeasible = {}, {}, {}, {}
    for m, ps in psets.items():
        outcomes[m] = bh_reject(ps.p, config.alpha, sample.x, sample.labels)
        order = np.argsort(ps.p, kind="stable")
        sorted_p[m] = ps.p[order]
        if ps.coeffs is not None:
            sorted_coeffs[m] = ps.coeffs[order]
        if ps.infeasible_flags is not None:
            infeasible[m] = int(ps.infeasible_flags.sum())
    return RepResult(outcomes, sorted_p, sorted_coeffs, infeasible)


def _run_chunk(args) -> list[RepResult]:
    config, reps = args
    return [run_repetition(config, r) for r in reps]


def pvalue_curves(sorted_ps) -> tuple[np.ndarray, np.ndarray]:
    """Average the i-th smallest p-value over repetitions; return (i/n, n * pbar_(i) / i)."""
    ps = [np.asarray(p, dtype=float) for p in sorted_ps]
    if not ps:
        raise ValueError("no repetitions")
    n = ps[0].size
    if any(p.size != n for p in ps):
        raise ValueError("all repetitions must share n")
    pbar = np.mean(np.stack(ps), axis=0)
    i = np.arange(1, n + 1)
    return i / n, n * pbar / i


def coefficient_curves(sorted_coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Average optimising coefficients rank by rank; return (i/n, (n, L) averages)."""
    cs = [np.asarray(c, dtype=float) for c in sorted_coeffs]
    if not cs or any(c is None for c in cs):
        raise ValueError("coefficient curves need seq or glb coefficients")
    n = cs[0].shape[0]
    if any(c.shape != cs[0].shape for c in cs):
        raise ValueError("all repetitions must share n and L")
    return np.arange(1, n + 1) / n, np.mean(np.stack(cs), axis=0)


def run_simulation(config: SimConfig, progress: bool = False) -> SimReport:
    """Run ``config.reps`` repetitions and aggregate.

    Repetition r draws from a generator keyed on (seed, r), so results do
    not depend on the number of worker processes.
    """
    reps = list(range(config.reps))
    if config.threads > 1:
        chunks = [reps[k :: config.threads] for k in range(config.threads)]
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
        by_rep = {}
        for chunk, part in zip(chunks, parts):
            by_rep.update(zip(chunk, part))
        results = [by_rep[r] for r in reps]
    else:
        results = []
        for r in reps:
            results.append(run_repetition(config, r))
            if progress and (r + 1) % max(1, config.reps // 10) == 0:
                log.info("repetition %d/%d", r + 1, config.reps)

    metrics, curves, coeff_curves, infeasible = {}, {}, {}, {}
    for m in config.methods:
        metrics[m] = run_metrics([res.outcomes[m] for res in results])
        curves[m] = pvalue_curves([res.sorted_p[m] for res in results])
        if m in ("seq", "glb"):
            coeff_curves[m] = coefficient_curves([res.sorted_coeffs[m] for res in results])
            infeasible[m] = sum(res.infeasible[m] for res in results)
    return SimReport(config, metrics, curves, coeff_curves, infeasible)
