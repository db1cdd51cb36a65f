"""Step-up rejection on composite-null p-values, Monte-Carlo error metrics and the r_n bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .empirical import EcdfView


@dataclass(frozen=True)
class TestOutcome:
    R: int
    rejected: np.ndarray
    alpha: float
    V: int | None = None
    n_false: int | None = None  # n - N, number of false nulls

    __test__ = False  # not a pytest class


def bh_reject(p, alpha: float, x=None, labels=None) -> TestOutcome:
    """Step-up procedure on p-values aligned to the sorted statistics ``x``.

    Finds the largest i with p_(i) / alpha <= (R_n(x_(i)) v 1) / n and rejects
    every observation with x <= x_(i). ``x`` defaults to distinct
    statistics, in which case R_n(x_(i)) = i.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    p = np.asarray(p, dtype=float)
    n = p.size
    if x is None:
        counts = np.arange(1, n + 1)
        x = np.arange(n, dtype=float)
    else:
        x = np.asarray(x, dtype=float)
        counts = EcdfView(x).rank_count(x)
    ok = p / alpha <= np.maximum(counts, 1) / n
    hits = np.flatnonzero(ok)
    rejected = np.zeros(n, dtype=bool)
    if hits.size:
        cut = x[hits[-1]]
        rejected = x <= cut
    R = int(rejected.sum())
    V = n_false = None
    if labels is not None:
        labels = np.asarray(labels, dtype=bool)
        V = int((rejected & labels).sum())
        n_false = int((~labels).sum())
    return TestOutcome(R, rejected, alpha, V, n_false)


@dataclass(frozen=True)
class Metrics:
    fdr: float
    pfdr: float | None
    power: float
    sd_tpp: float
    reps: int
    fdr_se: float
    mean_inv_r: float  # mean of 1{R>0} / (R v 1)


def run_metrics(outcomes: Sequence[TestOutcome]) -> Metrics:
    """Average FDR, pFDR and power over repetitions.

    pFDR is None when no repetition rejects anything. sd_tpp is the sample
    standard deviation of (R - V) / (n - N) across repetitions.
    """
    if not outcomes:
        raise ValueError("need at least one repetition")
    R = np.array([o.R for o in outcomes], dtype=float)
    V = np.array([o.V for o in outcomes], dtype=float)
    nf = np.array([o.n_false for o in outcomes], dtype=float)
    fdp = V / np.maximum(R, 1.0)
    tpp = (R - V) / np.maximum(nf, 1.0)
    pos = R > 0
    pfdr = float(np.mean(V[pos] / R[pos])) if pos.any() else None
    k = len(outcomes)
    return Metrics(
        fdr=float(fdp.mean()),
        pfdr=pfdr,
        power=float(tpp.mean()),
        sd_tpp=float(tpp.std(ddof=1)) if k > 1 else 0.0,
        reps=k,
        fdr_se=float(fdp.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
        mean_inv_r=float(np.mean(pos / np.maximum(R, 1.0))),
    )


@dataclass(frozen=True)
class RnBoundInputs:
    n: int
    epsilon_n: float
    grid_size: int
    a_n: float
    beta: float

    def __post_init__(self):
        if min(self.n, self.epsilon_n, self.grid_size, self.a_n) <= 0:
            raise ValueError("r_n inputs must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")

    @classmethod
    def default(cls, n: int, beta: float = 0.95, exponent: float = 0.2) -> "RnBoundInputs":
        return cls(n, math.sqrt(math.log(n) / n), int(math.floor(math.log(n) ** 2)), n**exponent, beta)


def fdr_bound_rn(inputs: RnBoundInputs) -> float:
    """Remainder term beyond alpha in the finite-sample FDR bound of the sequential procedure."""
    n, eps = inputs.n, inputs.epsilon_n
    dkw = 2.0 * (1 + inputs.grid_size) * math.exp(-2.0 * n * eps * eps)
    b = inputs.beta
    gamma_part = inputs.a_n * (1.0 / n + (b * math.exp(1.0 - b)) ** (n + 1))
    return dkw + gamma_part
