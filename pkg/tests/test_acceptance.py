"""Acceptance checks; each prints one PASS/FAIL line.

Run under pytest (lines are repeated in the terminal summary) or as
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from compnull.bh import RnBoundInputs, bh_reject, fdr_bound_rn
from compnull.empirical import EcdfView, epsilon_n, ks_distance
from compnull.lp_core import lp_brute_oracle, lp_maximize
from compnull.model import MixtureModel, sample_mixture, table1_preset
from compnull.prior_mle import density_matrix, em_fit_prior
from compnull.pvalues import PLAIN, PRIMED, ConstraintVariant, compute_pvalues
from compnull.simharness import SimConfig, run_simulation
from oracles import bh_scan, random_lp, refine_grid_search

RESULTS: list[str] = []
PRESET1 = table1_preset(1)
TIGHT = ConstraintVariant(pair_margin="tight")


def record(num: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def _preset1_bh_cheap():
    return run_simulation(SimConfig(PRESET1, n=5000, reps=200, methods=("mix", "max")))


@functools.lru_cache(maxsize=None)
def _preset1_bh_lp(variant: ConstraintVariant):
    return run_simulation(SimConfig(PRESET1, n=5000, reps=100, methods=("seq", "glb"), variant=variant))


def test_c01_mix_power_fdr():
    m = _preset1_bh_cheap().metrics["mix"]
    ok = abs(m.power - 0.770) <= 0.02 and abs(m.fdr - 0.238) <= 0.015
    assert record(1, ok, f"mix power {m.power:.4f} (0.770 +- 0.02), FDR {m.fdr:.4f} (0.238 +- 0.015)")


def test_c02_max_power_fdr():
    m = _preset1_bh_cheap().metrics["max"]
    ok = abs(m.power - 0.223) <= 0.02 and abs(m.fdr - 0.0255) <= 0.006
    assert record(2, ok, f"max power {m.power:.4f} (0.223 +- 0.02), FDR {m.fdr:.4f} (0.0255 +- 0.006)")


def _lp_ok(rep):
    s, g = rep.metrics["seq"], rep.metrics["glb"]
    near = all(abs(x.power - 0.495) <= 0.05 and abs(x.fdr - 0.086) <= 0.015 for x in (s, g))
    agree = abs(s.power - g.power) <= 0.01 and abs(s.fdr - g.fdr) <= 0.005
    return near and agree


def test_c03_seq_glb_power_fdr():
    parts, oks = [], []
    for name, variant in (("relaxed", PLAIN), ("tight", TIGHT)):
        rep = _preset1_bh_lp(variant)
        s, g = rep.metrics["seq"], rep.metrics["glb"]
        infeas = rep.infeasible_counts["seq"] / (100 * 5000)
        oks.append(_lp_ok(rep))
        parts.append(
            f"{name}: seq {s.power:.4f}/{s.fdr:.4f} glb {g.power:.4f}/{g.fdr:.4f} infeasible {infeas:.1%}"
        )
    ok = any(oks)
    detail = "power/FDR vs 0.495 +- 0.05 / 0.086 +- 0.015; " + "; ".join(parts)
    assert record(3, ok, detail)


def test_c04_primed_gain():
    plain = _preset1_bh_lp(PLAIN)
    primed = _preset1_bh_lp(PRIMED)
    gaps = {m: primed.metrics[m].power - plain.metrics[m].power for m in ("seq", "glb")}
    ok = all(g >= 0.02 and abs(g - 0.046) <= 0.05 for g in gaps.values())
    detail = ", ".join(f"{m} gain {g:.4f}" for m, g in gaps.items()) + " (>= 0.02, 0.046 +- 0.05)"
    assert record(4, ok, detail)


def test_c05_rn_constant():
    r = fdr_bound_rn(RnBoundInputs.default(5000))
    assert record(5, abs(r - 9.64e-3) <= 1e-4, f"r_n(5000) = {r:.5e} (9.64e-3 +- 1e-4)")


def test_c06_domination():
    worst = 0.0
    primed_viol = 0.0
    for rep in range(100):
        s = sample_mixture(PRESET1, 200, 606, rep)
        plain = compute_pvalues(s, PRESET1.family, PRESET1.prior, ("seq", "glb", "max"), PLAIN)
        primed = compute_pvalues(s, PRESET1.family, PRESET1.prior, ("seq", "glb"), PRIMED)
        worst = max(worst, np.max(plain["glb"].p - plain["seq"].p), np.max(plain["seq"].p - plain["max"].p))
        for m in ("seq", "glb"):
            ok = ~primed[m].infeasible_flags
            if ok.any():
                primed_viol = max(primed_viol, np.max(primed[m].p[ok] - plain[m].p[ok]))
    ok = worst <= 1e-8 and primed_viol <= 1e-8
    assert record(6, ok, f"max chain violation {worst:.2e}, max primed-over-plain {primed_viol:.2e} (<= 1e-8)")


def test_c07_lp_oracle():
    rng = np.random.default_rng(7)
    feasible = mismatched = 0
    gap = 0.0
    while feasible < 1000:
        lp = random_lp(rng, max_rows=40)
        a, b = lp_maximize(lp), lp_brute_oracle(lp)
        if a.status != b.status:
            mismatched += 1
            continue
        if a.optimal:
            feasible += 1
            gap = max(gap, abs(a.value - b.value))
    ok = mismatched == 0 and gap <= 1e-6
    assert record(7, ok, f"{feasible} feasible programs, status mismatches {mismatched}, max gap {gap:.2e} (<= 1e-6)")


def test_c08_bh_oracle():
    rng = np.random.default_rng(8)
    bad = 0
    for _ in range(200):
        n = int(rng.integers(1, 501))
        x = np.sort(rng.normal(size=n))
        p = np.sort(rng.beta(0.4, 1.0, size=n))
        alpha = float(rng.uniform(0.01, 0.5))
        bad += bh_reject(p, alpha, x).R != bh_scan(p, x, alpha)
    assert record(8, bad == 0, f"{bad} of 200 instances differ from the exhaustive scan")


def test_c09_fdr_bound():
    m = run_simulation(SimConfig(PRESET1, n=1000, reps=500, methods=("seq",))).metrics["seq"]
    rn = fdr_bound_rn(RnBoundInputs.default(1000))
    bound = 0.25 + rn + m.mean_inv_r + 3 * m.fdr_se
    assert record(9, m.fdr <= bound, f"FDR {m.fdr:.4f} <= 0.25 + r_n {rn:.4f} + {m.mean_inv_r:.4f} + 3se = {bound:.4f}")


def test_c10_mle():
    model = MixtureModel(PRESET1.family, PRESET1.prior, 0.0, PRESET1.alt)
    err = grid = 0.0
    mono = True
    for seed in range(3):
        s = sample_mixture(model, 20000, 1000 + seed)
        dens = density_matrix(s, PRESET1.family)
        res = em_fit_prior(s, PRESET1.family, dens=dens)
        err = max(err, np.max(np.abs(res.nu_hat - PRESET1.prior.nu)))
        grid = max(grid, np.max(np.abs(res.nu_hat - refine_grid_search(dens))))
        t = np.array(res.trace)
        mono &= bool(np.all(np.diff(t) >= -1e-12 * np.abs(t).max()))
    ok = err <= 0.03 and grid <= 0.01 and mono
    assert record(10, ok, f"|nu_hat - nu| {err:.4f} (<= 0.03), grid gap {grid:.4f} (<= 0.01), EM monotone {mono}")


def test_c11_dkw():
    eps = epsilon_n(1000)
    hits, worst = 0, 0.0
    for rep in range(200):
        s = sample_mixture(PRESET1, 1000, 11, rep)
        d = ks_distance(EcdfView(s.x), PRESET1.s_cdf(s.x))
        worst = max(worst, d)
        hits += d > eps
    assert record(11, hits == 0, f"{hits} of 200 reps exceed eps_n = {eps:.4f} (max sup gap {worst:.4f})")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
