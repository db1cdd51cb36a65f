import math

import numpy as np
import pytest

from compnull.bh import RnBoundInputs, TestOutcome, bh_reject, fdr_bound_rn, run_metrics
from oracles import bh_scan


def test_small_example():
    out = bh_reject(np.array([0.01, 0.02, 0.9]), 0.25)
    assert out.R == 2 and list(out.rejected) == [True, True, False]


def test_extremes():
    assert bh_reject(np.ones(10), 0.1).R == 0
    assert bh_reject(np.zeros(10), 0.1).R == 10


def test_alpha_domain():
    with pytest.raises(ValueError):
        bh_reject(np.zeros(3), 0.0)


def test_step_up_jumps_over_failures():
    # p_(2) fails its own threshold but p_(3) passes, so all three go
    out = bh_reject(np.array([0.01, 0.2, 0.2]), 0.25)
    assert out.R == 3


def test_ties_count_together():
    x = np.array([1.0, 2.0, 2.0, 3.0])
    p = np.array([0.01, 0.15, 0.15, 0.9])
    out = bh_reject(p, 0.25, x)
    assert out.R == 3 and list(out.rejected) == [True, True, True, False]


def test_matches_threshold_scan():
    rng = np.random.default_rng(77)
    for _ in range(200):
        n = int(rng.integers(1, 501))
        x = np.sort(np.round(rng.normal(size=n), int(rng.integers(1, 4))))
        p = np.sort(rng.beta(0.3, 1.0, size=n))
        alpha = float(rng.uniform(0.01, 0.5))
        out = bh_reject(p, alpha, x)
        assert out.R == bh_scan(p, x, alpha)
        if out.R:
            assert np.array_equal(out.rejected, x <= x[out.rejected].max())


def test_labels_give_v():
    out = bh_reject(np.array([0.0, 0.0, 1.0]), 0.2, labels=np.array([True, False, True]))
    assert out.V == 1 and out.n_false == 1


def _outcome(R, V, n_false):
    return TestOutcome(R, np.zeros(0, bool), 0.25, V, n_false)


def test_metrics_single_rep():
    m = run_metrics([_outcome(4, 1, 10)])
    assert m.fdr == 0.25 and m.power == pytest.approx(0.3) and m.pfdr == 0.25 and m.sd_tpp == 0.0


def test_metrics_zero_rejections():
    m = run_metrics([_outcome(0, 0, 10), _outcome(4, 2, 10)])
    assert m.fdr == 0.25 and m.pfdr == 0.5 and m.mean_inv_r == pytest.approx(0.125)
    assert m.sd_tpp == pytest.approx(np.std([0.0, 0.2], ddof=1))
    assert run_metrics([_outcome(0, 0, 5)]).pfdr is None


def test_metrics_no_false_nulls():
    m = run_metrics([_outcome(3, 3, 0), _outcome(0, 0, 0)])
    assert m.power == 0.0


def test_rn_bound_value():
    assert fdr_bound_rn(RnBoundInputs.default(5000)) == pytest.approx(9.64e-3, abs=1e-4)


def test_rn_bound_beta_one_limit():
    inp = RnBoundInputs.default(5000, beta=1.0)
    dkw = 2 * 73 * math.exp(-2 * math.log(5000))
    assert fdr_bound_rn(inp) == pytest.approx(dkw + inp.a_n * (1 / 5000 + 1))


def test_rn_bound_large_n():
    assert fdr_bound_rn(RnBoundInputs.default(10**6)) < 1e-3


def test_rn_inputs_validation():
    with pytest.raises(ValueError):
        RnBoundInputs(0, 0.1, 5, 2.0, 0.95)
