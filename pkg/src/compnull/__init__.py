"""P-values for composite null hypotheses and FDR control on them."""

from .bh import Metrics, TestOutcome, bh_reject, fdr_bound_rn, RnBoundInputs, run_metrics
from .lp_core import LinearProgram, LpSolution, lp_brute_oracle, lp_maximize
from .model import DistributionSpec, LabeledSample, MixtureModel, NullFamily, Prior, sample_mixture, table1_preset
from .prior_mle import check_rho_condition, em_fit_prior, extended_mle
from .pvalues import PLAIN, PRIMED, ConstraintVariant, PValueSet, compute_pvalues, p_constrained
from .simharness import SimConfig, SimReport, run_simulation

__all__ = [
    "ConstraintVariant", "DistributionSpec", "LabeledSample", "LinearProgram", "LpSolution", "Metrics",
    "MixtureModel", "NullFamily", "PLAIN", "PRIMED", "PValueSet", "Prior", "RnBoundInputs", "SimConfig",
    "SimReport", "TestOutcome", "bh_reject", "check_rho_condition", "compute_pvalues", "em_fit_prior",
    "extended_mle", "fdr_bound_rn", "lp_brute_oracle", "lp_maximize", "p_constrained", "run_metrics",
    "run_simulation", "sample_mixture", "table1_preset",
]
