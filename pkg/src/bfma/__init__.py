"""Model-averaged Bayesian-frequentist hypothesis testing for linear regression."""

from .linmodel import (
    CorrelationMatrix,
    Dataset,
    ExhaustiveScan,
    FitResult,
    ModelId,
    NuisanceSpec,
    correlation_matrix,
    fit_submodel,
    scan_all_models,
)
from .inference import (
    CoefficientEstimate,
    Hyperparams,
    NullHypothesis,
    TestReport,
    attach_posterior_odds,
    bayes_factor,
    classical_power,
    coefficient_estimates,
    fwer_threshold,
    intervals,
    model_averaged_log_po,
    model_averaged_po,
    p_to_po,
    po_to_p_adjusted,
    po_to_p_unadjusted,
    posterior_odds_model,
    tau_for_fwer,
)
from .ctp import (
    GroupingPolicy,
    XcritResult,
    build_grouping,
    combine_bonferroni,
    combine_hmp,
    combine_simes,
    is_admissible,
    leave_one_out_tests,
    minimal_significant_groups,
    select_subset,
    test_group,
    xcrit_threshold,
)
from .session import AnalysisSession, fit_session
from .simlab import (
    PriorSimConfig,
    SimReport,
    TwoVarConfig,
    evalue_bound,
    fdr_calibration,
    sim_prior_bfwer,
    sim_two_variable,
    strikeout_rate,
)

__version__ = "0.1.0"
