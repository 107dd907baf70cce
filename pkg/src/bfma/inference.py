"""Posterior odds, model-averaged tests, and p-value interconversion.

The posterior odds of model s against the no-candidate baseline are

    PO_s = mu^|s| * xi^(|s|/2) * MLR_s^(1 - xi),    xi = h / (n + h),

with mu the prior odds of including each variable and h the prior precision.
The model-averaged odds against an intersection null (a set T of coefficients
pinned to zero) classify every model by whether it touches T:

    PO(T) = sum_{s hits T} PO_s / sum_{s avoids T} PO_s.

Everything accumulates in log space; MLR exponents routinely reach hundreds.

Tail conversions use the one-degree-of-freedom chi-squared upper tail
Pr(chi2_1 >= d) = erfc(sqrt(d/2)). Two normalizing constants appear:

* unadjusted p-values divide the odds by (1 + mu*sqrt(xi))^k - 1, the exact
  mean of the summed null odds over the k tested coefficients (this is the
  model-averaged deviance scale, and it reproduces reported reference values
  at k as large as 15);
* adjusted p-values and the FWER bound divide by nu * mu * sqrt(xi), the
  first-order form of the same constant, which is the scale on which the
  familywise bound is stated.

The two agree to first order in mu*sqrt(xi) and exactly at k = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erfc, erfcinv, logsumexp
from scipy.stats import chi2

from .linmodel import ExhaustiveScan, FitResult

__all__ = [
    "Hyperparams",
    "NullHypothesis",
    "TestReport",
    "CoefficientEstimate",
    "log_posterior_odds_model",
    "posterior_odds_model",
    "bayes_factor",
    "attach_posterior_odds",
    "model_averaged_log_po",
    "model_averaged_po",
    "po_to_p_unadjusted",
    "po_to_p_adjusted",
    "p_to_po",
    "fwer_threshold",
    "tau_for_fwer",
    "coefficient_estimates",
    "intervals",
    "classical_power",
    "chi2_1_tail",
    "chi2_1_quantile",
    "REMARK_CENSOR_LEVEL",
]

# Adjusted p-values larger than this are reported as 1: beyond it the
# one-degree-of-freedom tail approximation can be anti-conservative.
REMARK_CENSOR_LEVEL = 0.025


def chi2_1_tail(deviance: float) -> float:
    """Upper tail of chi-squared with 1 df, stable far into the tail."""
    if deviance <= 0.0:
        return 1.0
    return float(erfc(math.sqrt(deviance / 2.0)))


def chi2_1_quantile(p_upper: float) -> float:
    """Deviance with upper-tail probability `p_upper` under chi2_1."""
    if not 0.0 < p_upper <= 1.0:
        raise ValueError("upper-tail probability must be in (0, 1]")
    return 2.0 * float(erfcinv(p_upper)) ** 2


@dataclass(frozen=True)
class Hyperparams:
    """Model prior odds mu, prior precision h, rejection threshold tau, sample size n."""

    mu: float
    h: float
    tau: float
    n: int

    def __post_init__(self) -> None:
        for name in ("mu", "h", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.n > 0:
            raise ValueError("n must be a positive integer")

    @property
    def xi(self) -> float:
        """Shrinkage factor h/(n+h), in (0, 1)."""
        return self.h / (self.n + self.h)

    @property
    def shrink(self) -> float:
        """Posterior shrinkage n/(n+h) applied to means and variances."""
        return self.n / (self.n + self.h)

    @property
    def log_mu_sqrt_xi(self) -> float:
        return math.log(self.mu) + 0.5 * math.log(self.xi)

    @property
    def fdr_bound(self) -> float:
        return 1.0 / (1.0 + self.tau)


@dataclass(frozen=True)
class NullHypothesis:
    """Intersection null: the coefficients indexed by `tested` are all zero."""

    tested: frozenset[int]
    nu: int

    def __post_init__(self) -> None:
        tested = frozenset(int(j) for j in self.tested)
        object.__setattr__(self, "tested", tested)
        if not tested:
            raise ValueError("tested set must be nonempty")
        if not all(0 <= j < self.nu for j in tested):
            raise ValueError("tested indices out of range")

    @property
    def k(self) -> int:
        return len(self.tested)

    @property
    def mask(self) -> int:
        m = 0
        for j in self.tested:
            m |= 1 << j
        return m


@dataclass(frozen=True)
class CoefficientEstimate:
    variable: int
    name: str
    classical_mean: float
    classical_se: float
    bayes_mean: float
    bayes_se: float
    inclusion_prob: float


@dataclass(frozen=True)
class TestReport:
    """Outcome of one model-averaged group test."""

    tested: tuple[int, ...]
    tested_names: tuple[str, ...]
    log_po: float
    po: float
    p_unadj: float
    p_adj: float
    p_adj_raw: float
    fdr_bound: float | None       # 1/(1+po), reported on rejection
    rejected_bayes: bool
    rejected_fwer: bool           # p_adj <= alpha
    tau: float
    alpha: float
    declared_nu: int
    mode: str                     # "full" or "sub-analysis"
    excluded_names: tuple[str, ...] = ()


def log_posterior_odds_model(log_mlr: float, size: int, hyper: Hyperparams) -> float:
    """log PO_s from a model's log MLR and its parameter count."""
    return size * hyper.log_mu_sqrt_xi + (1.0 - hyper.xi) * log_mlr


def posterior_odds_model(fit: FitResult, hyper: Hyperparams) -> float:
    return math.exp(log_posterior_odds_model(fit.log_mlr, fit.model.size, hyper))


def bayes_factor(fit: FitResult, hyper: Hyperparams) -> float:
    """Posterior odds stripped of the model prior: PO_s = mu^|s| * BF_s."""
    size = fit.model.size
    return math.exp(0.5 * size * math.log(hyper.xi) + (1.0 - hyper.xi) * fit.log_mlr)


def attach_posterior_odds(scan: ExhaustiveScan, hyper: Hyperparams) -> ExhaustiveScan:
    """Fill scan.log_po from the fitted log MLRs; returns the same object."""
    if hyper.n != scan.data.n:
        raise ValueError(f"hyperparams expect n={hyper.n} but the scan has n={scan.data.n}")
    scan.log_po = (
        scan.model_size.astype(float) * hyper.log_mu_sqrt_xi
        + (1.0 - hyper.xi) * scan.log_mlr
    )
    return scan


def _null_masks(scan: ExhaustiveScan, null: NullHypothesis) -> np.ndarray:
    s = np.arange(scan.n_models, dtype=np.int64)
    return (s & null.mask) == 0


def model_averaged_log_po(scan: ExhaustiveScan, null: NullHypothesis) -> float:
    """log of the model-averaged posterior odds against the intersection null."""
    if scan.log_po is None:
        raise ValueError("scan has no posterior odds attached; call attach_posterior_odds")
    if null.nu != scan.nu:
        raise ValueError("null hypothesis is over a different variable count")
    compatible = _null_masks(scan, null)
    log_num = logsumexp(scan.log_po[~compatible])
    log_den = logsumexp(scan.log_po[compatible])
    return float(log_num - log_den)


def model_averaged_po(scan: ExhaustiveScan, null: NullHypothesis) -> float:
    return math.exp(model_averaged_log_po(scan, null))


def _log_exact_constant(k: int, hyper: Hyperparams) -> float:
    """log[(1 + mu*sqrt(xi))^k - 1]: exact null scale of k summed odds."""
    if k < 1:
        raise ValueError("at least one tested coefficient is required")
    c = hyper.mu * math.sqrt(hyper.xi)
    return math.log(math.expm1(k * math.log1p(c)))


def _log_linear_constant(nu: int, hyper: Hyperparams) -> float:
    """log[nu * mu * sqrt(xi)]: first-order scale used by the FWER bound."""
    if nu < 1:
        raise ValueError("variable count must be at least 1")
    return math.log(nu) + hyper.log_mu_sqrt_xi


def po_to_p_unadjusted(
    po: float, k: int, hyper: Hyperparams, *, log_po: float | None = None
) -> float:
    """Asymptotic p-value of the model-averaged odds against a k-coefficient null.

    Pass `log_po` to avoid overflow when the odds exceed float range.
    """
    lp = math.log(po) if log_po is None else log_po
    return chi2_1_tail(2.0 * (lp - _log_exact_constant(k, hyper)))


def po_to_p_adjusted(
    po: float,
    nu: int,
    hyper: Hyperparams,
    censor: bool = True,
    *,
    log_po: float | None = None,
) -> float:
    """Asymptotic multiplicity-adjusted p-value over nu declared variables.

    With `censor` (the default reporting policy), values above 0.025 are
    reported as 1 because the tail approximation is unreliable there; pass
    censor=False for the raw number.
    """
    lp = math.log(po) if log_po is None else log_po
    p = chi2_1_tail(2.0 * (lp - _log_linear_constant(nu, hyper)))
    if censor and p > REMARK_CENSOR_LEVEL:
        return 1.0
    return p


def p_to_po(p: float, k: int, hyper: Hyperparams) -> float:
    """Inverse of po_to_p_unadjusted. Rejects p = 0."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    log_po = _log_exact_constant(k, hyper) + 0.5 * chi2_1_quantile(p)
    return math.exp(log_po)


def fwer_threshold(hyper: Hyperparams, nu: int) -> float:
    """Asymptotic bound on the familywise error rate of the tau-threshold test."""
    log_ratio = math.log(hyper.tau) - _log_linear_constant(nu, hyper)
    if log_ratio <= 0.0:
        return 1.0
    return chi2_1_tail(2.0 * log_ratio)


def tau_for_fwer(alpha: float, nu: int, *, mu: float, h: float, n: int) -> float:
    """Posterior-odds threshold whose asymptotic FWER bound equals alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    hyper = Hyperparams(mu=mu, h=h, tau=1.0, n=n)
    return math.exp(_log_linear_constant(nu, hyper) + 0.5 * chi2_1_quantile(alpha))


def coefficient_estimates(
    scan: ExhaustiveScan, hyper: Hyperparams
) -> list[CoefficientEstimate]:
    """Model-averaged point estimates and standard errors per variable.

    Models are weighted by their posterior odds. Within each model the
    Bayesian mean and variance shrink the classical ones by n/(n+h); a
    variable excluded from a model contributes a point mass at zero. The
    mixture variance follows the law of total variance, for the classical
    and Bayesian summaries alike.
    """
    if scan.log_po is None:
        raise ValueError("scan has no posterior odds attached")
    nu = scan.nu
    w = np.exp(scan.log_po - logsumexp(scan.log_po))
    w /= w.sum()
    r = hyper.shrink

    mean_c = np.zeros(nu)
    m2_c = np.zeros(nu)     # E[w * beta^2]
    var_in_c = np.zeros(nu)  # E[w * var], classical
    incl = np.zeros(nu)
    for bits in range(scan.n_models):
        if w[bits] == 0.0:
            continue
        fit = scan.refit(bits)
        idx = np.asarray(fit.model.indices(), dtype=int)
        if idx.size == 0:
            continue
        var_jj = np.diag(fit.cov_beta)
        incl[idx] += w[bits]
        mean_c[idx] += w[bits] * fit.beta_hat
        m2_c[idx] += w[bits] * fit.beta_hat**2
        var_in_c[idx] += w[bits] * var_jj

    out = []
    for j in range(nu):
        vc = var_in_c[j] + m2_c[j] - mean_c[j] ** 2
        mb = r * mean_c[j]
        vb = r * var_in_c[j] + r * r * m2_c[j] - mb * mb
        out.append(
            CoefficientEstimate(
                variable=j,
                name=scan.data.names[j],
                classical_mean=float(mean_c[j]),
                classical_se=float(np.sqrt(max(vc, 0.0))),
                bayes_mean=float(mb),
                bayes_se=float(np.sqrt(max(vb, 0.0))),
                inclusion_prob=float(incl[j]),
            )
        )
    return out


def intervals(
    est: CoefficientEstimate, *, alpha: float, tau: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Classical confidence interval and Bayesian credibility interval.

    The classical interval has level 1 - alpha; the credibility interval has
    level 1 - 1/(1+tau), so the two rejection rules line up with the test
    thresholds. For a mixture estimate this is the mean +/- z * sd
    approximation; for a single-model estimate it is exact.
    """
    z_c = float(erfcinv(alpha)) * math.sqrt(2.0)
    z_b = float(erfcinv(1.0 / (1.0 + tau))) * math.sqrt(2.0)
    ci = (est.classical_mean - z_c * est.classical_se, est.classical_mean + z_c * est.classical_se)
    cred = (est.bayes_mean - z_b * est.bayes_se, est.bayes_mean + z_b * est.bayes_se)
    return ci, cred


def classical_power(k: int, hyper: Hyperparams) -> float:
    """Frequentist power of the tau-threshold Bayesian test of a k-dim model.

    Under the working prior the deviance is an inflated chi-squared, giving
    Pr(chi2_k >= (1 + n/h)^-1 * Q_{chi2_k}(1 - 1/(1+tau))).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    q = chi2.ppf(1.0 - 1.0 / (1.0 + hyper.tau), df=k)
    return float(chi2.sf(q / (1.0 + hyper.n / hyper.h), df=k))
