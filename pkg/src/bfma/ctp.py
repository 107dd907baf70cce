"""Closed-testing semantics: correlation grouping, group tests, baselines.

Highly correlated variables are grouped indivisibly: at threshold rho, the
blocks are the connected components of the graph joining pairs with
|correlation| > rho. A tested set is admissible when it never splits a
block. Restricting the family of nulls this way targets the familywise
error rate over splittable-free hypotheses, which is where finite-sample
inflation concentrates.

Also here: the critical deviance-scale constant above which a single
one-degree-of-freedom tail dominates the k-term mean of exponentiated
half-chi-squared variables (the basis of the 0.025 reporting rule), and
p-value combination baselines (Bonferroni, Simes, harmonic mean).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, optimize
from scipy.special import erfc
from scipy.stats import landau

from .inference import (
    Hyperparams,
    NullHypothesis,
    TestReport,
    chi2_1_tail,
    model_averaged_log_po,
    po_to_p_adjusted,
    po_to_p_unadjusted,
    REMARK_CENSOR_LEVEL,
)
from .linmodel import CorrelationMatrix, Dataset, ModelId, correlation_matrix, fit_submodel
from .session import AnalysisSession

__all__ = [
    "GroupingPolicy",
    "XcritResult",
    "InadmissibleGroupError",
    "UnknownVariablesError",
    "SearchBudgetExceededError",
    "ConvergenceFailureError",
    "build_grouping",
    "is_admissible",
    "rho_max",
    "test_group",
    "minimal_significant_groups",
    "xcrit_threshold",
    "combine_bonferroni",
    "combine_simes",
    "combine_hmp",
    "leave_one_out_tests",
    "select_subset",
]


class InadmissibleGroupError(ValueError):
    """Tested set splits an indivisible block of correlated variables."""

    def __init__(self, message: str, block: tuple[int, ...]):
        super().__init__(message)
        self.block = block


class UnknownVariablesError(KeyError):
    pass


class SearchBudgetExceededError(RuntimeError):
    pass


class ConvergenceFailureError(RuntimeError):
    pass


@dataclass(frozen=True)
class GroupingPolicy:
    """Partition of the variables into indivisible blocks at threshold rho."""

    rho: float
    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, j: int) -> tuple[int, ...]:
        for b in self.blocks:
            if j in b:
                return b
        raise KeyError(f"variable {j} not covered by the grouping")


@dataclass(frozen=True)
class XcritResult:
    x_crit: float
    tail_prob: float


def build_grouping(corr: CorrelationMatrix, rho: float) -> GroupingPolicy:
    """Connected components of the graph with edges |corr| > rho."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    nu = corr.rho.shape[0]
    parent = list(range(nu))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for j in range(nu):
        for k in range(j + 1, nu):
            if abs(corr.rho[j, k]) > rho:
                union(j, k)
    groups: dict[int, list[int]] = {}
    for j in range(nu):
        groups.setdefault(find(j), []).append(j)
    blocks = tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=min))
    return GroupingPolicy(rho=rho, blocks=blocks)


def rho_max(tested: frozenset[int], corr: CorrelationMatrix) -> float:
    """Largest |correlation| between a tested and an untested variable.

    Zero for the grand null and the full alternative, by convention.
    """
    nu = corr.rho.shape[0]
    inside = sorted(tested)
    outside = [j for j in range(nu) if j not in tested]
    if not inside or not outside:
        return 0.0
    return float(np.max(np.abs(corr.rho[np.ix_(inside, outside)])))


def is_admissible(null: NullHypothesis, policy: GroupingPolicy) -> bool:
    """True when no block has members on both sides of the tested set."""
    for block in policy.blocks:
        hit = sum(1 for j in block if j in null.tested)
        if 0 < hit < len(block):
            return False
    return True


def _splitting_block(null: NullHypothesis, policy: GroupingPolicy) -> tuple[int, ...] | None:
    for block in policy.blocks:
        hit = sum(1 for j in block if j in null.tested)
        if 0 < hit < len(block):
            return block
    return None


def test_group(
    session: AnalysisSession,
    tested,
    *,
    rho: float = 1.0,
    tau: float | None = None,
    alpha: float = REMARK_CENSOR_LEVEL,
    allow_inadmissible: bool = False,
) -> TestReport:
    """Model-averaged test that every coefficient in `tested` is zero.

    `tested` may mix names and 0-based indices. The unadjusted p-value is on
    the scale of the tested set; the adjusted one uses the session's declared
    variable count (the full count in a sub-analysis), is never reported
    below the unadjusted value, and is censored to 1 above 0.025. Under a
    sub-analysis the null actually tested is the intersection with all
    excluded variables.
    """
    try:
        idx = session.resolve(tested)
    except KeyError as exc:
        raise UnknownVariablesError(str(exc)) from exc
    if not idx:
        raise ValueError("tested set must be nonempty")
    null = NullHypothesis(tested=idx, nu=session.nu)

    policy = build_grouping(session.corr, rho)
    if not allow_inadmissible and not is_admissible(null, policy):
        block = _splitting_block(null, policy)
        names = tuple(session.names[j] for j in block)
        raise InadmissibleGroupError(
            f"tested set splits the indivisible block {names} at rho={policy.rho}",
            block,
        )

    hyper = session.hyper
    tau_eff = hyper.tau if tau is None else float(tau)
    log_po = model_averaged_log_po(session.scan, null)
    po = math.exp(log_po)
    p_unadj = po_to_p_unadjusted(po, null.k, hyper, log_po=log_po)
    p_raw = po_to_p_adjusted(po, session.declared_nu, hyper, censor=False, log_po=log_po)
    p_raw = max(p_raw, p_unadj)
    p_adj = 1.0 if p_raw > REMARK_CENSOR_LEVEL else p_raw
    rejected = log_po >= math.log(tau_eff)
    ordered = tuple(sorted(idx))
    return TestReport(
        tested=ordered,
        tested_names=tuple(session.names[j] for j in ordered),
        log_po=log_po,
        po=po,
        p_unadj=p_unadj,
        p_adj=p_adj,
        p_adj_raw=p_raw,
        fdr_bound=1.0 / (1.0 + po) if rejected else None,
        rejected_bayes=rejected,
        rejected_fwer=p_adj <= alpha,
        tau=tau_eff,
        alpha=alpha,
        declared_nu=session.declared_nu,
        mode=session.mode,
        excluded_names=session.excluded_names,
    )


def minimal_significant_groups(
    session: AnalysisSession,
    *,
    tau: float | None = None,
    max_size: int | None = None,
    rho: float = 1.0,
    node_budget: int = 1_000_000,
) -> list[tuple[int, ...]]:
    """Admissible rejected groups with no admissible rejected proper subset.

    Admissible tested sets are unions of indivisible blocks, enumerated in
    breadth-first order of total size. A set counts as minimal when its odds
    meet tau and no smaller admissible union nested inside it does. The
    enumeration stops at `max_size` variables and raises after `node_budget`
    evaluated nodes.
    """
    hyper = session.hyper
    tau_eff = hyper.tau if tau is None else float(tau)
    log_tau = math.log(tau_eff)
    max_size = session.nu if max_size is None else int(max_size)
    if max_size > session.nu:
        raise ValueError("max_size cannot exceed the variable count")
    policy = build_grouping(session.corr, rho)
    blocks = policy.blocks

    # every union of blocks with total size <= max_size, smallest first
    candidates: list[tuple[int, frozenset[int]]] = []
    n_blocks = len(blocks)
    nodes = 0
    for mask in range(1, 1 << n_blocks):
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceededError(
                f"group search exceeded the node budget of {node_budget}"
            )
        members = [blocks[b] for b in range(n_blocks) if mask >> b & 1]
        size = sum(len(b) for b in members)
        if size > max_size:
            continue
        tested = frozenset(j for b in members for j in b)
        candidates.append((size, tested))
    candidates.sort(key=lambda t: (t[0], sorted(t[1])))

    rejected: list[frozenset[int]] = []
    minimal: list[tuple[int, ...]] = []
    for _, tested in candidates:
        null = NullHypothesis(tested=tested, nu=session.nu)
        if model_averaged_log_po(session.scan, null) < log_tau:
            continue
        if any(prev < tested for prev in rejected):
            rejected.append(tested)
            continue
        rejected.append(tested)
        minimal.append(tuple(sorted(tested)))
    return minimal


def _one_term_tail(x: float) -> float:
    """Pr(X >= x) for X = exp(G), G ~ Gamma(1/2, 1); so 2 log X ~ chi2_1."""
    if x <= 1.0:
        return 1.0
    return float(erfc(math.sqrt(math.log(x))))


def _two_term_tail(x: float, epsabs: float) -> float:
    """Pr((X1 + X2)/2 >= x) for iid X_i as above, by convolution.

    Substituting y = exp(t^2) removes the density's endpoint singularity:

        Pr(X1 + X2 >= 2x) = Pr(X2 >= 2x - 1)
            + (2/sqrt(pi)) * int_0^T exp(-t^2) * tail1(2x - exp(t^2)) dt,

    with T = sqrt(log(2x - 1)); the integrand is smooth on [0, T].
    """
    if x <= 1.0:
        return 1.0
    upper = 2.0 * x - 1.0
    T = math.sqrt(math.log(upper))

    def integrand(t: float) -> float:
        z = 2.0 * x - math.exp(t * t)
        return math.exp(-t * t) * _one_term_tail(z)

    val, _ = integrate.quad(integrand, 0.0, T, epsabs=epsabs, epsrel=epsabs, limit=400)
    return _one_term_tail(upper) + 2.0 / math.sqrt(math.pi) * val


def xcrit_threshold(epsabs: float = 1e-10) -> XcritResult:
    """Deviance-scale point where the one-term tail overtakes the two-term mean.

    Solves Pr(X_bar_1 >= x) = Pr(X_bar_2 >= x) for x in [2, 100] by adaptive
    quadrature of the convolution and a bracketing root-finder. Above the
    root, the single-variable tail dominates the k-term means for every k,
    which is what makes the one-degree-of-freedom conversion conservative.
    """

    def gap(x: float) -> float:
        return _two_term_tail(x, epsabs) - _one_term_tail(x)

    lo, hi = 2.0, 100.0
    if not (gap(lo) > 0.0 > gap(hi)):
        raise ConvergenceFailureError("tail crossing is not bracketed on [2, 100]")
    try:
        x_crit = optimize.brentq(gap, lo, hi, xtol=1e-10, rtol=8.9e-16)
    except RuntimeError as exc:  # pragma: no cover - brentq convergence
        raise ConvergenceFailureError(str(exc)) from exc
    return XcritResult(x_crit=float(x_crit), tail_prob=_one_term_tail(float(x_crit)))


def _checked_pvalues(pvals) -> np.ndarray:
    p = np.asarray(list(pvals), dtype=float)
    if p.size == 0:
        raise ValueError("no p-values to combine")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ValueError("p-values must lie in (0, 1]")
    return p


def combine_bonferroni(pvals) -> float:
    p = _checked_pvalues(pvals)
    return float(min(1.0, p.size * p.min()))


def combine_simes(pvals) -> float:
    p = np.sort(_checked_pvalues(pvals))
    k = p.size
    return float(min(1.0, np.min(p * k / np.arange(1, k + 1))))


# Location shift of the limiting Landau law for the sum of inverse uniform
# p-values with uniform weights: 1 - euler_gamma + log(pi/2).
_HMP_LANDAU_OFFSET = 1.0 - np.euler_gamma + math.log(math.pi / 2.0)


def combine_hmp(pvals, weights=None) -> float:
    """Harmonic-mean combination with its asymptotic Landau calibration.

    The statistic sum(w_i / p_i) is compared to a Landau law with location
    log(k) + 0.8743670... and scale pi/2. A single p-value is returned
    unchanged (the calibration is exact there only in the limit).
    """
    p = _checked_pvalues(pvals)
    k = p.size
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(list(weights), dtype=float)
        if w.shape != p.shape or np.any(w < 0):
            raise ValueError("weights must be nonnegative and match the p-values")
        if not math.isclose(w.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("weights must sum to 1")
    if k == 1:
        return float(p[0])
    stat = float(np.sum(w / p))
    out = float(landau.sf(stat, loc=math.log(k) + _HMP_LANDAU_OFFSET, scale=math.pi / 2.0))
    return min(1.0, out)


def leave_one_out_tests(data: Dataset) -> list[float]:
    """Drop-one p-values against the grand alternative, per variable.

    p_j = Pr(chi2_1 >= 2 log MLR_{all : all minus j}). Requires the grand
    alternative to be fittable; collinear designs make it rank deficient.
    """
    full_bits = (1 << data.nu) - 1
    fit_full = fit_submodel(data, ModelId(full_bits, data.nu))
    out = []
    for j in range(data.nu):
        fit_drop = fit_submodel(data, ModelId(full_bits & ~(1 << j), data.nu))
        out.append(chi2_1_tail(2.0 * (fit_full.log_mlr - fit_drop.log_mlr)))
    return out


def select_subset(data: Dataset, max_vars: int, rho_cap: float = 0.8) -> list[int]:
    """Rank variables by single-variable test p-value and admit greedily.

    A candidate is skipped when its absolute correlation exceeds `rho_cap`
    with two or more variables already admitted. Ties in the ranking break
    by column index. Intended to prepare an exhaustive scan when the full
    candidate pool is too large.
    """
    if max_vars > data.nu:
        raise ValueError("max_vars cannot exceed the candidate count")
    corr = correlation_matrix(data)
    pvals = []
    for j in range(data.nu):
        fit = fit_submodel(data, ModelId(1 << j, data.nu))
        pvals.append(chi2_1_tail(2.0 * fit.log_mlr))
    order = sorted(range(data.nu), key=lambda j: (pvals[j], j))
    chosen: list[int] = []
    for j in order:
        if len(chosen) >= max_vars:
            break
        clashes = sum(1 for k in chosen if abs(corr.rho[j, k]) > rho_cap)
        if clashes >= 2:
            continue
        chosen.append(j)
    return chosen
