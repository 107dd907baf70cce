"""Monte Carlo calibration studies for the model-averaged tests.

Three experiment families:

* a two-variable score-space simulator (the exact sampling distribution of
  the four model odds under a known-variance standardized design), used to
  chart false-positive rates against the asymptotic level;
* prior-matched simulations that draw coefficient vectors from the model's
  own prior, refit the exhaustive scan, and measure Bayes-risk familywise
  error rates (optionally restricted to nulls that respect correlation
  grouping) together with the asymptotically equivalent one-step statistic;
* the worst-case expectation bound on the Bayes FWER.

Randomness comes from counter-based Philox streams keyed by (seed, stage,
grid index), so identical seeds give bit-identical reports and stages can
run in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .ctp import build_grouping
from .inference import Hyperparams, chi2_1_tail
from .linmodel import CorrelationMatrix, batch_log_mlr

__all__ = [
    "TwoVarConfig",
    "PriorSimConfig",
    "MetricPoint",
    "SimReport",
    "sim_two_variable",
    "sim_two_variable_data_level",
    "sim_prior_bfwer",
    "fdr_calibration",
    "strikeout_rate",
    "marginal_tester",
    "evalue_bound",
    "synthetic_design",
]


def _stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator on an isolated substream of `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def _binom_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


@dataclass(frozen=True)
class TwoVarConfig:
    n: int
    mu: float
    h: float
    tau: float
    rho: float = 0.0
    sigma: float = 1.0
    beta2_grid: tuple[float, ...] = (0.0,)
    replicates: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(self.rho) > 1.0:
            raise ValueError("|rho| must be at most 1")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        object.__setattr__(self, "beta2_grid", tuple(float(b) for b in self.beta2_grid))

    @property
    def hyper(self) -> Hyperparams:
        return Hyperparams(mu=self.mu, h=self.h, tau=self.tau, n=self.n)


@dataclass(frozen=True)
class PriorSimConfig:
    nu: int
    mu: float
    h: float
    tau: float
    n: int
    design: np.ndarray | None = None        # explicit n x nu template
    corr: np.ndarray | None = None          # or a target correlation matrix
    rho_levels: tuple[float, ...] = (1.0,)
    replicates: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.design is None) == (self.corr is None):
            raise ValueError("provide exactly one of design= or corr=")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        object.__setattr__(self, "rho_levels", tuple(float(r) for r in self.rho_levels))

    @property
    def hyper(self) -> Hyperparams:
        return Hyperparams(mu=self.mu, h=self.h, tau=self.tau, n=self.n)


@dataclass(frozen=True)
class MetricPoint:
    metric: str
    params: dict
    estimate: float
    se: float
    n: int
    reference: float | None = None


@dataclass
class SimReport:
    kind: str
    seed: int
    points: list[MetricPoint] = field(default_factory=list)

    def get(self, metric: str, **params) -> MetricPoint:
        for pt in self.points:
            if pt.metric == metric and all(pt.params.get(k) == v for k, v in params.items()):
                return pt
        raise KeyError(f"no point {metric} with {params}")


def _asymptotic_fpr_level(hyper: Hyperparams, k: int) -> float:
    """Asymptotic false-positive level of the tau test of a k-coefficient null."""
    c = k * hyper.mu * math.sqrt(hyper.xi)
    if hyper.tau <= c:
        return 1.0
    return chi2_1_tail(2.0 * math.log(hyper.tau / c))


def _score_space_log_po(
    cfg: TwoVarConfig, beta2: float, rng: np.random.Generator, target: str
) -> np.ndarray:
    """Model-averaged log odds per replicate, straight from score statistics.

    With a standardized two-column design, known sigma and an intercept, the
    grand-alternative score vector (W, Z) is bivariate normal with identity
    covariance and mean (0, sqrt(n) beta2 / sigma) when beta1 = 0. The four
    model odds are deterministic functions of (W, Z).
    """
    hyper = cfg.hyper
    xi = hyper.xi
    log_c = hyper.log_mu_sqrt_xi
    R = cfg.replicates
    w = rng.standard_normal(R)
    z = rng.standard_normal(R) + math.sqrt(cfg.n) * beta2 / cfg.sigma

    root = math.sqrt(1.0 - cfg.rho * cfg.rho)
    lp10 = log_c + 0.5 * (1.0 - xi) * (root * w + cfg.rho * z) ** 2
    lp01 = log_c + 0.5 * (1.0 - xi) * z**2
    lp11 = 2.0 * log_c + 0.5 * (1.0 - xi) * (w**2 + z**2)
    lp00 = np.zeros(R)

    if target == "test_beta1":
        num = np.stack([lp10, lp11])
        den = np.stack([lp00, lp01])
    elif target == "grand_null":
        num = np.stack([lp10, lp01, lp11])
        den = np.stack([lp00])
    else:
        raise ValueError("target must be 'test_beta1' or 'grand_null'")
    return logsumexp(num, axis=0) - logsumexp(den, axis=0)


def sim_two_variable(cfg: TwoVarConfig, target: str = "test_beta1") -> SimReport:
    """False-positive rate of the two-variable test, one point per beta2.

    `target='test_beta1'` tests the single null beta1 = 0 with beta2 swept
    over the grid; `target='grand_null'` forces beta2 = 0 and tests both.
    Each point carries the asymptotic reference level for comparison.
    """
    hyper = cfg.hyper
    log_tau = math.log(cfg.tau)
    k = 1 if target == "test_beta1" else 2
    grid = cfg.beta2_grid if target == "test_beta1" else (0.0,)
    ref = _asymptotic_fpr_level(hyper, k)
    report = SimReport(kind=f"two-variable {target}", seed=cfg.seed)
    for i, beta2 in enumerate(grid):
        rng = _stream(cfg.seed, 1, i)
        lp = _score_space_log_po(cfg, beta2, rng, target)
        fpr = float(np.mean(lp >= log_tau))
        report.points.append(
            MetricPoint(
                metric="fpr",
                params={"beta2": beta2, "rho": cfg.rho, "n": cfg.n},
                estimate=fpr,
                se=_binom_se(fpr, cfg.replicates),
                n=cfg.replicates,
                reference=ref,
            )
        )
    return report


def _two_var_design(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Two mean-zero columns with unit sample variance and sample corr rho."""
    raw = rng.standard_normal((n, 3))
    # orthonormalize against the constant and each other, then mix
    basis = np.hstack([np.ones((n, 1)), raw])
    q, _ = np.linalg.qr(basis)
    u1, u2 = q[:, 1] * math.sqrt(n), q[:, 2] * math.sqrt(n)
    x1 = u1
    x2 = rho * u1 + math.sqrt(1.0 - rho * rho) * u2
    return np.column_stack([x1, x2])


def sim_two_variable_data_level(cfg: TwoVarConfig, target: str = "test_beta1") -> SimReport:
    """Slow cross-check of the score-space route: simulate outcomes and refit.

    Generates y = gamma + beta2 x2 + sigma eps over a fixed standardized
    design with an intercept, then fits all four models per replicate.
    Centring removes the intercept exactly under a known variance.
    """
    hyper = cfg.hyper
    log_tau = math.log(cfg.tau)
    k = 1 if target == "test_beta1" else 2
    grid = cfg.beta2_grid if target == "test_beta1" else (0.0,)
    ref = _asymptotic_fpr_level(hyper, k)
    X = _two_var_design(cfg.n, cfg.rho, _stream(cfg.seed, 2, 0))
    gram = X.T @ X
    report = SimReport(kind=f"two-variable data-level {target}", seed=cfg.seed)
    sigma2 = cfg.sigma**2
    sizes = np.array([0, 1, 1, 2], dtype=float)
    chunk = 2048   # fixed so the draws do not depend on available memory
    for i, beta2 in enumerate(grid):
        rejected = 0
        for c, start in enumerate(range(0, cfg.replicates, chunk)):
            m = min(chunk, cfg.replicates - start)
            rng = _stream(cfg.seed, 2, 1, i, c)
            eps = rng.standard_normal((cfg.n, m))
            y = 0.7 + beta2 * X[:, [1]] + cfg.sigma * eps   # arbitrary true intercept
            yc = y - y.mean(axis=0, keepdims=True)
            log_mlr = batch_log_mlr(
                gram, X.T @ yc, np.einsum("nr,nr->r", yc, yc), 2, sigma2
            )
            log_po = sizes[:, None] * hyper.log_mu_sqrt_xi + (1.0 - hyper.xi) * log_mlr
            if target == "test_beta1":
                # tested variable is column 0: models 1 (0b01) and 3 (0b11) hit it
                lp = logsumexp(log_po[[1, 3]], axis=0) - logsumexp(log_po[[0, 2]], axis=0)
            else:
                lp = logsumexp(log_po[1:], axis=0) - log_po[0]
            rejected += int(np.sum(lp >= log_tau))
        fpr = rejected / cfg.replicates
        report.points.append(
            MetricPoint(
                metric="fpr",
                params={"beta2": beta2, "rho": cfg.rho, "n": cfg.n},
                estimate=fpr,
                se=_binom_se(fpr, cfg.replicates),
                n=cfg.replicates,
                reference=ref,
            )
        )
    return report


def synthetic_design(nu: int, n: int, corr: np.ndarray, seed: int) -> np.ndarray:
    """Design whose sample second-moment matrix equals `corr` exactly."""
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (nu, nu):
        raise ValueError("correlation matrix has the wrong shape")
    rng = _stream(seed, 3, 0)
    raw = rng.standard_normal((n, nu))
    raw -= raw.mean(axis=0, keepdims=True)
    q, _ = np.linalg.qr(raw)
    L = np.linalg.cholesky(corr)
    return math.sqrt(n) * q @ L.T


@dataclass
class _PriorDraws:
    """One batch of prior-matched replicates over a fixed design.

    Holds the raw outcomes, not the scans: the full odds table over all
    2**nu models is produced in replicate chunks by `iter_log_po` to keep
    memory bounded when nu is large.
    """

    cfg: PriorSimConfig
    X: np.ndarray
    corr: CorrelationMatrix
    true_bits: np.ndarray     # (R,) int64 bit patterns of the true model
    y: np.ndarray             # (n, R) outcomes

    @property
    def hyper(self) -> Hyperparams:
        return self.cfg.hyper

    def iter_log_po(self, max_entries: int = 1 << 23):
        """Yield (column slice, log_po block of shape (2**nu, len(slice)))."""
        cfg = self.cfg
        nu, R = cfg.nu, cfg.replicates
        hyper = cfg.hyper
        sizes = np.array([bits.bit_count() for bits in range(1 << nu)], dtype=float)
        gram = self.X.T @ self.X
        chunk = max(1, min(R, max_entries >> nu))
        for start in range(0, R, chunk):
            sl = slice(start, min(start + chunk, R))
            yc = self.y[:, sl]
            log_mlr = batch_log_mlr(
                gram, self.X.T @ yc, np.einsum("nr,nr->r", yc, yc), nu, 1.0
            )
            yield sl, sizes[:, None] * hyper.log_mu_sqrt_xi + (1.0 - hyper.xi) * log_mlr


def _draw_prior_batch(cfg: PriorSimConfig, stage: int) -> _PriorDraws:
    """Simulate R outcomes from the hierarchical prior.

    Inclusion is Bernoulli(mu/(1+mu)) per variable; included coefficients
    are drawn from the conjugate normal prior whose covariance is the
    inverse per-observation information of the included block over h. The
    error variance is fixed at 1 (the known-variance configuration). All
    randomness is drawn here, in a fixed order, so downstream chunking
    cannot change the results.
    """
    nu, R, n = cfg.nu, cfg.replicates, cfg.n
    if cfg.design is not None:
        X = np.asarray(cfg.design, dtype=float)
        if X.shape != (n, nu):
            raise ValueError("design template has the wrong shape")
    else:
        X = synthetic_design(nu, n, np.asarray(cfg.corr), cfg.seed)
    names = tuple(f"v{j}" for j in range(nu))
    i0 = (X.T @ X) / n
    d = np.sqrt(np.diag(i0))
    corr = CorrelationMatrix(np.clip(i0 / np.outer(d, d), -1.0, 1.0), names)

    rng = _stream(cfg.seed, stage, 1)
    include = rng.random((nu, R)) < cfg.mu / (1.0 + cfg.mu)
    true_bits = np.zeros(R, dtype=np.int64)
    for j in range(nu):
        true_bits |= include[j].astype(np.int64) << j

    signal = np.zeros((n, R))
    for bits in np.unique(true_bits):
        cols = np.flatnonzero(true_bits == bits)
        idx = [j for j in range(nu) if bits >> j & 1]
        if not idx:
            continue
        cov = np.linalg.inv(i0[np.ix_(idx, idx)]) / cfg.h
        L = np.linalg.cholesky(cov)
        beta = L @ rng.standard_normal((len(idx), cols.size))
        signal[:, cols] = X[:, idx] @ beta

    y = signal + rng.standard_normal((n, R))
    return _PriorDraws(cfg=cfg, X=X, corr=corr, true_bits=true_bits, y=y)


def _admissible_true_null_mask(true_bits: int, blocks, nu: int) -> int:
    """Union of indivisible blocks made entirely of truly-null variables."""
    null_bits = ~true_bits & ((1 << nu) - 1)
    mask = 0
    for block in blocks:
        bmask = 0
        for j in block:
            bmask |= 1 << j
        if bmask & null_bits == bmask:
            mask |= bmask
    return mask


@lru_cache(maxsize=4096)
def _compatible_rows(tested_mask: int, nu: int) -> np.ndarray:
    s = np.arange(1 << nu, dtype=np.int64)
    out = (s & tested_mask) == 0
    out.setflags(write=False)
    return out


def _group_log_po(log_po_cols: np.ndarray, tested_mask: int, nu: int) -> np.ndarray:
    compatible = _compatible_rows(tested_mask, nu)
    return logsumexp(log_po_cols[~compatible], axis=0) - logsumexp(
        log_po_cols[compatible], axis=0
    )


def sim_prior_bfwer(cfg: PriorSimConfig) -> SimReport:
    """Bayes-risk FWER of the tau test under the model's own prior.

    Per replicate the tested null is the intersection of true nulls, reduced
    at each grouping level to the largest admissible subset (the union of
    indivisible blocks that are entirely null). Reported per level:

    * bfwer_rho: Pr(model-averaged odds of that null >= tau);
    * afwer_rho: the same event for the one-step equivalent statistic, the
      sum over tested variables of the odds of adding just that variable to
      the true model.

    The reference on each point is the asymptotic familywise bound.
    """
    draws = _draw_prior_batch(cfg, stage=4)
    nu, R = cfg.nu, cfg.replicates
    hyper = cfg.hyper
    log_tau = math.log(cfg.tau)
    ref = _asymptotic_fpr_level(hyper, nu)

    level_masks = {}
    for level in cfg.rho_levels:
        blocks = build_grouping(draws.corr, level).blocks
        level_masks[level] = np.array(
            [_admissible_true_null_mask(int(b), blocks, nu) for b in draws.true_bits],
            dtype=np.int64,
        )
    bf_events = {level: np.zeros(R, dtype=bool) for level in cfg.rho_levels}
    af_events = {level: np.zeros(R, dtype=bool) for level in cfg.rho_levels}

    for sl, log_po in draws.iter_log_po():
        offset = sl.start
        tb_chunk = draws.true_bits[sl]
        for level in cfg.rho_levels:
            masks = level_masks[level][sl]
            for mask in np.unique(masks):
                if mask == 0:
                    continue   # no admissible true null: no familywise error possible
                cols = np.flatnonzero(masks == mask)
                for tb in np.unique(tb_chunk[cols]):
                    sub = cols[tb_chunk[cols] == tb]
                    lp = log_po[:, sub]
                    bf_events[level][offset + sub] = (
                        _group_log_po(lp, int(mask), nu) >= log_tau
                    )
                    base = lp[int(tb), :]
                    add = [
                        lp[int(tb) | (1 << j), :] - base
                        for j in range(nu)
                        if mask >> j & 1
                    ]
                    af_events[level][offset + sub] = (
                        logsumexp(np.stack(add), axis=0) >= log_tau
                    )

    report = SimReport(kind="prior-matched bfwer", seed=cfg.seed)
    for level in cfg.rho_levels:
        for name, ev in (("bfwer_rho", bf_events[level]), ("afwer_rho", af_events[level])):
            est = float(ev.mean())
            report.points.append(
                MetricPoint(
                    metric=name,
                    params={"rho": level},
                    estimate=est,
                    se=_binom_se(est, R),
                    n=R,
                    reference=ref,
                )
            )
    return report


def fdr_calibration(cfg: PriorSimConfig) -> SimReport:
    """Calibration of the posterior null probability among rejections.

    Tests every single-variable null in every prior-matched replicate and
    pools the rejections (odds >= tau). Reports:

    * fdr_false_fraction: share of rejections whose variable is truly null,
      with reference 1/(1+tau) (the claimed bound);
    * fdr_mean_posterior_null: mean of 1/(1+odds) among rejections;
    * bfwer: the plain (rho=1) Bayes FWER with the worst-case expectation
      bound as reference.
    """
    draws = _draw_prior_batch(cfg, stage=5)
    nu, R = cfg.nu, cfg.replicates
    log_tau = math.log(cfg.tau)

    rej_count = 0
    false_count = 0
    post_null_sum = 0.0
    blocks = build_grouping(draws.corr, 1.0).blocks
    events = np.zeros(R, dtype=bool)
    for sl, log_po in draws.iter_log_po():
        tb_chunk = draws.true_bits[sl]
        for j in range(nu):
            lp = _group_log_po(log_po, 1 << j, nu)
            rej = lp >= log_tau
            truly_null = (tb_chunk >> j & 1) == 0
            rej_count += int(rej.sum())
            false_count += int((rej & truly_null).sum())
            # posterior null probability 1/(1+PO), overflow-safe
            post_null_sum += float(np.sum(np.exp(-np.logaddexp(0.0, lp[rej]))))
        for tb in np.unique(tb_chunk):
            mask = _admissible_true_null_mask(int(tb), blocks, nu)
            if mask == 0:
                continue
            cols = np.flatnonzero(tb_chunk == tb)
            events[sl.start + cols] = (
                _group_log_po(log_po[:, cols], mask, nu) >= log_tau
            )

    report = SimReport(kind="prior-matched fdr calibration", seed=cfg.seed)
    if rej_count:
        frac = false_count / rej_count
        report.points.append(
            MetricPoint(
                metric="fdr_false_fraction",
                params={},
                estimate=frac,
                se=_binom_se(frac, rej_count),
                n=rej_count,
                reference=1.0 / (1.0 + cfg.tau),
            )
        )
        report.points.append(
            MetricPoint(
                metric="fdr_mean_posterior_null",
                params={},
                estimate=post_null_sum / rej_count,
                se=0.0,
                n=rej_count,
                reference=1.0 / (1.0 + cfg.tau),
            )
        )

    est = float(events.mean())
    report.points.append(
        MetricPoint(
            metric="bfwer",
            params={"rho": 1.0},
            estimate=est,
            se=_binom_se(est, R),
            n=R,
            reference=evalue_bound(cfg.mu, nu, cfg.tau),
        )
    )
    return report


class ReplicateScan:
    """Read-only view of one prior-matched replicate for strikeout testers."""

    def __init__(self, log_po: np.ndarray, nu: int, hyper: Hyperparams):
        self.log_po = log_po
        self.nu = nu
        self.hyper = hyper

    def singleton_log_po(self, j: int) -> float:
        return float(_group_log_po(self.log_po[:, None], 1 << j, self.nu)[0])


def marginal_tester(alpha: float) -> Callable[[ReplicateScan], set[int]]:
    """Reject each variable whose single-variable odds clear the alpha-matched
    threshold over the replicate's full variable count."""
    from .inference import tau_for_fwer

    def tester(view: ReplicateScan) -> set[int]:
        hyper = view.hyper
        tau = tau_for_fwer(alpha, view.nu, mu=hyper.mu, h=hyper.h, n=hyper.n)
        log_tau = math.log(tau)
        return {j for j in range(view.nu) if view.singleton_log_po(j) >= log_tau}

    return tester


def strikeout_rate(
    cfg: PriorSimConfig, tester: Callable[[ReplicateScan], set[int]]
) -> SimReport:
    """Probability of detecting none of the true signals, given some exist."""
    draws = _draw_prior_batch(cfg, stage=6)
    nu = cfg.nu
    hyper = cfg.hyper
    with_signal = 0
    strikeouts = 0
    for sl, log_po in draws.iter_log_po():
        for i, r in enumerate(range(sl.start, sl.stop)):
            tb = int(draws.true_bits[r])
            if tb == 0:
                continue
            with_signal += 1
            rejected = tester(ReplicateScan(log_po[:, i], nu, hyper))
            if not any(tb >> j & 1 for j in rejected):
                strikeouts += 1
    report = SimReport(kind="strikeout", seed=cfg.seed)
    if with_signal:
        est = strikeouts / with_signal
        report.points.append(
            MetricPoint(
                metric="strikeout",
                params={},
                estimate=est,
                se=_binom_se(est, with_signal),
                n=with_signal,
            )
        )
    return report


def evalue_bound(mu: float, nu: int, tau: float) -> float:
    """Worst-case Bayes FWER from the expectation of the summed odds.

    [(1 + mu/(1+mu))^nu - 1] / tau, capped at 1; roughly nu*mu/tau for
    small mu. Holds whenever the prior is the true generating distribution,
    at any sample size.
    """
    if mu <= 0 or tau <= 0 or nu < 1:
        raise ValueError("mu, tau must be positive and nu >= 1")
    return min(1.0, (math.expm1(nu * math.log1p(mu / (1.0 + mu)))) / tau)
