"""Exact least-squares fitting of every variable-subset linear regression.

Each candidate model is indexed by a bit-vector over the candidate columns;
nuisance columns (intercept, always-in covariates) are fit in every model,
including the no-candidate baseline. The maximized likelihood ratio of a
model against that baseline is the quantity everything downstream consumes:

    known variance sigma^2:   log MLR = (RSS_0 - RSS_s) / (2 sigma^2)
    profiled variance:        log MLR = (n/2) * log(RSS_0 / RSS_s)

Two independent numerical routes are provided on purpose: `fit_submodel`
uses a rank-revealing QR of the raw design, while `scan_all_models` solves
normal equations from a precomputed Gram matrix. The test suite checks them
against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "NuisanceSpec",
    "Dataset",
    "ModelId",
    "FitResult",
    "CorrelationMatrix",
    "ExhaustiveScan",
    "RankDeficientError",
    "DegenerateVarianceError",
    "ZeroVarianceColumnError",
    "TooManyVariablesError",
    "fit_submodel",
    "scan_all_models",
    "correlation_matrix",
    "DEFAULT_SCAN_CAP",
]

DEFAULT_SCAN_CAP = 25

# Relative rank tolerance for the pivoted QR, as a multiple of the largest
# column norm of the selected design.
RANK_RTOL = 1e-10


class RankDeficientError(ValueError):
    """Selected design columns (plus nuisance) are collinear."""


class DegenerateVarianceError(ValueError):
    """Residual sum of squares is zero under a profiled error variance."""


class ZeroVarianceColumnError(ValueError):
    """A candidate column is constant, so its correlations are undefined."""


class TooManyVariablesError(ValueError):
    """Candidate count exceeds the exhaustive-scan cap."""


@dataclass(frozen=True)
class NuisanceSpec:
    """Always-included part of the model.

    `sigma2 = None` means the error variance is an unknown nuisance
    parameter, profiled out by maximum likelihood; a positive float fixes it.
    """

    intercept: bool = False
    extra: np.ndarray | None = None
    sigma2: float | None = None

    def __post_init__(self) -> None:
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive when the variance is known")
        if self.extra is not None and np.asarray(self.extra).ndim != 2:
            raise ValueError("extra nuisance columns must form a 2-d array")

    @property
    def profiled(self) -> bool:
        return self.sigma2 is None

    def n_columns(self) -> int:
        extra = 0 if self.extra is None else self.extra.shape[1]
        return int(self.intercept) + extra

    def n_parameters(self) -> int:
        """Nuisance parameter count, including the variance when profiled."""
        return self.n_columns() + (1 if self.profiled else 0)

    def column_matrix(self, n: int) -> np.ndarray:
        cols = []
        if self.intercept:
            cols.append(np.ones((n, 1)))
        if self.extra is not None:
            cols.append(np.asarray(self.extra, dtype=float))
        if not cols:
            return np.empty((n, 0))
        return np.hstack(cols)


@dataclass(frozen=True)
class Dataset:
    """Outcome vector, candidate design matrix and nuisance specification."""

    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    nuisance: NuisanceSpec = field(default_factory=NuisanceSpec)

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).ravel()
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(self.names))
        n, nu = X.shape
        if y.shape[0] != n:
            raise ValueError(f"y has {y.shape[0]} rows but X has {n}")
        if len(self.names) != nu:
            raise ValueError(f"{len(self.names)} names for {nu} columns")
        if len(set(self.names)) != nu:
            raise ValueError("duplicate variable names")
        if np.any(np.all(X == 0.0, axis=0)):
            raise ValueError("candidate design contains an all-zero column")
        if self.nuisance.profiled and n < nu + self.nuisance.n_parameters() + 1:
            raise ValueError(
                "too few observations to profile the variance over the grand "
                f"alternative: n={n}, need at least {nu + self.nuisance.n_parameters() + 1}"
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def nu(self) -> int:
        return self.X.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None


@dataclass(frozen=True)
class ModelId:
    """Bit-vector over the candidate variables; bit j set => beta_j free."""

    bits: int
    nu: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits < (1 << self.nu):
            raise ValueError(f"bits {self.bits} out of range for nu={self.nu}")

    @classmethod
    def from_indices(cls, indices, nu: int) -> "ModelId":
        bits = 0
        for j in indices:
            if not 0 <= j < nu:
                raise ValueError(f"variable index {j} out of range")
            bits |= 1 << j
        return cls(bits, nu)

    @property
    def size(self) -> int:
        return int(self.bits).bit_count()

    def indices(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.nu) if self.bits >> j & 1)

    def contains(self, j: int) -> bool:
        return bool(self.bits >> j & 1)

    def __le__(self, other: "ModelId") -> bool:
        """Nesting: every variable of self is included in other."""
        return self.bits & ~other.bits == 0


@dataclass(frozen=True)
class FitResult:
    """One submodel fit; log_mlr is relative to the nuisance-only model."""

    model: ModelId
    beta_hat: np.ndarray          # coefficients for model.indices(), in order
    nuisance_hat: np.ndarray      # coefficients of the nuisance columns
    rss: float
    log_mlr: float
    sigma2_hat: float             # fixed sigma2, or RSS/n when profiled
    obs_info: np.ndarray          # observed information of all free coefficients
    cov_beta: np.ndarray          # classical covariance of the candidate block

    @property
    def se_beta(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_beta)) if self.cov_beta.size else np.empty(0)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations of the candidate columns."""

    rho: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(rho, rho.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(rho), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "names", tuple(self.names))


def correlation_matrix(data: Dataset) -> CorrelationMatrix:
    """Pearson correlation of the candidate columns; errors on constant ones."""
    X = data.X
    sd = X.std(axis=0)
    bad = np.flatnonzero(sd == 0.0)
    if bad.size:
        raise ZeroVarianceColumnError(
            f"columns with zero variance: {[data.names[j] for j in bad]}"
        )
    rho = np.corrcoef(X, rowvar=False)
    rho = np.atleast_2d(rho)
    # np.corrcoef can drift a hair off symmetry / unit diagonal
    rho = (rho + rho.T) / 2.0
    np.fill_diagonal(rho, 1.0)
    rho = np.clip(rho, -1.0, 1.0)
    return CorrelationMatrix(rho, data.names)


def _design(data: Dataset, model: ModelId) -> tuple[np.ndarray, np.ndarray]:
    """Full free-coefficient design for a model: candidates then nuisance."""
    idx = np.asarray(model.indices(), dtype=int)
    cand = data.X[:, idx] if idx.size else np.empty((data.n, 0))
    nuis = data.nuisance.column_matrix(data.n)
    return np.hstack([cand, nuis]), idx


def _qr_rss(y: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares via pivoted QR with an explicit rank check."""
    n, p = W.shape
    if p == 0:
        return np.empty(0), float(y @ y)
    if p > n:
        raise RankDeficientError(f"{p} free coefficients for {n} observations")
    q, r, piv = scipy.linalg.qr(W, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * np.max(np.linalg.norm(W, axis=0))
    if diag.size == 0 or diag.min() <= tol:
        raise RankDeficientError("selected design columns are collinear")
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty(p)
    coef[piv] = coef_piv
    resid = y - W @ coef
    return coef, float(resid @ resid)


def _log_mlr(rss0: float, rss: float, n: int, nuisance: NuisanceSpec) -> float:
    if nuisance.profiled:
        # exact fits leave only rounding noise in the residual
        if rss <= 1e-12 * rss0:
            raise DegenerateVarianceError(
                "zero residual sum of squares: profiled variance is degenerate"
            )
        return 0.5 * n * float(np.log(rss0 / rss))
    return (rss0 - rss) / (2.0 * nuisance.sigma2)


def fit_submodel(data: Dataset, model: ModelId) -> FitResult:
    """Fit one candidate subset by least squares and compare to the baseline.

    The baseline is the nuisance-only model, refit here from scratch so the
    result does not depend on any cached state.
    """
    if model.nu != data.nu:
        raise ValueError(f"model is over {model.nu} variables, data has {data.nu}")
    W, idx = _design(data, model)
    coef, rss = _qr_rss(data.y, W)
    _, rss0 = _qr_rss(data.y, data.nuisance.column_matrix(data.n))
    log_mlr = _log_mlr(rss0, rss, data.n, data.nuisance)

    k = idx.size
    sigma2_hat = rss / data.n if data.nuisance.profiled else float(data.nuisance.sigma2)
    if W.shape[1]:
        gram_inv = np.linalg.inv(W.T @ W)
        obs_info = (W.T @ W) / sigma2_hat
        cov_beta = sigma2_hat * gram_inv[:k, :k]
    else:
        obs_info = np.empty((0, 0))
        cov_beta = np.empty((0, 0))
    return FitResult(
        model=model,
        beta_hat=coef[:k].copy(),
        nuisance_hat=coef[k:].copy(),
        rss=rss,
        log_mlr=log_mlr,
        sigma2_hat=sigma2_hat,
        obs_info=obs_info,
        cov_beta=cov_beta,
    )


class _PreparedDesign:
    """Gram-matrix view of a dataset for fast repeated subset solves.

    Column order is candidates 0..nu-1 followed by the nuisance columns.
    """

    def __init__(self, data: Dataset):
        self.data = data
        nuis = data.nuisance.column_matrix(data.n)
        self.n_nuis = nuis.shape[1]
        W = np.hstack([data.X, nuis])
        self.gram = W.T @ W
        self.wty = W.T @ data.y
        self.yty = float(data.y @ data.y)
        self.nu = data.nu
        self.n = data.n
        self.nuis_idx = np.arange(data.nu, data.nu + self.n_nuis)
        self.rss0 = self._rss(np.empty(0, dtype=int))

    def _columns(self, cand_idx: np.ndarray) -> np.ndarray:
        return np.concatenate([cand_idx, self.nuis_idx]).astype(int)

    def solve(self, cand_idx: np.ndarray) -> tuple[np.ndarray, float]:
        """Coefficients (candidates then nuisance) and RSS for one subset."""
        cols = self._columns(cand_idx)
        if cols.size == 0:
            return np.empty(0), self.yty
        g = self.gram[np.ix_(cols, cols)]
        b = self.wty[cols]
        try:
            c, low = scipy.linalg.cho_factor(g, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise RankDeficientError(str(exc)) from exc
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover - alias
            raise RankDeficientError(str(exc)) from exc
        coef = scipy.linalg.cho_solve((c, low), b, check_finite=False)
        rss = self.yty - float(b @ coef)
        return coef, max(rss, 0.0)

    def _rss(self, cand_idx: np.ndarray) -> float:
        return self.solve(cand_idx)[1]


@dataclass
class ExhaustiveScan:
    """Per-model results for every s in {0,1}^nu, in integer order of s.

    `log_po` is filled in by the inference layer (posterior odds of each
    model against the grand null); `log_mlr` comes from the fits.
    """

    data: Dataset
    log_mlr: np.ndarray        # shape (2**nu,)
    model_size: np.ndarray     # shape (2**nu,), popcount of each s
    log_po: np.ndarray | None = None
    _prepared: _PreparedDesign | None = None

    @property
    def nu(self) -> int:
        return self.data.nu

    @property
    def n_models(self) -> int:
        return self.log_mlr.shape[0]

    def model(self, bits: int) -> ModelId:
        return ModelId(bits, self.nu)

    def refit(self, bits: int) -> FitResult:
        """Per-model coefficients via the prepared Gram route."""
        if self._prepared is None:
            self._prepared = _PreparedDesign(self.data)
        prep = self._prepared
        model = self.model(bits)
        idx = np.asarray(model.indices(), dtype=int)
        coef, rss = prep.solve(idx)
        data = self.data
        sigma2_hat = rss / data.n if data.nuisance.profiled else float(data.nuisance.sigma2)
        cols = prep._columns(idx)
        k = idx.size
        if cols.size:
            g = prep.gram[np.ix_(cols, cols)]
            gram_inv = np.linalg.inv(g)
            obs_info = g / sigma2_hat
            cov_beta = sigma2_hat * gram_inv[:k, :k]
        else:
            obs_info = np.empty((0, 0))
            cov_beta = np.empty((0, 0))
        return FitResult(
            model=model,
            beta_hat=coef[:k].copy(),
            nuisance_hat=coef[k:].copy(),
            rss=rss,
            log_mlr=float(self.log_mlr[bits]),
            sigma2_hat=sigma2_hat,
            obs_info=obs_info,
            cov_beta=cov_beta,
        )


def scan_all_models(data: Dataset, cap: int = DEFAULT_SCAN_CAP) -> ExhaustiveScan:
    """Fit all 2**nu candidate subsets, in integer order of the bit-vector.

    Uses precomputed Gram/cross-product matrices so each model costs one
    small positive-definite solve. Raises TooManyVariablesError above `cap`;
    pass a larger cap explicitly to override (memory grows as 2**nu).
    """
    nu = data.nu
    if nu > cap:
        raise TooManyVariablesError(
            f"nu={nu} exceeds the exhaustive-scan cap of {cap}; "
            "select a variable subset first (see select_subset) or raise the cap"
        )
    prep = _PreparedDesign(data)
    n_models = 1 << nu
    log_mlr = np.empty(n_models)
    sizes = np.empty(n_models, dtype=np.uint8)
    rss0 = prep.rss0
    if data.nuisance.profiled and rss0 <= 0.0:
        raise DegenerateVarianceError("baseline residual sum of squares is zero")
    for bits in range(n_models):
        idx = np.flatnonzero([bits >> j & 1 for j in range(nu)])
        rss = prep._rss(idx)
        log_mlr[bits] = _log_mlr(rss0, rss, data.n, data.nuisance)
        sizes[bits] = idx.size
    return ExhaustiveScan(data=data, log_mlr=log_mlr, model_size=sizes, _prepared=prep)


def batch_log_mlr(
    gram: np.ndarray,
    xty: np.ndarray,
    yty: np.ndarray,
    nu: int,
    sigma2: float,
) -> np.ndarray:
    """log MLR of every subset for many outcome vectors at once (known variance).

    `gram` is X^T X (nu x nu, no nuisance columns), `xty` is X^T y with one
    column per replicate, `yty` the matching vector of squared norms. Returns
    an array of shape (2**nu, replicates). Used by the simulation lab, where
    thousands of replicates share one design.
    """
    n_models = 1 << nu
    reps = xty.shape[1]
    out = np.zeros((n_models, reps))
    for bits in range(1, n_models):
        idx = np.flatnonzero([bits >> j & 1 for j in range(nu)])
        g = gram[np.ix_(idx, idx)]
        b = xty[idx, :]
        coef = np.linalg.solve(g, b)
        # RSS_0 - RSS_s = b^T G^{-1} b, one value per replicate
        quad = np.einsum("kr,kr->r", b, coef)
        out[bits, :] = quad / (2.0 * sigma2)
    return out
