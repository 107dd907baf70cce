"""A fitted analysis bundle: data summary, exhaustive scan, hyperparameters.

Group tests are answered from the scan without refitting, so a session is
the unit the HTTP service persists and the explorer queries. A sub-analysis
session remembers the declared total variable count and the excluded names:
its rejections are read as intersections with all excluded variables, and
adjusted p-values use the declared count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .inference import Hyperparams, attach_posterior_odds
from .linmodel import CorrelationMatrix, Dataset, ExhaustiveScan, correlation_matrix, scan_all_models

__all__ = ["AnalysisSession", "fit_session"]


@dataclass
class AnalysisSession:
    dataset: Dataset
    hyper: Hyperparams
    scan: ExhaustiveScan
    corr: CorrelationMatrix
    declared_nu: int
    excluded_names: tuple[str, ...] = ()
    created_at: str = ""
    session_id: str = ""

    @property
    def nu(self) -> int:
        return self.dataset.nu

    @property
    def names(self) -> tuple[str, ...]:
        return self.dataset.names

    @property
    def is_sub_analysis(self) -> bool:
        return self.declared_nu > self.nu or bool(self.excluded_names)

    @property
    def mode(self) -> str:
        return "sub-analysis" if self.is_sub_analysis else "full"

    def resolve(self, tested) -> frozenset[int]:
        """Map a mix of names and 0-based indices to candidate indices."""
        out = set()
        for t in tested:
            if isinstance(t, str):
                out.add(self.dataset.index_of(t))
            else:
                j = int(t)
                if not 0 <= j < self.nu:
                    raise KeyError(f"variable index {j} out of range")
                out.add(j)
        return frozenset(out)


def fit_session(
    data: Dataset,
    hyper: Hyperparams,
    *,
    declared_nu: int | None = None,
    excluded_names: tuple[str, ...] = (),
    scan_cap: int | None = None,
) -> AnalysisSession:
    """Run the exhaustive scan and wrap it with everything group tests need.

    `declared_nu` is the total variable count of the enclosing analysis when
    this session covers only a subset (it defaults to the fitted count).
    """
    if hyper.n != data.n:
        raise ValueError(f"hyperparams carry n={hyper.n}, dataset has n={data.n}")
    kwargs = {} if scan_cap is None else {"cap": scan_cap}
    scan = scan_all_models(data, **kwargs)
    attach_posterior_odds(scan, hyper)
    declared = data.nu if declared_nu is None else int(declared_nu)
    if declared < data.nu:
        raise ValueError("declared_nu cannot be smaller than the fitted variable count")
    return AnalysisSession(
        dataset=data,
        hyper=hyper,
        scan=scan,
        corr=correlation_matrix(data),
        declared_nu=declared,
        excluded_names=tuple(excluded_names),
    )
