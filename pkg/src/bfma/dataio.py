"""CSV ingestion and session archives.

CSV contract: UTF-8, header row required, decimal-point numbers. One column
is the outcome (by default the first; select another with `outcome`), the
rest are candidate variables.

Archives are self-contained JSON documents carrying the raw data, the
hyperparameters and the fitted scan, with float arrays encoded as base64
little-endian IEEE doubles so a reloaded session reproduces every posterior
odds bit for bit.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass
import hashlib
import io
import json
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from .inference import Hyperparams
from .linmodel import Dataset, ExhaustiveScan, NuisanceSpec, correlation_matrix
from .session import AnalysisSession, fit_session

__all__ = [
    "ParseError",
    "AnalysisConfig",
    "read_dataset_csv",
    "build_session_from_csv",
    "session_to_archive",
    "session_from_archive",
    "content_id",
]

ARCHIVE_FORMAT = "bfma-session-v1"


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs shared by the CLI and the HTTP service."""

    mu: float = 0.1
    h: float = 1.0
    tau: float = 9.0
    alpha: float = 0.025
    rho: float = 0.8
    outcome: str | None = None
    intercept: bool = False
    sigma2: float | None = None      # None = profile the error variance
    sub_analysis_nu: int | None = None
    excluded_names: tuple[str, ...] = ()
    scan_cap: int | None = None

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "h": self.h,
            "tau": self.tau,
            "alpha": self.alpha,
            "rho": self.rho,
            "outcome": self.outcome,
            "intercept": self.intercept,
            "sigma2": self.sigma2,
            "sub_analysis_nu": self.sub_analysis_nu,
            "excluded_names": list(self.excluded_names),
            "scan_cap": self.scan_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        known = {
            "mu", "h", "tau", "alpha", "rho", "outcome", "intercept",
            "sigma2", "sub_analysis_nu", "excluded_names", "scan_cap",
        }
        unknown = set(d) - known
        if unknown:
            raise ParseError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "excluded_names" in d:
            d["excluded_names"] = tuple(d["excluded_names"])
        return cls(**d)


def _looks_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_dataset_csv(text: str, config: AnalysisConfig) -> Dataset:
    """Parse a CSV payload into a Dataset per the ingestion contract."""
    try:
        frame = pd.read_csv(io.StringIO(text))
    except Exception as exc:
        raise ParseError(f"could not parse CSV: {exc}") from exc
    if frame.shape[1] < 2:
        raise ParseError("need an outcome column and at least one candidate variable")
    cols = [str(c) for c in frame.columns]
    if all(_looks_numeric(c) for c in cols):
        raise ParseError("header row required: the first line parses as numbers")
    outcome = config.outcome if config.outcome is not None else cols[0]
    if outcome not in cols:
        raise ParseError(f"outcome column {outcome!r} not in header {cols}")
    try:
        y = frame[outcome].to_numpy(dtype=float)
        X = frame.drop(columns=[outcome]).to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric cell: {exc}") from exc
    if np.isnan(y).any() or np.isnan(X).any():
        raise ParseError("missing values are not supported")
    names = tuple(c for c in cols if c != outcome)
    nuisance = NuisanceSpec(intercept=config.intercept, sigma2=config.sigma2)
    try:
        return Dataset(y=y, X=X, names=names, nuisance=nuisance)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def content_id(csv_text: str, config: AnalysisConfig) -> str:
    """Deterministic session id from the payload and configuration."""
    canon = json.dumps(
        {"csv": csv_text, "config": config.to_dict()},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def build_session_from_csv(csv_text: str, config: AnalysisConfig) -> AnalysisSession:
    data = read_dataset_csv(csv_text, config)
    hyper = Hyperparams(mu=config.mu, h=config.h, tau=config.tau, n=data.n)
    session = fit_session(
        data,
        hyper,
        declared_nu=config.sub_analysis_nu,
        excluded_names=config.excluded_names,
        scan_cap=config.scan_cap,
    )
    session.session_id = content_id(csv_text, config)
    session.created_at = datetime.now(timezone.utc).isoformat()
    return session


def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()


def _decode(s: str, shape) -> np.ndarray:
    a = np.frombuffer(base64.b64decode(s), dtype="<f8").copy()
    return a.reshape(shape)


def session_to_archive(session: AnalysisSession) -> dict:
    """Self-contained, bit-exact description of a fitted session."""
    data = session.dataset
    scan = session.scan
    nuis = data.nuisance
    return {
        "format": ARCHIVE_FORMAT,
        "id": session.session_id,
        "created_at": session.created_at,
        "names": list(data.names),
        "n": data.n,
        "nu": data.nu,
        "hyper": {
            "mu": session.hyper.mu,
            "h": session.hyper.h,
            "tau": session.hyper.tau,
            "n": session.hyper.n,
        },
        "declared_nu": session.declared_nu,
        "excluded_names": list(session.excluded_names),
        "nuisance": {
            "intercept": nuis.intercept,
            "sigma2": nuis.sigma2,
            "extra": _encode(nuis.extra) if nuis.extra is not None else None,
            "extra_cols": 0 if nuis.extra is None else nuis.extra.shape[1],
        },
        "y": _encode(data.y),
        "X": _encode(data.X),
        "log_mlr": _encode(scan.log_mlr),
        "log_po": _encode(scan.log_po),
    }


def session_from_archive(doc: dict) -> AnalysisSession:
    """Rebuild a session from an archive without refitting anything."""
    if doc.get("format") != ARCHIVE_FORMAT:
        raise ParseError(f"unsupported archive format {doc.get('format')!r}")
    n, nu = int(doc["n"]), int(doc["nu"])
    nspec = doc["nuisance"]
    extra = (
        _decode(nspec["extra"], (n, int(nspec["extra_cols"])))
        if nspec.get("extra")
        else None
    )
    data = Dataset(
        y=_decode(doc["y"], (n,)),
        X=_decode(doc["X"], (n, nu)),
        names=tuple(doc["names"]),
        nuisance=NuisanceSpec(
            intercept=bool(nspec["intercept"]),
            sigma2=nspec["sigma2"],
            extra=extra,
        ),
    )
    hyper = Hyperparams(**doc["hyper"])
    n_models = 1 << nu
    scan = ExhaustiveScan(
        data=data,
        log_mlr=_decode(doc["log_mlr"], (n_models,)),
        model_size=np.array(
            [bits.bit_count() for bits in range(n_models)], dtype=np.uint8
        ),
        log_po=_decode(doc["log_po"], (n_models,)),
    )
    return AnalysisSession(
        dataset=data,
        hyper=hyper,
        scan=scan,
        corr=correlation_matrix(data),
        declared_nu=int(doc["declared_nu"]),
        excluded_names=tuple(doc["excluded_names"]),
        created_at=doc.get("created_at", ""),
        session_id=doc.get("id", ""),
    )
