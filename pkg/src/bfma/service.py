"""Local HTTP API over persisted analysis sessions.

Sessions are write-once JSON archives in a store directory, keyed by a
content hash of the uploaded payload and configuration, so re-uploading
identical data returns the existing session. All numbers in responses come
from the same library calls a direct user would make; the service holds no
statistical logic of its own.

Endpoints (JSON bodies, errors as {"error": code, "detail": ...}):

    POST /sessions                      {"csv": ..., "config": {...}} or {"archive": {...}}
    GET  /sessions
    GET  /sessions/{id}
    POST /sessions/{id}/test            {"tested": [...], "rho": 0.8, "tau": 9, "alpha": 0.025}
    GET  /sessions/{id}/groups?rho=0.8
    GET  /sessions/{id}/estimates
    GET  /sessions/{id}/export
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .ctp import (
    InadmissibleGroupError,
    UnknownVariablesError,
    build_grouping,
    is_admissible,
    test_group,
)
from .dataio import (
    AnalysisConfig,
    ParseError,
    build_session_from_csv,
    content_id,
    session_from_archive,
    session_to_archive,
)
from .inference import NullHypothesis, coefficient_estimates, intervals
from .linmodel import TooManyVariablesError
from .session import AnalysisSession

__all__ = ["SessionStore", "create_app"]


class SessionStore:
    """Directory of session archives with an in-process cache.

    Sessions are write-once and keyed by content hash: concurrent identical
    uploads converge on one file (atomic replace with identical bytes), and
    reads are safe to run concurrently because sessions never mutate.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, AnalysisSession] = {}
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def get(self, session_id: str) -> AnalysisSession:
        with self._lock:
            if session_id in self._cache:
                return self._cache[session_id]
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        session = session_from_archive(json.loads(path.read_text()))
        with self._lock:
            self._cache[session_id] = session
        return session

    def _write(self, session: AnalysisSession) -> None:
        doc = session_to_archive(session)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, self._path(session.session_id))
        with self._lock:
            self._cache[session.session_id] = session

    def create_from_csv(self, csv_text: str, config: AnalysisConfig) -> tuple[str, bool]:
        """Returns (id, created); re-uploads of identical content are no-ops."""
        session_id = content_id(csv_text, config)
        if self._path(session_id).exists():
            return session_id, False
        session = build_session_from_csv(csv_text, config)
        self._write(session)
        return session_id, True

    def import_archive(self, doc: dict) -> tuple[str, bool]:
        session = session_from_archive(doc)
        if not session.session_id:
            raise ParseError("archive carries no session id")
        if self._path(session.session_id).exists():
            return session.session_id, False
        self._write(session)
        return session.session_id, True


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def _summary(session: AnalysisSession) -> dict:
    return {
        "id": session.session_id,
        "created_at": session.created_at,
        "names": list(session.names),
        "n": session.dataset.n,
        "nu": session.nu,
        "declared_nu": session.declared_nu,
        "mode": session.mode,
        "excluded_names": list(session.excluded_names),
        "hyper": {
            "mu": session.hyper.mu,
            "h": session.hyper.h,
            "tau": session.hyper.tau,
            "n": session.hyper.n,
        },
        "n_models": session.scan.n_models,
    }


def _blocks_payload(session: AnalysisSession, rho: float) -> dict:
    policy = build_grouping(session.corr, rho)
    return {
        "rho": policy.rho,
        "blocks": [
            {"indices": list(b), "names": [session.names[j] for j in b]}
            for b in policy.blocks
        ],
    }


def _report_payload(report) -> dict:
    return {
        "tested": list(report.tested),
        "tested_names": list(report.tested_names),
        "po": report.po,
        "log_po": report.log_po,
        "p_unadj": report.p_unadj,
        "p_adj": report.p_adj,
        "p_adj_raw": report.p_adj_raw,
        "fdr_bound": report.fdr_bound,
        "rejected_bayes": report.rejected_bayes,
        "rejected_fwer": report.rejected_fwer,
        "tau": report.tau,
        "alpha": report.alpha,
        "declared_nu": report.declared_nu,
        "mode": report.mode,
        "excluded_names": list(report.excluded_names),
    }


def create_app(store: SessionStore, ui_dir: str | Path | None = None) -> FastAPI:
    """API app; pass `ui_dir` (a built frontend) to also serve it at /."""
    app = FastAPI(title="model-averaged group testing", version="0.1.0")

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception):
        return _error(500, "internal", str(exc))

    @app.post("/sessions")
    async def create_session(body: dict):
        try:
            if "archive" in body:
                session_id, created = store.import_archive(body["archive"])
            else:
                config = AnalysisConfig.from_dict(body.get("config", {}))
                csv_text = body.get("csv")
                if not isinstance(csv_text, str):
                    return _error(400, "parse_error", "body must carry 'csv' text or 'archive'")
                session_id, created = store.create_from_csv(csv_text, config)
        except ParseError as exc:
            return _error(400, "parse_error", str(exc))
        except TooManyVariablesError as exc:
            return _error(400, "too_many_variables", str(exc))
        except (TypeError, ValueError) as exc:
            return _error(400, "parse_error", str(exc))
        return JSONResponse(
            status_code=201 if created else 200,
            content={"id": session_id, "created": created},
        )

    @app.get("/sessions")
    async def list_sessions():
        out = []
        for session_id in store.ids():
            out.append(_summary(store.get(session_id)))
        return {"sessions": out}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"no session {session_id}")
        payload = _summary(session)
        payload["correlation"] = [
            [float(v) for v in row] for row in session.corr.rho
        ]
        return payload

    @app.post("/sessions/{session_id}/test")
    async def run_test(session_id: str, body: dict):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"no session {session_id}")
        tested = body.get("tested", [])
        rho = float(body.get("rho", 1.0))
        tau = body.get("tau")
        alpha = float(body.get("alpha", 0.025))
        force = bool(body.get("force", False))
        try:
            null = NullHypothesis(tested=session.resolve(tested), nu=session.nu)
        except (KeyError, ValueError) as exc:
            return _error(400, "unknown_variables", str(exc))
        policy = build_grouping(session.corr, rho)
        admissible = is_admissible(null, policy)
        try:
            report = test_group(
                session,
                tested,
                rho=rho,
                tau=tau,
                alpha=alpha,
                allow_inadmissible=force,
            )
        except UnknownVariablesError as exc:
            return _error(400, "unknown_variables", str(exc))
        except InadmissibleGroupError as exc:
            return JSONResponse(
                status_code=409,
                content={
                    "error": "inadmissible_group",
                    "detail": str(exc),
                    "block": {
                        "indices": list(exc.block),
                        "names": [session.names[j] for j in exc.block],
                    },
                    "grouping": _blocks_payload(session, rho),
                },
            )
        payload = _report_payload(report)
        payload["admissible"] = admissible
        payload["grouping"] = _blocks_payload(session, rho)
        return payload

    @app.get("/sessions/{session_id}/groups")
    async def groups(session_id: str, rho: float = 0.8):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"no session {session_id}")
        return _blocks_payload(session, rho)

    @app.get("/sessions/{session_id}/estimates")
    async def estimates(session_id: str, alpha: float = 0.025):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"no session {session_id}")
        ests = coefficient_estimates(session.scan, session.hyper)
        rows = []
        for est in ests:
            ci, cred = intervals(est, alpha=alpha, tau=session.hyper.tau)
            rows.append(
                {
                    "variable": est.variable,
                    "name": est.name,
                    "classical_mean": est.classical_mean,
                    "classical_se": est.classical_se,
                    "bayes_mean": est.bayes_mean,
                    "bayes_se": est.bayes_se,
                    "inclusion_prob": est.inclusion_prob,
                    "classical_interval": list(ci),
                    "credibility_interval": list(cred),
                }
            )
        return {"estimates": rows, "alpha": alpha, "tau": session.hyper.tau}

    @app.get("/sessions/{session_id}/export")
    async def export(session_id: str):
        try:
            session = store.get(session_id)
        except KeyError:
            return _error(404, "not_found", f"no session {session_id}")
        return session_to_archive(session)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
