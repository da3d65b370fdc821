"""HTTP+JSON session service for the interview workflow.

Hosts one immutable model artifact, manages any number of concurrent
sessions (single writer per session id), and journals every transition
before acknowledging it. The service never trains; it only scores.
"""

from __future__ import annotations

import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..anamnesis import AnamnesisMachine, Session, Stage, render_report
from ..artifact import load_artifact
from ..errors import (
    DataError,
    SessionDoneError,
    SessionNotDoneError,
    SessionNotFoundError,
    TooManyRetriesError,
    VirtdocError,
)
from ..sensors import parse_frame
from .schemas import (
    HealthResponse,
    ReportResponse,
    SessionDetailResponse,
    SessionStateResponse,
    SubmitInputRequest,
)
from .store import SessionStore

_STATUS_FOR_CODE = {"not_found": 404, "bad_input": 400, "conflict": 409, "internal": 500}


def _error_response(code: str, message: str, status: int | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status or _STATUS_FOR_CODE[code],
        content={"code": code, "message": message},
    )


def _classify(exc: VirtdocError) -> tuple[str, int]:
    if isinstance(exc, SessionNotFoundError):
        return "not_found", 404
    if isinstance(exc, (SessionDoneError, SessionNotDoneError, TooManyRetriesError)):
        return "conflict", 409
    if isinstance(exc, DataError):
        return "bad_input", 400
    return "internal", 500


def _state_response(session: Session) -> SessionStateResponse:
    return SessionStateResponse(
        session_id=session.id,
        stage=session.stage.value,
        prompt=session.prompt,
        retry_count=session.retry_count(),
        needs_handover=session.needs_handover,
        done=session.stage is Stage.DONE,
        base_probability=session.base_probability,
        adjusted_probability=session.adjusted_probability,
        decision=session.decision,
    )


def create_app(
    model_path: str | Path | None,
    data_dir: str | Path,
    artifact=None,
) -> FastAPI:
    """Build the service; a schema violation in the artifact aborts startup."""
    if artifact is None and model_path is not None:
        artifact = load_artifact(model_path)
    machine = AnamnesisMachine(artifact.session_predictor()) if artifact else None
    store = SessionStore(data_dir)

    app = FastAPI(title="virtdoc session service")
    app.state.artifact = artifact
    app.state.store = store

    @app.exception_handler(VirtdocError)
    async def _virtdoc_error(_request: Request, exc: VirtdocError):
        code, status = _classify(exc)
        return _error_response(code, str(exc), status)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return _error_response("bad_input", str(exc.errors()[0].get("msg", exc)), 400)

    class _NoModel(Exception):
        pass

    @app.exception_handler(_NoModel)
    async def _no_model(_request: Request, _exc: _NoModel):
        return _error_response("internal", "no model loaded", 503)

    def _require_model():
        if artifact is None:
            raise _NoModel()

    @app.post("/api/sessions", response_model=SessionStateResponse)
    def create_session():
        _require_model()
        session = machine.new_session(uuid.uuid4().hex)
        store.create(session)
        return _state_response(session)

    @app.post("/api/sessions/{session_id}/input", response_model=SessionStateResponse)
    def submit_input(session_id: str, body: SubmitInputRequest):
        _require_model()
        with store.lock(session_id):
            session = store.get(session_id)
            try:
                if body.utterance is not None:
                    updated = machine.handle_text(session, body.utterance)
                else:
                    updated = machine.advance(session, parse_frame(body.frame))
            except TooManyRetriesError as exc:
                # the retry that tripped the limit is itself a transition
                if exc.session is not None:
                    store.save(exc.session)
                raise
            store.save(updated)
        return _state_response(updated)

    @app.get("/api/sessions/{session_id}", response_model=SessionDetailResponse)
    def get_session(session_id: str):
        session = store.get(session_id)
        return SessionDetailResponse(
            prompt=session.prompt, **session.to_dict()
        )

    @app.get("/api/sessions/{session_id}/report", response_model=ReportResponse)
    def get_report(session_id: str):
        session = store.get(session_id)
        report = render_report(session)
        return ReportResponse(**report.to_dict())

    @app.get("/api/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok" if artifact else "no_model",
            model_hash=artifact.file_hash if artifact else None,
            session_count=len(store),
        )

    return app
