"""HTTP service: sessions, round submission, metrics, and dataset export."""

from __future__ import annotations

import base64
import threading
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import asdict

from fastapi import Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import metrics
from .chain import Mode, TimingEvent
from .config import ApiConfig
from .errors import (
    AnnochainError,
    CorruptLog,
    GatewayFailure,
    IncompleteParallelSession,
    InvalidMode,
    LedgerIncomplete,
    NothingToRead,
    OutOfOrderRound,
    SessionClosed,
    SessionNotFinalized,
    SessionStateError,
    UnsupportedFormat,
)
from .embedding import HashEmbeddingProvider
from .gateway import HttpGateway, MockGateway
from .matching import DuplicationMatcher
from .persistence import SessionStore, session_to_dict

_STATUS_BY_ERROR = [
    (OutOfOrderRound, 409),
    (SessionClosed, 409),
    (IncompleteParallelSession, 409),
    (SessionStateError, 409),
    (NothingToRead, 404),
    (SessionNotFinalized, 409),
    (UnsupportedFormat, 415),
    (GatewayFailure, 502),
    (LedgerIncomplete, 422),
    (InvalidMode, 400),
    (CorruptLog, 500),
]


def _status_for(exc: AnnochainError) -> int:
    for kind, status in _STATUS_BY_ERROR:
        if isinstance(exc, kind):
            return status
    return 400


class SessionCreate(BaseModel):
    image_ref: str
    mode: str = "chain"
    annotators: int | None = None
    max_rounds: int | None = None


class EventIn(BaseModel):
    round_index: int
    kind: str
    t: float


class RoundIn(BaseModel):
    annotator_id: str
    payload_kind: str
    text: str | None = None
    audio_b64: str | None = None
    audio_format: str = "wav"
    events: list[EventIn] = Field(default_factory=list)


class FinalizeIn(BaseModel):
    annotator_id: str


def build_gateway(config: ApiConfig):
    if config.gateway == "http":
        return HttpGateway()
    return MockGateway()


def _session_view(session) -> dict:
    doc = session_to_dict(session)
    doc.pop("pending_read", None)
    doc["round_count"] = len(session.rounds)
    return doc


def create_app(config: ApiConfig | None = None,
               store: SessionStore | None = None) -> FastAPI:
    config = config or ApiConfig()
    if store is None:
        store = SessionStore(config.data_dir, build_gateway(config))
        store.load()

    app = FastAPI(title="annochain", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.config = config
    locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
    store_lock = threading.Lock()

    @contextmanager
    def session_lock(session_id: str):
        with store_lock:
            lock = locks[session_id]
        with lock:
            yield

    def require_auth(authorization: str | None = Header(default=None)) -> None:
        if config.bearer_token is None:
            return
        if authorization != f"Bearer {config.bearer_token}":
            raise PermissionError("invalid or missing bearer token")

    @app.exception_handler(AnnochainError)
    async def _domain_error(request: Request, exc: AnnochainError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"code": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(KeyError)
    async def _not_found(request: Request, exc: KeyError):
        return JSONResponse(status_code=404,
                            content={"code": "NotFound", "message": "no such session"})

    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"code": "ValidationError", "message": str(exc)})

    @app.exception_handler(PermissionError)
    async def _forbidden(request: Request, exc: PermissionError):
        return JSONResponse(status_code=401,
                            content={"code": "Unauthorized", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store.sessions)}

    @app.post("/sessions", status_code=201, dependencies=[Depends(require_auth)])
    def create_session(body: SessionCreate):
        kwargs = {}
        if body.annotators is not None:
            kwargs["annotators"] = body.annotators
        kwargs["max_rounds"] = (body.max_rounds if body.max_rounds is not None
                                else config.max_rounds)
        if body.mode == "parallel" and "annotators" not in kwargs:
            raise InvalidMode("parallel mode needs at least 2 annotators")
        mode = Mode(body.mode, kwargs.get("annotators"), kwargs["max_rounds"])
        with store_lock:
            session = store.create_session(body.image_ref, mode)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}", dependencies=[Depends(require_auth)])
    def get_session(session_id: str):
        return _session_view(store.sessions[session_id])

    @app.get("/sessions/{session_id}/prior", dependencies=[Depends(require_auth)])
    def get_prior(session_id: str, annotator_id: str, t: float):
        with session_lock(session_id):
            caption = store.serve_prior(session_id, annotator_id, t)
        return {"merged_caption": caption, "read_start_t": t}

    @app.post("/sessions/{session_id}/rounds", dependencies=[Depends(require_auth)])
    def submit_round(session_id: str, body: RoundIn):
        text = body.text
        if text is None:
            if body.audio_b64 is None:
                raise ValueError("round needs either text or audio_b64")
            blob = base64.b64decode(body.audio_b64)
            text = store.gateway.transcribe(blob, body.audio_format)
        events = [TimingEvent(e.round_index, e.kind, e.t) for e in body.events]
        with session_lock(session_id):
            store.submit_round(session_id, body.annotator_id, body.payload_kind,
                               text, events)
        return _session_view(store.sessions[session_id])

    @app.post("/sessions/{session_id}/merge-retry", dependencies=[Depends(require_auth)])
    def merge_retry(session_id: str):
        with session_lock(session_id):
            store.retry_merge(session_id)
        return _session_view(store.sessions[session_id])

    @app.post("/sessions/{session_id}/finalize", dependencies=[Depends(require_auth)])
    def finalize(session_id: str, body: FinalizeIn):
        with session_lock(session_id):
            store.finalize(session_id, body.annotator_id)
        return _session_view(store.sessions[session_id])

    @app.get("/sessions/{session_id}/metrics", dependencies=[Depends(require_auth)])
    def session_metrics(session_id: str):
        session = store.sessions[session_id]
        if config.matcher_mode == "embedding":
            matcher = DuplicationMatcher(
                mode="embedding", similarity_threshold=config.matcher_threshold,
                embedding_provider=HashEmbeddingProvider())
        else:
            matcher = DuplicationMatcher(mode="exact")
        return asdict(metrics.intrinsic_report(session, matcher))

    @app.get("/export", dependencies=[Depends(require_auth)])
    def export(format: str = "jsonl", mode: str | None = None):
        if format != "jsonl":
            raise ValueError(f"unsupported export format: {format!r}")
        lines = list(store.export_jsonl(mode))
        return StreamingResponse(iter(lines), media_type="application/x-ndjson")

    return app


def run(config: ApiConfig | None = None) -> None:
    import uvicorn

    config = config or ApiConfig()
    uvicorn.run(create_app(config), host=config.host, port=config.port)
