"""HTTP session service: upload a trace, get a diagnosis, chat about it.

JSON-over-HTTP endpoints consumed by the browser client:

    POST /api/sessions                 multipart trace upload, or JSON with
                                       trace_text / trace_path
    GET  /api/sessions/{id}            diagnosis, references, issue tags
    POST /api/sessions/{id}/messages   {"question": ...} -> follow-up answer
    GET  /api/sessions/{id}/messages   message history
    GET  /api/health

Sessions persist as one JSON file each under the session directory, written
after every mutation, so a restart retains all acknowledged history. Within
a session message handling is serialized; distinct sessions run freely in
parallel.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .engine import (
    ChatSession,
    EngineConfig,
    answer_followup,
    diagnose_trace,
    new_session,
    session_from_dict,
    session_to_dict,
)
from .gateway import ProviderError
from .knowledge import VectorIndex
from .trace import TraceParseError, parse_trace

logger = logging.getLogger(__name__)


@dataclass
class ServiceState:
    gateway: object
    index: VectorIndex
    session_dir: Path
    engine_config: EngineConfig = field(default_factory=EngineConfig)
    max_upload_bytes: int = 256 * 1024 * 1024
    static_dir: Path | None = None
    clock: Callable[[], float] = time.time


class SessionStore:
    """Directory-backed session persistence with per-session locking."""

    def __init__(self, session_dir: Path, clock: Callable[[], float] = time.time):
        self.session_dir = Path(session_dir)
        self.session_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._sessions: dict[str, ChatSession] = {}
        self._meta: dict[str, dict] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.session_dir / f"{session_id}.json"

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self, diagnosis, trace_ref: str) -> ChatSession:
        session_id = secrets.token_urlsafe(16)
        session = new_session(session_id, diagnosis, clock=self.clock)
        with self._registry_lock:
            self._sessions[session_id] = session
            self._meta[session_id] = {
                "trace_ref": trace_ref,
                "created_at": self.clock(),
            }
        self.flush(session_id)
        return session

    def get(self, session_id: str) -> ChatSession | None:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is not None:
            return session
        path = self._path(session_id)
        if not path.exists():
            return None
        import json

        data = json.loads(path.read_text())
        session = session_from_dict(data)
        with self._registry_lock:
            self._sessions[session_id] = session
            self._meta[session_id] = {
                "trace_ref": data.get("trace_ref", ""),
                "created_at": data.get("created_at", 0.0),
            }
        return session

    def meta(self, session_id: str) -> dict:
        with self._registry_lock:
            return dict(self._meta.get(session_id, {}))

    def flush(self, session_id: str) -> None:
        import json

        session = self._sessions[session_id]
        payload = session_to_dict(session) | self.meta(session_id)
        self._path(session_id).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
        )


def _error(status: int, error_type: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"type": error_type, "message": message, **extra}},
    )


def _session_view(session: ChatSession, meta: dict) -> dict:
    d = session.diagnosis
    return {
        "session_id": session.session_id,
        "trace_ref": meta.get("trace_ref", ""),
        "created_at": meta.get("created_at", 0.0),
        "diagnosis": d.text,
        "references": [
            {
                "key": r.key,
                "citation": r.citation,
                "text": r.text,
            }
            for r in d.references
        ],
        "issue_tags": sorted(t.display_name for t in d.issue_tags),
        "origin": sorted([m.value, c.value] for m, c in d.origin),
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="iodiag session service")
    store = SessionStore(state.session_dir, clock=state.clock)
    app.state.store = store

    @app.get("/api/health")
    def health():
        return {"status": "ok", "sessions_dir": str(state.session_dir)}

    @app.post("/api/sessions")
    async def create_session(request: Request):
        content_type = request.headers.get("content-type", "")
        trace_text = None
        trace_ref = "upload"
        if content_type.startswith("multipart/"):
            form = await request.form()
            upload = form.get("trace")
            if upload is None:
                return _error(400, "bad_request", "multipart field 'trace' required")
            raw = await upload.read()
            if len(raw) > state.max_upload_bytes:
                return _error(
                    413,
                    "payload_too_large",
                    f"trace exceeds {state.max_upload_bytes} bytes",
                )
            trace_text = raw.decode("utf-8", errors="replace")
            trace_ref = getattr(upload, "filename", "upload") or "upload"
        else:
            body = await request.body()
            if len(body) > state.max_upload_bytes:
                return _error(
                    413,
                    "payload_too_large",
                    f"trace exceeds {state.max_upload_bytes} bytes",
                )
            import json

            try:
                payload = json.loads(body or b"{}")
            except json.JSONDecodeError:
                return _error(400, "bad_request", "body must be JSON or multipart")
            if "trace_text" in payload:
                trace_text = payload["trace_text"]
            elif "trace_path" in payload:
                path = Path(payload["trace_path"])
                if not path.exists():
                    return _error(400, "bad_request", f"no such trace: {path}")
                trace_text = path.read_text()
                trace_ref = str(path)
            else:
                return _error(
                    400, "bad_request", "provide trace_text, trace_path, or multipart"
                )

        try:
            profile = parse_trace(trace_text)
        except TraceParseError as exc:
            line_no = getattr(exc, "line_no", None)
            return _error(422, "malformed_trace", str(exc), line=line_no)

        try:
            run_dir = state.session_dir / "runs" / secrets.token_hex(8)
            diagnosis = diagnose_trace(
                profile,
                state.index,
                state.gateway,
                config=state.engine_config,
                out_dir=run_dir,
            )
        except (ProviderError, TimeoutError) as exc:
            return _error(503, "provider_unreachable", str(exc))

        session = store.create(diagnosis, trace_ref)
        return _session_view(session, store.meta(session.session_id))

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        return _session_view(session, store.meta(session_id))

    @app.post("/api/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        import json

        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "bad_request", "body must be JSON")
        question = (payload.get("question") or "").strip()
        if not question:
            return _error(400, "bad_request", "question must be non-empty")
        with store.lock(session_id):
            try:
                answer = answer_followup(
                    state.gateway,
                    session,
                    question,
                    config=state.engine_config,
                    clock=state.clock,
                )
            except (ProviderError, TimeoutError) as exc:
                return _error(503, "provider_unreachable", str(exc))
            store.flush(session_id)
        return {"answer": answer, "history_length": len(session.history)}

    @app.get("/api/sessions/{session_id}/messages")
    def get_messages(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        return {
            "messages": [
                {"role": m.role, "text": m.text, "timestamp": m.timestamp}
                for m in session.history
            ]
        }

    if state.static_dir is not None and Path(state.static_dir).exists():
        app.mount(
            "/", StaticFiles(directory=str(state.static_dir), html=True), name="ui"
        )

    return app
