"""HTTP front end for sessions: REST operations plus a newline-delimited
JSON event stream per session."""

from __future__ import annotations

import asyncio
import time
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, StreamingResponse
from pydantic import BaseModel, Field

from .session import (
    ConfigError,
    Session,
    SessionClosedError,
    SessionConfig,
    StaleCandidateError,
    UnsupportedModeError,
)

_POLL_S = 0.05


class ServerConfig(BaseModel):
    sessions_root: Path = Path("sessions")
    template_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    sentiment_path: Optional[str] = None
    frontend_dist: Optional[Path] = None


class CreateSessionBody(BaseModel):
    mode: str = "auto"
    seed: int = 0
    timeoutMs: int = 10_000
    targetDurationMs: int = 300_000
    virtualClock: bool = False
    templatePath: Optional[str] = None
    lexiconPath: Optional[str] = None
    sentimentPath: Optional[str] = None


class UtteranceBody(BaseModel):
    text: str
    atMs: Optional[int] = None


class SelectBody(BaseModel):
    responseId: str
    atMs: Optional[int] = None


def create_app(config: Optional[ServerConfig] = None) -> FastAPI:
    cfg = config or ServerConfig()
    app = FastAPI(title="elicit session server")
    sessions: dict[str, Session] = {}
    timers: dict[str, asyncio.Task] = {}

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return session

    async def timeout_watcher(session: Session) -> None:
        # Wall-clock sessions get server-side silence prompts.
        while not session.closed:
            deadline = session.timeout_deadline()
            if deadline is not None and session.now() >= deadline:
                try:
                    session.fire_timeout()
                except SessionClosedError:
                    return
            await asyncio.sleep(_POLL_S * 5)

    @app.post("/sessions")
    async def create_session(body: CreateSessionBody) -> dict:
        session_config = SessionConfig(
            mode=body.mode,
            template_path=body.templatePath or cfg.template_path,
            lexicon_path=body.lexiconPath or cfg.lexicon_path,
            sentiment_path=body.sentimentPath or cfg.sentiment_path,
            timeout_ms=body.timeoutMs,
            target_duration_ms=body.targetDurationMs,
            seed=body.seed,
            virtual_clock=body.virtualClock,
        )
        session_id = uuid.uuid4().hex[:12]
        try:
            session = Session(
                session_id, session_config,
                directory=cfg.sessions_root / session_id,
            )
        except ConfigError as exc:
            raise HTTPException(400, str(exc))
        sessions[session_id] = session
        if not session_config.virtual_clock:
            timers[session_id] = asyncio.create_task(timeout_watcher(session))
        return {"id": session_id, "mode": session.config.mode}

    @app.post("/sessions/{session_id}/utterance")
    async def post_utterance(session_id: str, body: UtteranceBody) -> dict:
        session = get_session(session_id)
        try:
            seq = session.post_utterance(body.text, body.atMs)
        except SessionClosedError:
            raise HTTPException(410, f"session {session_id} is closed")
        return {"seq": seq}

    @app.post("/sessions/{session_id}/select")
    async def select_candidate(session_id: str, body: SelectBody) -> dict:
        session = get_session(session_id)
        try:
            seq = session.select_candidate(body.responseId, body.atMs)
        except UnsupportedModeError as exc:
            raise HTTPException(400, str(exc))
        except StaleCandidateError as exc:
            raise HTTPException(
                409, f"response {exc} is not among the latest candidates"
            )
        except SessionClosedError:
            raise HTTPException(410, f"session {session_id} is closed")
        return {"seq": seq}

    @app.post("/sessions/{session_id}/close")
    async def close_session(session_id: str) -> dict:
        session = get_session(session_id)
        try:
            seq = session.close("closed-by-client")
        except SessionClosedError:
            raise HTTPException(410, f"session {session_id} is closed")
        task = timers.pop(session_id, None)
        if task is not None:
            task.cancel()
        return {"seq": seq}

    @app.get("/sessions/{session_id}/events")
    async def stream_events(session_id: str, request: Request,
                            frm: int = 0) -> StreamingResponse:
        session = get_session(session_id)
        start = frm
        try:
            start = int(request.query_params.get("from", frm))
        except ValueError:
            raise HTTPException(400, "'from' must be an integer")

        async def generate():
            last = start
            while True:
                batch = session.events_since(last)
                for event in batch:
                    last = event.seq
                    yield event.to_json() + "\n"
                if session.closed and not session.events_since(last):
                    return
                if await request.is_disconnected():
                    return
                if not batch:
                    await asyncio.sleep(_POLL_S)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    if cfg.frontend_dist is not None and cfg.frontend_dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        index = cfg.frontend_dist / "index.html"

        @app.get("/chat/{session_id}")
        @app.get("/wizard/{session_id}")
        async def spa(session_id: str) -> FileResponse:
            return FileResponse(index)

        app.mount("/", StaticFiles(directory=cfg.frontend_dist, html=True),
                  name="frontend")

    app.state.sessions = sessions
    return app
