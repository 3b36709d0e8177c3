"""FastAPI wiring around the session store.

Bodies are plain JSON objects validated by the engine, which keeps every
validation message in one place; this layer only maps engine errors onto
status codes: unknown session 404, state conflicts 409, malformed input 422.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse

from .engine import ConflictError, SessionStore, UnknownSessionError, ValidationFailure

__all__ = ["ServiceConfig", "load_service_config", "create_app"]

_LOG_LEVELS = ("critical", "error", "warning", "info", "debug", "trace")

_ENV_OVERRIDES = {
    "RANKOPT_HOST": "host",
    "RANKOPT_PORT": "port",
    "RANKOPT_DATA_DIR": "data_dir",
    "RANKOPT_LOG_LEVEL": "log_level",
}


@dataclass(frozen=True)
class ServiceConfig:
    """Where to bind, where session logs live, how loudly to log."""

    host: str = "127.0.0.1"
    port: int = 8008
    data_dir: str = "./sessions"
    log_level: str = "info"

    def __post_init__(self) -> None:
        if not isinstance(self.port, int) or not 1 <= self.port <= 65535:
            raise ValueError(f"port must be in 1..65535, got {self.port!r}")
        if self.log_level not in _LOG_LEVELS:
            raise ValueError(
                f"log_level must be one of {_LOG_LEVELS}, got {self.log_level!r}"
            )


def load_service_config(path=None, env=None) -> ServiceConfig:
    """Config file first, then environment variables override field by field."""
    env = os.environ if env is None else env
    config = ServiceConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - {"host", "port", "data_dir", "log_level"}
        if unknown:
            raise ValueError(f"unknown service config keys: {sorted(unknown)}")
        config = replace(config, **data)
    overrides = {}
    for variable, field in _ENV_OVERRIDES.items():
        if variable in env:
            value = env[variable]
            overrides[field] = int(value) if field == "port" else value
    return replace(config, **overrides) if overrides else config


def create_app(data_dir, static_dir=None) -> FastAPI:
    """Build the service around a data directory, replaying any existing logs."""
    store = SessionStore(data_dir)
    app = FastAPI(title="rankopt session service")
    app.state.store = store

    @app.exception_handler(UnknownSessionError)
    async def _unknown(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValidationFailure)
    async def _invalid(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        return store.create_session(payload)

    @app.get("/sessions/{session_id}")
    def status(session_id: str):
        return store.status(session_id)

    @app.get("/sessions/{session_id}/batch")
    def batch(session_id: str):
        return store.batch_view(session_id)

    @app.post("/sessions/{session_id}/rankings")
    def rankings(session_id: str, payload: dict = Body(...)):
        return store.submit_ranking(session_id, payload)

    @app.post("/sessions/{session_id}/selections")
    def selections(session_id: str, payload: dict = Body(...)):
        return store.submit_selection(session_id, payload)

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str):
        return store.history(session_id)

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        return PlainTextResponse(store.export(session_id))

    @app.post("/sessions/{session_id}/terminate")
    def terminate(session_id: str):
        return store.terminate(session_id)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
