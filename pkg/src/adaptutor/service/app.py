"""HTTP/JSON surface of the tutor service.

Thin FastAPI wiring over :class:`TutorEngine`; every endpoint accepts an
optional ``now`` epoch timestamp so that scripted sessions (and tests) can
drive virtual time.  Without it, the server clock applies.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from ..config import ServiceConfig
from .engine import ConflictError, EngineError, NotFoundError, RequestError, TutorEngine
from .storage import Store


class CreateUserBody(BaseModel):
    model_kind: str | None = None
    daily_time: str | float = "09:00"
    start_epoch: float | None = None
    now: float | None = None


class AnswerBody(BaseModel):
    item_id: str
    chosen: str
    now: float | None = None


def _status_for(exc: EngineError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, ConflictError):
        return 409
    if isinstance(exc, RequestError):
        return 400
    return 500


def create_app(
    cfg: ServiceConfig,
    store: Store | None = None,
    static_dir: Path | None = None,
) -> FastAPI:
    """Build the application; ``static_dir`` optionally serves a web client."""
    if store is None:
        store = Store(cfg.data_dir / "tutor.sqlite3")
    engine = TutorEngine(cfg, store)
    app = FastAPI(title="adaptutor", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.store = store

    @app.exception_handler(EngineError)
    async def engine_error(_request: Request, exc: EngineError) -> JSONResponse:
        return JSONResponse(
            status_code=_status_for(exc), content={"error": exc.code, "detail": exc.detail}
        )

    @app.get("/api/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", "items": store.item_count(), "users": store.user_count()}

    @app.post("/api/users")
    def create_user(body: CreateUserBody) -> dict:
        return engine.create_user(
            model_kind=body.model_kind,
            daily_time=body.daily_time,
            start_epoch=body.start_epoch,
            now=body.now,
        )

    @app.get("/api/users/{user_id}")
    def get_user(user_id: str) -> dict:
        return engine.user_payload(user_id)

    @app.get("/api/users/{user_id}/schedule")
    def get_schedule(user_id: str) -> dict:
        return engine.schedule_payload(user_id)

    @app.get("/api/users/{user_id}/arms/{arm}/next-question")
    def next_question(user_id: str, arm: str, now: float | None = None) -> dict:
        return engine.next_question(user_id, arm, now)

    @app.post("/api/users/{user_id}/arms/{arm}/answers")
    def submit_answer(user_id: str, arm: str, body: AnswerBody) -> dict:
        return engine.submit_answer(user_id, arm, body.item_id, body.chosen, body.now)

    @app.get("/api/users/{user_id}/arms/{arm}/evaluation/next-question")
    def evaluation_next(user_id: str, arm: str, now: float | None = None) -> dict:
        return engine.evaluation_next(user_id, arm, now)

    @app.post("/api/users/{user_id}/arms/{arm}/evaluation/answers")
    def evaluation_answer(user_id: str, arm: str, body: AnswerBody) -> dict:
        return engine.evaluation_answer(user_id, arm, body.item_id, body.chosen, body.now)

    @app.get("/api/users/{user_id}/arms/{arm}/evaluation/summary")
    def evaluation_summary(user_id: str, arm: str) -> dict:
        return engine.evaluation_summary(user_id, arm)

    @app.get("/api/users/{user_id}/stats")
    def stats(user_id: str) -> dict:
        return engine.stats(user_id)

    @app.get("/api/users/{user_id}/beliefs/{item_id}")
    def belief_snapshot(user_id: str, item_id: str) -> dict:
        return engine.belief_snapshot(user_id, item_id)

    if static_dir is not None and static_dir.exists():
        from fastapi.staticfiles import StaticFiles

        @app.get("/")
        def index() -> FileResponse:
            return FileResponse(static_dir / "index.html")

        if (static_dir / "dist").exists():
            app.mount("/dist", StaticFiles(directory=static_dir / "dist"), name="dist")

    return app
