"""HTTP studio service: generate, refine, inspect, and export process models.

Sessions are persisted as one JSON file each; every refinement appends an
immutable version snapshot. Provider API keys are referenced by environment
variable name or passed per request via the X-Api-Key header; key values are
never written to disk.
"""

from __future__ import annotations

import logging
import os
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..dsl import render
from ..llm import (
    ChatProvider,
    GenerationConfig,
    GenerationSession,
    MockChatProvider,
    ProviderConfig,
    TransportError,
    generate,
    make_provider,
    refine,
)
from ..model import model_from_dict, model_to_dict, validate
from ..translate import to_bpmn, to_petri_net, write_bpmn_xml, write_dot, write_pnml
from .storage import SessionStore

logger = logging.getLogger(__name__)

EXPORT_FORMATS = {
    "bpmn": ("application/xml", "bpmn"),
    "pnml": ("application/xml", "pnml"),
    "dot": ("text/vnd.graphviz", "dot"),
    "script": ("text/plain; charset=utf-8", "py"),
}


class SessionRequest(BaseModel):
    description: str
    provider: str | None = None
    model_name: str | None = None
    api_key_env: str | None = None


class FeedbackRequest(BaseModel):
    text: str


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _default_provider_config() -> ProviderConfig:
    return ProviderConfig(
        vendor=os.environ.get("POWLGEN_DEFAULT_PROVIDER", "openai"),
        model_name=os.environ.get("POWLGEN_DEFAULT_MODEL", "gpt-4o"),
        script_path=os.environ.get("POWLGEN_MOCK_SCRIPT") or None,
    )


class StudioService:
    """Route implementations bound to one store and provider configuration."""

    def __init__(self, store: SessionStore, default_provider: ProviderConfig):
        self.store = store
        self.default = default_provider
        # mock providers are cached per script so scripted response sequences
        # span requests; real providers are rebuilt per request
        self._mock_providers: dict[str, MockChatProvider] = {}
        self._mock_lock = threading.Lock()

    # -- provider plumbing --------------------------------------------------

    def provider_settings(self, request: SessionRequest) -> dict:
        vendor = request.provider or self.default.vendor
        model_name = request.model_name or self.default.model_name
        api_key_env = request.api_key_env or (
            self.default.api_key_env if vendor == self.default.vendor
            else ProviderConfig.__dataclass_fields__["api_key_env"].default
        )
        return {"vendor": vendor, "model_name": model_name, "api_key_env": api_key_env}

    def build_provider(self, settings: dict, api_key: str | None) -> ChatProvider:
        script_path = os.environ.get("POWLGEN_MOCK_SCRIPT") or self.default.script_path
        try:
            config = ProviderConfig(
                vendor=settings["vendor"],
                model_name=settings["model_name"],
                api_key_env=settings["api_key_env"],
                script_path=script_path,
            )
            if config.vendor == "mock":
                with self._mock_lock:
                    if config.script_path not in self._mock_providers:
                        self._mock_providers[config.script_path] = MockChatProvider(
                            config.script_path
                        )
                    return self._mock_providers[config.script_path]
            return make_provider(config, api_key=api_key)
        except (ValueError, OSError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    # -- record helpers -----------------------------------------------------

    @staticmethod
    def version_entry(number: int, session: GenerationSession) -> dict:
        model_json = script = None
        if session.succeeded and session.model is not None:
            model_json = {
                "tree": model_to_dict(session.model),
                "graph": to_bpmn(session.model).to_dict(),
            }
            script = render(session.model).source
        return {
            "version": number,
            "created": _now(),
            "status": session.status,
            "iterations": session.iteration_count,
            "auto_fixed": session.auto_fixed,
            "timeline": [record.to_dict() for record in session.iterations],
            "script": script,
            "model": model_json,
            "session": session.to_dict(),
        }

    def load_or_404(self, session_id: str) -> dict:
        record = self.store.load(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return record

    @staticmethod
    def pick_version(record: dict, version: int | None) -> dict:
        versions = record["versions"]
        if version is None:
            return versions[-1]
        for entry in versions:
            if entry["version"] == version:
                return entry
        raise HTTPException(
            status_code=404,
            detail=f"session {record['id']!r} has no version {version}",
        )

    @staticmethod
    def revalidated_model(entry: dict):
        if not entry["model"]:
            raise HTTPException(
                status_code=404,
                detail=f"version {entry['version']} has no model",
            )
        model = model_from_dict(entry["model"]["tree"])
        report = validate(model)
        if not report.is_valid:
            raise HTTPException(
                status_code=500, detail="persisted model failed revalidation"
            )
        return model

    @staticmethod
    def last_diagnostics(session: GenerationSession) -> list[dict]:
        if not session.iterations:
            return []
        return [d.to_dict() for d in session.iterations[-1].diagnostics]

    @staticmethod
    def public_view(record: dict) -> dict:
        versions = [
            {key: value for key, value in entry.items() if key != "session"}
            for entry in record["versions"]
        ]
        return {
            "session_id": record["id"],
            "status": record["status"],
            "created": record["created"],
            "updated": record["updated"],
            "provider": record["provider"],
            "current_version": versions[-1]["version"] if versions else 0,
            "versions": versions,
        }

    # -- operations ----------------------------------------------------------

    def create_session(self, request: SessionRequest, api_key: str | None):
        description = request.description.strip()
        if not description:
            raise HTTPException(status_code=422, detail="description must not be empty")
        settings = self.provider_settings(request)
        provider = self.build_provider(settings, api_key)
        try:
            session = generate(description, provider, GenerationConfig())
        except TransportError as exc:
            raise HTTPException(status_code=502, detail=f"provider failure: {exc}")
        session_id = self.store.new_id()
        entry = self.version_entry(1, session)
        record = {
            "id": session_id,
            "created": _now(),
            "updated": _now(),
            "provider": settings,
            "status": session.status,
            "versions": [entry],
        }
        with self.store.operation_lock(session_id):
            self.store.save(session_id, record)
        body = {
            "session_id": session_id,
            "status": session.status,
            "version": 1,
            "iterations": session.iteration_count,
            "auto_fixed": session.auto_fixed,
            "diagnostics": self.last_diagnostics(session),
            "model": entry["model"],
        }
        if not session.succeeded:
            return JSONResponse(status_code=409, content=body)
        return body

    def add_feedback(self, session_id: str, request: FeedbackRequest, api_key: str | None):
        text = request.text.strip()
        if not text:
            raise HTTPException(status_code=422, detail="feedback must not be empty")
        with self.store.operation_lock(session_id):
            record = self.load_or_404(session_id)
            latest = record["versions"][-1]
            if record["status"] not in ("succeeded", "succeeded_with_autofix"):
                raise HTTPException(
                    status_code=409,
                    detail="session has no successful model to refine",
                )
            session = GenerationSession.from_dict(latest["session"])
            provider = self.build_provider(record["provider"], api_key)
            try:
                revised = refine(session, text, provider, GenerationConfig())
            except TransportError as exc:
                raise HTTPException(status_code=502, detail=f"provider failure: {exc}")
            if not revised.succeeded:
                return JSONResponse(
                    status_code=409,
                    content={
                        "session_id": session_id,
                        "status": revised.status,
                        "version": latest["version"],
                        "iterations": revised.iteration_count,
                        "diagnostics": self.last_diagnostics(revised),
                        "model": None,
                    },
                )
            entry = self.version_entry(latest["version"] + 1, revised)
            record["versions"].append(entry)
            record["status"] = revised.status
            record["updated"] = _now()
            self.store.save(session_id, record)
        return {
            "session_id": session_id,
            "status": revised.status,
            "version": entry["version"],
            "iterations": revised.iteration_count,
            "auto_fixed": revised.auto_fixed,
            "diagnostics": self.last_diagnostics(revised),
            "model": entry["model"],
        }

    def get_session(self, session_id: str) -> dict:
        return self.public_view(self.load_or_404(session_id))

    def export(self, session_id: str, format: str, version: int | None) -> Response:
        if format not in EXPORT_FORMATS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown format {format!r}; choose from "
                + ", ".join(sorted(EXPORT_FORMATS)),
            )
        record = self.load_or_404(session_id)
        entry = self.pick_version(record, version)
        model = self.revalidated_model(entry)
        if format == "script":
            document = render(model).source
        elif format == "bpmn":
            document = write_bpmn_xml(to_bpmn(model))
        elif format == "pnml":
            document = write_pnml(to_petri_net(model))
        else:
            document = write_dot(to_petri_net(model))
        media_type, extension = EXPORT_FORMATS[format]
        filename = f"model_v{entry['version']}.{extension}"
        return Response(
            content=document,
            media_type=media_type,
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )


def create_app(
    data_dir: Path | str | None = None,
    default_provider: ProviderConfig | None = None,
    ui_dir: Path | str | None = None,
) -> FastAPI:
    """Builds the studio application around one data directory."""
    store = SessionStore(Path(data_dir or os.environ.get("POWLGEN_DATA_DIR", "powlgen_data")))
    service = StudioService(store, default_provider or _default_provider_config())
    app = FastAPI(title="powlgen studio", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(store.list_ids())}

    @app.get("/spec")
    def spec() -> JSONResponse:
        return JSONResponse(app.openapi())

    @app.post("/sessions")
    def create_session(
        request: SessionRequest,
        x_api_key: str | None = Header(default=None),
    ):
        return service.create_session(request, x_api_key)

    @app.post("/sessions/{session_id}/feedback")
    def add_feedback(
        session_id: str,
        request: FeedbackRequest,
        x_api_key: str | None = Header(default=None),
    ):
        return service.add_feedback(session_id, request, x_api_key)

    @app.get("/sessions/{session_id}/export")
    def export(
        session_id: str,
        format: str = Query(...),
        version: int | None = Query(default=None),
    ) -> Response:
        return service.export(session_id, format, version)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return service.get_session(session_id)

    ui_root = ui_dir or os.environ.get("POWLGEN_UI_DIR")
    if ui_root and Path(ui_root).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_root), html=True), name="ui")

    return app


def serve(
    host: str = "127.0.0.1",
    port: int | None = None,
    data_dir: Path | str | None = None,
    ui_dir: Path | str | None = None,
) -> None:
    """Runs the studio service under uvicorn (blocking)."""
    import uvicorn

    app = create_app(data_dir=data_dir, ui_dir=ui_dir)
    uvicorn.run(
        app,
        host=host,
        port=port if port is not None else int(os.environ.get("POWLGEN_PORT", "8765")),
        log_level="info",
    )
