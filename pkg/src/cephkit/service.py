"""HTTP facade: analyses, reports, prompts, and dialogue sessions.

Every non-2xx response body is a single error envelope:
``{"code": str, "message": str, "details"?: object}``.
"""

from __future__ import annotations

import json
import os
import random
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .analysis import CaseAnalysis, analyze_case
from .dialogue import (
    BackendUnreachable,
    CompletionBackendConfig,
    DialogueGateway,
    EmptyMessage,
    UnknownAnalysis,
    UnknownSession,
)
from .geometry import DegenerateGeometry, OrientationUndetermined
from .ingest import (
    IngestError,
    REASON_DEGENERATE,
    REASON_MISSING_LANDMARK,
    analysis_record_json,
    default_norms,
    default_thresholds,
    load_norms,
    load_thresholds,
    parse_landmarks_json,
    validate_case,
)
from .report import (
    FORMAT_MARKDOWN,
    FORMAT_STRUCTURED,
    FORMAT_TEXT,
    FORMATS,
    LANGUAGES,
    Templates,
    build_prompt,
    load_templates,
    render_report,
)
from .steiner import ClassificationThresholds, MissingCalibration, NormTable

DEFAULT_BIND_ADDR = "127.0.0.1:8080"


@dataclass(frozen=True)
class ServiceSettings:
    norms: NormTable | None = None
    thresholds: ClassificationThresholds | None = None
    templates: Templates | None = None
    backend: CompletionBackendConfig = field(default_factory=CompletionBackendConfig)
    cors_origins: tuple[str, ...] = ()
    api_key: str = field(default="", repr=False)
    write_through_dir: str | None = None
    session_journal: str | None = None

    @classmethod
    def from_env(cls, env=os.environ) -> "ServiceSettings":
        norms = None
        if env.get("CEPH_NORMS_PATH"):
            norms = load_norms(Path(env["CEPH_NORMS_PATH"]).read_bytes())
        thresholds = None
        if env.get("CEPH_THRESHOLDS_PATH"):
            thresholds = load_thresholds(Path(env["CEPH_THRESHOLDS_PATH"]).read_bytes())
        templates = None
        if env.get("CEPH_TEMPLATES_DIR"):
            templates = load_templates(env["CEPH_TEMPLATES_DIR"])
        origins = tuple(
            o.strip() for o in env.get("CEPH_CORS_ORIGINS", "").split(",") if o.strip()
        )
        return cls(
            norms=norms,
            thresholds=thresholds,
            templates=templates,
            backend=CompletionBackendConfig.from_env(env),
            cors_origins=origins,
            api_key=env.get("CEPH_API_KEY", ""),
            write_through_dir=env.get("CEPH_WRITE_THROUGH_DIR") or None,
            session_journal=env.get("CEPH_SESSION_JOURNAL") or None,
        )


class AnalysisRecord:
    """Immutable analysis plus lazily cached report renderings."""

    def __init__(self, analysis_id: str, analysis: CaseAnalysis):
        self.id = analysis_id
        self.analysis = analysis
        self.created_at = datetime.now(timezone.utc).isoformat()
        self._report_cache: dict[tuple[str, str], object] = {}

    def report(self, lang: str, fmt: str, templates: Templates | None):
        key = (lang, fmt)
        if key not in self._report_cache:
            self._report_cache[key] = render_report(
                list(self.analysis.findings),
                lang,
                fmt,
                results=list(self.analysis.results),
                templates=templates,
            )
        return self._report_cache[key]

    def payload(self) -> dict:
        a = self.analysis
        return {
            "id": self.id,
            "created_at": self.created_at,
            "case_id": a.case.case_id,
            "measurements": [
                {"id": r.id, "value": r.value, "unit": r.unit, "inputs": list(r.inputs_used)}
                for r in a.results
            ],
            "skipped": [{"id": s.id, "code": s.code, "detail": s.detail} for s in a.skipped],
            "deviations": [{"id": d.id, "z": d.z, "grade": d.grade} for d in a.deviations],
            "classification": {
                "sagittal": a.classification.sagittal,
                "vertical": a.classification.vertical,
                "thresholds": {
                    "anb_lo": a.classification.thresholds.anb_lo,
                    "anb_hi": a.classification.thresholds.anb_hi,
                    "mpfh_lo": a.classification.thresholds.mpfh_lo,
                    "mpfh_hi": a.classification.thresholds.mpfh_hi,
                },
            },
            "findings": [f.key for f in a.findings],
        }


class AnalysisStore:
    def __init__(self):
        self._records: dict[str, AnalysisRecord] = {}
        self._lock = threading.Lock()

    def insert(self, analysis: CaseAnalysis) -> AnalysisRecord:
        record = AnalysisRecord(uuid.uuid4().hex, analysis)
        with self._lock:
            self._records[record.id] = record
        return record

    def get(self, analysis_id: str) -> AnalysisRecord | None:
        with self._lock:
            return self._records.get(analysis_id)

    def get_analysis(self, analysis_id: str) -> CaseAnalysis | None:
        record = self.get(analysis_id)
        return record.analysis if record is not None else None


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


_HTTP_CODE_NAMES = {
    400: "BAD_REQUEST",
    401: "UNAUTHORIZED",
    404: "NOT_FOUND",
    405: "METHOD_NOT_ALLOWED",
    422: "UNPROCESSABLE",
    500: "INTERNAL",
}


def create_app(
    settings: ServiceSettings | None = None,
    llm_transport: httpx.BaseTransport | None = None,
) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    norms = settings.norms if settings.norms is not None else default_norms()
    thresholds = (
        settings.thresholds if settings.thresholds is not None else default_thresholds()
    )

    app = FastAPI(title="cephkit", version=__version__, docs_url=None, redoc_url=None)
    store = AnalysisStore()
    gateway = DialogueGateway(
        store.get_analysis,
        config=settings.backend,
        transport=llm_transport,
        journal_path=settings.session_journal,
    )

    if settings.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(settings.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_envelope(request: Request, exc: StarletteHTTPException):
        code = _HTTP_CODE_NAMES.get(exc.status_code, f"HTTP_{exc.status_code}")
        return _error(exc.status_code, code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_envelope(request: Request, exc: RequestValidationError):
        return _error(400, "BAD_PARAM", "invalid request parameters", details=exc.errors())

    @app.exception_handler(Exception)
    async def internal_envelope(request: Request, exc: Exception):
        return _error(500, "INTERNAL", "internal server error")

    @app.middleware("http")
    async def api_key_guard(request: Request, call_next):
        if settings.api_key and request.url.path != "/healthz":
            if request.headers.get("x-api-key") != settings.api_key:
                return _error(401, "UNAUTHORIZED", "missing or invalid API key")
        return await call_next(request)

    # -- analyses -----------------------------------------------------------
    @app.post("/api/v1/analyses", status_code=201)
    async def create_analysis(request: Request):
        body = await request.body()
        try:
            case = parse_landmarks_json(body)
            problems = validate_case(case)
            if problems:
                reason, detail = problems[0]
                return _error(
                    400, reason, detail,
                    details=[{"code": r, "detail": d} for r, d in problems],
                )
            analysis = analyze_case(case, norms=norms, thresholds=thresholds)
        except MissingCalibration as exc:
            return _error(422, "MISSING_CALIBRATION", str(exc))
        except IngestError as exc:
            return _error(400, exc.code, str(exc))
        except OrientationUndetermined as exc:
            return _error(400, REASON_MISSING_LANDMARK, str(exc))
        except DegenerateGeometry as exc:
            return _error(400, REASON_DEGENERATE, str(exc))
        record = store.insert(analysis)
        if settings.write_through_dir:
            out_dir = Path(settings.write_through_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            stem = analysis.case.case_id
            (out_dir / f"{stem}.analysis.json").write_bytes(analysis_record_json(analysis))
        return JSONResponse(status_code=201, content=record.payload())

    @app.get("/api/v1/analyses/{analysis_id}")
    def get_analysis(analysis_id: str):
        record = store.get(analysis_id)
        if record is None:
            return _error(404, "UNKNOWN_ANALYSIS", f"no analysis {analysis_id!r}")
        return JSONResponse(content=record.payload())

    @app.get("/api/v1/analyses/{analysis_id}/report")
    def get_report(analysis_id: str, lang: str = "en", format: str = FORMAT_TEXT):
        if lang not in LANGUAGES:
            return _error(400, "BAD_PARAM", f"lang must be one of {LANGUAGES}")
        if format not in FORMATS:
            return _error(400, "BAD_PARAM", f"format must be one of {FORMATS}")
        record = store.get(analysis_id)
        if record is None:
            return _error(404, "UNKNOWN_ANALYSIS", f"no analysis {analysis_id!r}")
        rendered = record.report(lang, format, settings.templates)
        if format == FORMAT_STRUCTURED:
            return JSONResponse(content=rendered)
        media = "text/markdown" if format == FORMAT_MARKDOWN else "text/plain"
        return PlainTextResponse(content=rendered, media_type=media)

    @app.get("/api/v1/analyses/{analysis_id}/prompt")
    def get_prompt(analysis_id: str, lang: str = "en", seed: int | None = None):
        if lang not in LANGUAGES:
            return _error(400, "BAD_PARAM", f"lang must be one of {LANGUAGES}")
        record = store.get(analysis_id)
        if record is None:
            return _error(404, "UNKNOWN_ANALYSIS", f"no analysis {analysis_id!r}")
        if seed is None:
            seed = random.getrandbits(63)
        try:
            sample = build_prompt(list(record.analysis.results), lang, seed)
        except Exception as exc:
            return _error(400, "MISSING_MEASUREMENT", str(exc))
        return JSONResponse(
            content={
                "text": sample.text,
                "language": sample.language,
                "instruction_index": sample.instruction_index,
                "seed": sample.seed,
            }
        )

    # -- sessions ------------------------------------------------------------
    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "BAD_PARAM", "body must be JSON")
        analysis_id = body.get("analysis_id")
        lang = body.get("lang", "en")
        if not isinstance(analysis_id, str) or lang not in LANGUAGES:
            return _error(400, "BAD_PARAM", "need analysis_id (str) and lang in {en, zh}")
        try:
            session = gateway.open_session(analysis_id, lang)
        except UnknownAnalysis:
            return _error(404, "UNKNOWN_ANALYSIS", f"no analysis {analysis_id!r}")
        return JSONResponse(status_code=201, content={"session_id": session.session_id})

    @app.post("/api/v1/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "BAD_PARAM", "body must be JSON")
        content = body.get("content")
        if not isinstance(content, str):
            return _error(400, "BAD_PARAM", "need content (str)")
        try:
            reply = gateway.ask(session_id, content)
        except UnknownSession:
            return _error(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        except EmptyMessage as exc:
            return _error(400, "EMPTY_MESSAGE", str(exc))
        except BackendUnreachable as exc:
            return _error(502, "BACKEND_UNREACHABLE", str(exc))
        return JSONResponse(
            content={
                "reply": {
                    "role": reply.role,
                    "content": reply.content,
                    "timestamp": reply.timestamp,
                }
            }
        )

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = gateway.get_session(session_id)
        except UnknownSession:
            return _error(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        return JSONResponse(content=session.to_record())

    # -- health --------------------------------------------------------------
    @app.get("/healthz")
    def healthz():
        return JSONResponse(
            content={
                "status": "ok",
                "version": __version__,
                "backend_enabled": settings.backend.enabled,
            }
        )

    return app


def parse_bind_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address must be HOST:PORT, got {addr!r}")
    port_num = int(port)
    if not 0 < port_num < 65536:
        raise ValueError(f"port out of range in {addr!r}")
    return host, port_num
