"""HTTP facade over sessions, recommendations, evaluation, and export.

JSON over HTTP/1.1, versioned under ``/v1``, snake_case throughout.
Sessions live in an in-process registry; per-session mutations are
serialized by a lock while distinct sessions proceed in parallel.
GET routes are pure projections of session state.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import evaluation, linker, recommend
from .errors import (
    AlreadyAnnotated,
    AlreadyRejected,
    FileMissing,
    MathelError,
    NetworkError,
    NotAnnotated,
    NotFound,
    UnknownTarget,
)
from .ingest import (
    FcMemory,
    FormulaCatalog,
    IdentifierCatalog,
    RawDocument,
    UserInputStore,
    fetch_article,
    load_fc_memory,
    load_formula_catalog,
    load_identifier_catalog,
    load_user_input_store,
)
from .parsing import IDENTIFIER
from .session import SessionState, TargetRef, create_session

API_PREFIX = "/v1"

request_logger = logging.getLogger("mathel.api.requests")


@dataclass
class AppConfig:
    """Service configuration; file values are overridden by environment."""

    arxiv_catalog: Optional[str] = None
    wikipedia_catalog: Optional[str] = None
    wikidata_catalog: Optional[str] = None
    formula_catalog: Optional[str] = None
    fc_memory: Optional[str] = None
    user_store: Optional[str] = None
    article_dir: Optional[str] = None
    wiki_base_url: Optional[str] = None
    fuzzy_threshold: float = recommend.FUZZY_THRESHOLD
    cutoff: int = recommend.CUTOFF
    eval_seed: Optional[int] = None
    word_window_size: int = 5
    host: str = "127.0.0.1"
    port: int = 8000

    @classmethod
    def from_file(cls, path: Optional[str] = None) -> "AppConfig":
        data = {}
        if path:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        config = cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
        env_url = os.environ.get("MATHEL_WIKI_BASE_URL")
        if env_url:
            config.wiki_base_url = env_url
        env_port = os.environ.get("MATHEL_PORT")
        if env_port:
            config.port = int(env_port)
        return config


class ServiceState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.sessions: dict[str, SessionState] = {}
        self.session_locks: dict[str, threading.Lock] = {}
        self.eval_seeds: dict[str, int] = {}
        self.idempotency: dict[tuple[str, str], dict] = {}
        self.registry_lock = threading.Lock()

        self.identifier_catalogs: dict[str, IdentifierCatalog] = {}
        for kind, path in (
            ("arxiv", config.arxiv_catalog),
            ("wikipedia", config.wikipedia_catalog),
            ("wikidata", config.wikidata_catalog),
        ):
            if path:
                self.identifier_catalogs[kind] = load_identifier_catalog(path, kind)
        self.formula_catalog: Optional[FormulaCatalog] = (
            load_formula_catalog(config.formula_catalog) if config.formula_catalog else None
        )
        self.fc_memory = (
            load_fc_memory(config.fc_memory)
            if config.fc_memory and Path(config.fc_memory).exists()
            else FcMemory()
        )
        self.user_store = (
            load_user_input_store(config.user_store)
            if config.user_store and Path(config.user_store).exists()
            else UserInputStore()
        )

    def session(self, session_id: str) -> SessionState:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFound(session_id)
        return session

    def lock_for(self, session_id: str) -> threading.Lock:
        with self.registry_lock:
            return self.session_locks.setdefault(session_id, threading.Lock())

    def seed_for(self, session_id: str) -> int:
        if self.config.eval_seed is not None:
            return self.config.eval_seed
        if session_id not in self.eval_seeds:
            digest = hashlib.sha256(session_id.encode()).digest()
            self.eval_seeds[session_id] = int.from_bytes(digest[:4], "big")
        return self.eval_seeds[session_id]


# --- request bodies ---------------------------------------------------------


class CreateSessionRequest(BaseModel):
    title: Optional[str] = None
    body: Optional[str] = None
    format: str = "wikitext"


class ProvenancePayload(BaseModel):
    type: str = "manual"  # "manual" | "recommended"
    source: Optional[str] = None
    position: Optional[int] = None


class AnnotationRequest(BaseModel):
    target: Union[str, dict]
    name: str
    qid: Optional[str] = None
    mode: str = "global"
    provenance: Union[str, ProvenancePayload] = "manual"
    elapsed_ms: int = 0


class RejectionRequest(BaseModel):
    target: Union[str, dict]


class ExportRequest(BaseModel):
    session_id: str
    quote_attrs: bool = False
    block_only: bool = False


# --- serialization ----------------------------------------------------------


def _parse_target(raw: Union[str, dict]) -> TargetRef:
    if isinstance(raw, str):
        return TargetRef.parse_key_string(raw)
    return TargetRef.from_dict(raw)


def _session_view(session: SessionState) -> dict:
    segments = []
    for segment, formula in zip(session.segments, session.formulas):
        tokens = []
        for token in formula.tokens:
            entry = {
                "kind": token.kind,
                "text": token.text,
                "span": list(token.span),
                "symbol": token.symbol,
            }
            if token.kind == IDENTIFIER and token.symbol:
                entry["status"] = session.occurrence_status(
                    token.symbol, segment.segment_id, token.span
                )
                entry["target_key"] = TargetRef(
                    "identifier", token.symbol, segment.segment_id, token.span
                ).to_key_string()
            tokens.append(entry)
        segments.append(
            {
                "segment_id": segment.segment_id,
                "raw_latex": segment.raw_latex,
                "display": segment.display,
                "existing_qid": segment.existing_qid,
                "span": list(segment.span),
                "is_equation": formula.is_equation,
                "status": session.segment_status(segment.segment_id),
                "target_key": TargetRef("formula", segment_id=segment.segment_id).to_key_string(),
                "tokens": tokens,
            }
        )
    return {
        "session_id": session.session_id,
        "title": session.doc.title,
        "format": session.doc.format,
        "progress": session.progress(),
        "warnings": session.warnings,
        "conflicts": session.conflicts,
        "segments": segments,
        "annotations": [row.__dict__ for row in session.annotation_table()],
        "rejected": sorted(ref.to_key_string() for ref in session.rejected),
        "event_count": len(session.events),
    }


def _recommendation_view(rec_set, eval_mode: bool, seed: int) -> dict:
    columns = []
    for label, source in rec_set.presentation:
        columns.append(
            {
                "label": label,
                "source": source,
                "candidates": [
                    {"name": c.name, "qid": c.qid, "rank": c.rank, "score": c.score}
                    for c in rec_set.per_source[source]
                ],
            }
        )
    return {
        "target": rec_set.target if isinstance(rec_set.target, str) else f"seg:{rec_set.target}",
        "eval_mode": eval_mode,
        "seed": seed,
        "columns": columns,
    }


def _error_response(status: int, code: str, message: str, detail=None) -> JSONResponse:
    payload = {"code": code, "message": message}
    if detail is not None:
        payload["detail"] = detail
    return JSONResponse(status_code=status, content=payload)


# --- application ------------------------------------------------------------


def create_app(config: Optional[AppConfig] = None) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="mathel", version="1")
    state = ServiceState(config)
    app.state.service = state

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        request_logger.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "duration_ms": round((time.perf_counter() - started) * 1000, 2),
                }
            )
        )
        return response

    @app.exception_handler(MathelError)
    async def handle_domain_error(request: Request, exc: MathelError):
        if isinstance(exc, (NotFound, UnknownTarget, NotAnnotated, FileMissing)):
            return _error_response(404, "not_found", str(exc))
        if isinstance(exc, (AlreadyAnnotated, AlreadyRejected)):
            return _error_response(409, "conflict", str(exc))
        if isinstance(exc, NetworkError):
            return _error_response(502, "upstream_unavailable", str(exc))
        return _error_response(400, "bad_request", str(exc))

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return _error_response(400, "bad_request", str(exc))

    def _load_document(body: CreateSessionRequest) -> RawDocument:
        if body.body:
            from datetime import datetime, timezone

            return RawDocument(
                title=body.title or "untitled",
                body=body.body,
                format=body.format,
                retrieved_at=datetime.now(timezone.utc),
                origin="file",
            )
        if not body.title:
            raise ValueError("request must carry a title or a document body")
        if config.article_dir:
            base = Path(config.article_dir)
            for suffix in ("", ".wiki", ".wikitext", ".txt", ".tex"):
                candidate = base / f"{body.title}{suffix}"
                if candidate.exists():
                    return fetch_article(body.title, str(candidate))
        if config.wiki_base_url:
            return fetch_article(body.title, config.wiki_base_url)
        raise NotFound(body.title)

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def create_session_route(body: CreateSessionRequest):
        doc = _load_document(body)
        session = create_session(
            doc, fc_memory=state.fc_memory, user_store=state.user_store
        )
        with state.registry_lock:
            state.sessions[session.session_id] = session
        return _session_view(session)

    @app.get(API_PREFIX + "/sessions/{session_id}")
    def get_session_route(session_id: str):
        return _session_view(state.session(session_id))

    @app.get(API_PREFIX + "/sessions/{session_id}/recommendations")
    def recommendations_route(
        session_id: str,
        target: str = Query(...),
        eval: bool = Query(False),
        seed: Optional[int] = Query(None),
        segment_id: Optional[int] = Query(None),
    ):
        session = state.session(session_id)
        ref = TargetRef.parse_key_string(target)
        effective_seed = seed if seed is not None else state.seed_for(session_id)

        if ref.kind == "formula":
            if ref.segment_id is None or not 0 <= ref.segment_id < len(session.segments):
                raise UnknownTarget(target)
            segment = session.segments[ref.segment_id]
            rec_set = recommend.recommend_formula(
                segment,
                session.doc,
                state.formula_catalog,
                session.fc_memory,
                session,
                threshold=config.fuzzy_threshold,
                k=config.word_window_size,
                cutoff=config.cutoff,
                segments=session.segments,
            )
        else:
            occurrences = session.occurrences(ref.symbol)
            if not occurrences:
                raise UnknownTarget(target)
            context_id = ref.segment_id if ref.segment_id is not None else segment_id
            if context_id is None:
                context_id = occurrences[0][0]
            if not 0 <= context_id < len(session.segments):
                raise UnknownTarget(target)
            rec_set = recommend.recommend_identifier(
                ref.symbol,
                session.doc,
                session.segments[context_id],
                state.identifier_catalogs,
                session.user_store,
                k=config.word_window_size,
                cutoff=config.cutoff,
                segments=session.segments,
            )
        rec_set = recommend.presentation_order(rec_set, effective_seed, eval)
        return _recommendation_view(rec_set, eval, effective_seed)

    @app.post(API_PREFIX + "/sessions/{session_id}/annotations")
    def annotate_route(
        session_id: str,
        body: AnnotationRequest,
        idempotency_key: Optional[str] = Header(None, alias="Idempotency-Key"),
    ):
        session = state.session(session_id)
        if idempotency_key:
            cached = state.idempotency.get((session_id, idempotency_key))
            if cached is not None:
                return cached
        provenance = body.provenance
        if isinstance(provenance, str):
            provenance = ProvenancePayload(type=provenance)
        with state.lock_for(session_id):
            session.annotate(
                _parse_target(body.target),
                name=body.name,
                qid=body.qid,
                mode=body.mode,
                provenance=provenance.type,
                elapsed_ms=body.elapsed_ms,
                source=provenance.source,
                position=provenance.position,
            )
            response = {
                "annotations": [row.__dict__ for row in session.annotation_table()],
                "progress": session.progress(),
            }
        if idempotency_key:
            state.idempotency[(session_id, idempotency_key)] = response
        return response

    @app.delete(API_PREFIX + "/sessions/{session_id}/annotations/{target_key:path}")
    def unannotate_route(session_id: str, target_key: str):
        session = state.session(session_id)
        with state.lock_for(session_id):
            session.unannotate(TargetRef.parse_key_string(target_key))
            return {
                "annotations": [row.__dict__ for row in session.annotation_table()],
                "progress": session.progress(),
            }

    @app.post(API_PREFIX + "/sessions/{session_id}/rejections")
    def reject_route(session_id: str, body: RejectionRequest):
        session = state.session(session_id)
        with state.lock_for(session_id):
            session.reject(_parse_target(body.target))
            return {
                "rejected": sorted(ref.to_key_string() for ref in session.rejected),
                "progress": session.progress(),
            }

    @app.get(API_PREFIX + "/reports/sources")
    def sources_report_route():
        events = [e for s in state.sessions.values() for e in s.events]
        report = evaluation.source_report(events)
        return {
            kind: {name: perf.to_dict() for name, perf in per_kind.items()}
            for kind, per_kind in report.items()
        }

    @app.get(API_PREFIX + "/reports/timing")
    def timing_report_route():
        sessions = list(state.sessions.values())
        events = [e for s in sessions for e in s.events]
        return {
            "timing": [t.to_dict() for t in evaluation.timing_report(events)],
            "qid_coverage": evaluation.qid_coverage(sessions),
        }

    @app.post(API_PREFIX + "/export/wikitext")
    def export_route(body: ExportRequest):
        session = state.session(body.session_id)
        formula_annotations = {
            a.target.segment_id: a.qid
            for a in session.effective_annotations()
            if a.target.kind == "formula" and a.qid
        }
        wikitext, stats = linker.insert_qid_links(
            session.doc,
            session.segments,
            formula_annotations,
            quote_attrs=body.quote_attrs,
            block_only=body.block_only,
        )
        return {
            "wikitext": wikitext,
            "stats": {
                "candidates": stats.candidates,
                "skipped_duplicates": stats.skipped_duplicates,
                "linked": stats.linked,
                "skipped_non_equation": stats.skipped_non_equation,
            },
        }

    return app
