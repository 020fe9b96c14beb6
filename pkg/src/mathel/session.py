"""Mutable state of one annotation session.

The event log is the source of truth: every commit, undo and rejection
appends an immutable event, and the effective state (annotations in
force, rejected targets) is a pure fold over that log.  Undo appends a
reversal event rather than deleting history, which keeps saved sessions
replayable and feeds the evaluation module for free.

Sessions are single-writer; the shared stores they learn into
(formula-concept memory, user-input names) keep what they learned even
when an annotation is undone.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

from .errors import (
    AlreadyAnnotated,
    AlreadyRejected,
    NotAnnotated,
    SchemaViolation,
    UnknownTarget,
    VersionMismatch,
)
from .ingest import FcMemory, RawDocument, UserInputStore
from .parsing import (
    IDENTIFIER,
    MathSegment,
    TokenizedFormula,
    TokenizerOptions,
    extract_math_segments,
    tokenize_formula,
)

logger = logging.getLogger(__name__)

SESSION_FILE_VERSION = 1

MODE_GLOBAL = "global"
MODE_LOCAL = "local"

EVENT_ACCEPT = "accept_recommendation"
EVENT_MANUAL = "manual_insert"
EVENT_UNDO = "undo"
EVENT_REJECT = "reject"

PROVENANCE_RECOMMENDED = "recommended"
PROVENANCE_MANUAL = "manual"

MAX_ACCEPTED_POSITION = 10

_KEY_LOCAL_RE = re.compile(r"id:(?P<symbol>.+)@(?P<seg>\d+):(?P<start>\d+)-(?P<end>\d+)\Z")
_KEY_GLOBAL_RE = re.compile(r"id:(?P<symbol>.+)\Z")
_KEY_SEGMENT_RE = re.compile(r"seg:(?P<seg>\d+)\Z")


@dataclass(frozen=True)
class TargetRef:
    """Address of an annotatable thing.

    * identifier, global scope: symbol only;
    * identifier, one occurrence: symbol + segment_id + token_span;
    * formula: segment_id only.
    """

    kind: str  # "identifier" | "formula"
    symbol: Optional[str] = None
    segment_id: Optional[int] = None
    token_span: Optional[tuple[int, int]] = None

    def key(self):
        if self.kind == "identifier":
            if self.segment_id is None:
                return ("identifier", self.symbol)
            return ("identifier", self.symbol, self.segment_id, self.token_span)
        return ("formula", self.segment_id)

    def is_occurrence(self) -> bool:
        return self.kind == "identifier" and self.segment_id is not None

    def to_dict(self) -> dict:
        data = {"kind": self.kind}
        if self.symbol is not None:
            data["symbol"] = self.symbol
        if self.segment_id is not None:
            data["segment_id"] = self.segment_id
        if self.token_span is not None:
            data["token_span"] = list(self.token_span)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TargetRef":
        span = data.get("token_span")
        return cls(
            kind=data["kind"],
            symbol=data.get("symbol"),
            segment_id=data.get("segment_id"),
            token_span=tuple(span) if span is not None else None,
        )

    def to_key_string(self) -> str:
        """Compact form used in URLs, e.g. ``id:E``, ``id:E@2:4-5``, ``seg:3``."""
        if self.kind == "formula":
            return f"seg:{self.segment_id}"
        if self.segment_id is None:
            return f"id:{self.symbol}"
        start, end = self.token_span
        return f"id:{self.symbol}@{self.segment_id}:{start}-{end}"

    @classmethod
    def parse_key_string(cls, text: str) -> "TargetRef":
        m = _KEY_SEGMENT_RE.match(text)
        if m:
            return cls(kind="formula", segment_id=int(m.group("seg")))
        m = _KEY_LOCAL_RE.match(text)
        if m:
            return cls(
                kind="identifier",
                symbol=m.group("symbol"),
                segment_id=int(m.group("seg")),
                token_span=(int(m.group("start")), int(m.group("end"))),
            )
        m = _KEY_GLOBAL_RE.match(text)
        if m:
            return cls(kind="identifier", symbol=m.group("symbol"))
        raise ValueError(f"unparseable target key: {text!r}")


@dataclass(frozen=True)
class Annotation:
    """A committed link, in force until undone."""

    target: TargetRef
    name: str
    qid: Optional[str]
    mode: str  # "global" | "local"
    provenance: str  # "recommended" | "manual"
    source: Optional[str] = None  # recommended only
    position: Optional[int] = None  # recommended only, 1..10
    elapsed_ms: int = 0


@dataclass(frozen=True)
class AnnotationEvent:
    """Immutable log record; the evaluation module consumes these."""

    kind: str
    target: TargetRef
    timestamp: float
    name: Optional[str] = None
    qid: Optional[str] = None
    mode: Optional[str] = None
    source: Optional[str] = None
    position: Optional[int] = None
    elapsed_ms: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target": self.target.to_dict(),
            "timestamp": self.timestamp,
            "name": self.name,
            "qid": self.qid,
            "mode": self.mode,
            "source": self.source,
            "position": self.position,
            "elapsed_ms": self.elapsed_ms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationEvent":
        return cls(
            kind=data["kind"],
            target=TargetRef.from_dict(data["target"]),
            timestamp=data["timestamp"],
            name=data.get("name"),
            qid=data.get("qid"),
            mode=data.get("mode"),
            source=data.get("source"),
            position=data.get("position"),
            elapsed_ms=data.get("elapsed_ms"),
        )


@dataclass(frozen=True)
class AnnotationTableRow:
    target_text: str
    name: str
    qid: Optional[str]
    mode: str
    provenance: str
    is_identifier: bool
    target_key: str


def _fold_event(annotations: dict, rejected: set, event: "AnnotationEvent") -> None:
    if event.kind in (EVENT_ACCEPT, EVENT_MANUAL):
        annotations[event.target.key()] = Annotation(
            target=event.target,
            name=event.name,
            qid=event.qid,
            mode=event.mode,
            provenance=PROVENANCE_RECOMMENDED if event.kind == EVENT_ACCEPT else PROVENANCE_MANUAL,
            source=event.source,
            position=event.position,
            elapsed_ms=event.elapsed_ms or 0,
        )
    elif event.kind == EVENT_UNDO:
        annotations.pop(event.target.key(), None)
    elif event.kind == EVENT_REJECT:
        rejected.add(event.target)


def replay_events(events) -> tuple[dict, set]:
    """Fold an event log into (annotations by key, rejected refs)."""
    annotations: dict = {}
    rejected: set[TargetRef] = set()
    for event in events:
        _fold_event(annotations, rejected, event)
    return annotations, rejected


class SessionState:
    """One annotation session over one document. Single-writer."""

    def __init__(
        self,
        doc: RawDocument,
        segments: list[MathSegment],
        formulas: list[TokenizedFormula],
        *,
        session_id: Optional[str] = None,
        fc_memory: Optional[FcMemory] = None,
        user_store: Optional[UserInputStore] = None,
        warnings: Optional[list[str]] = None,
    ):
        self.doc = doc
        self.segments = segments
        self.formulas = formulas
        self.session_id = session_id or uuid.uuid4().hex
        self.fc_memory = fc_memory if fc_memory is not None else FcMemory()
        self.user_store = user_store if user_store is not None else UserInputStore()
        self.warnings = list(warnings or [])
        self.conflicts: list[str] = []
        self.events: list[AnnotationEvent] = []
        self.annotations: dict = {}  # target key -> Annotation
        self.rejected: set[TargetRef] = set()
        self._occurrence_index = self._build_occurrence_index()
        self._clock = time.time

    # -- structure queries ------------------------------------------------

    def _build_occurrence_index(self) -> dict[str, list[tuple[int, tuple[int, int]]]]:
        index: dict[str, list[tuple[int, tuple[int, int]]]] = {}
        for formula in self.formulas:
            for token in formula.tokens:
                if token.kind == IDENTIFIER and token.symbol:
                    index.setdefault(token.symbol, []).append((formula.segment_id, token.span))
        return index

    def occurrences(self, symbol: str) -> list[tuple[int, tuple[int, int]]]:
        return list(self._occurrence_index.get(symbol, []))

    def identifier_symbols(self) -> list[str]:
        return list(self._occurrence_index)

    def formula_for(self, segment_id: int) -> TokenizedFormula:
        return self.formulas[segment_id]

    # -- effective-state queries ------------------------------------------

    def annotation_for(self, target: TargetRef) -> Optional[Annotation]:
        return self.annotations.get(target.key())

    def _occurrence_rejected(self, symbol: str, segment_id: int, span) -> bool:
        return (
            TargetRef("identifier", symbol, segment_id, tuple(span)) in self.rejected
            or TargetRef("identifier", symbol) in self.rejected
        )

    def occurrence_status(self, symbol: str, segment_id: int, span) -> str:
        if self._occurrence_rejected(symbol, segment_id, span):
            return "rejected"
        if ("identifier", symbol) in self.annotations:
            return "annotated"
        if ("identifier", symbol, segment_id, tuple(span)) in self.annotations:
            return "annotated"
        return "unannotated"

    def segment_status(self, segment_id: int) -> str:
        ref = TargetRef("formula", segment_id=segment_id)
        if ref in self.rejected:
            return "rejected"
        if ref.key() in self.annotations:
            return "annotated"
        return "unannotated"

    def annotated_identifier_qids(self, segment_id: int) -> set[str]:
        """QIDs already attached to the segment's identifiers; feeds parts overlap."""
        qids: set[str] = set()
        formula = self.formulas[segment_id]
        for symbol in formula.identifier_symbols:
            annotation = self.annotations.get(("identifier", symbol))
            if annotation is not None and annotation.qid:
                qids.add(annotation.qid)
                continue
            for seg_id, span in self._occurrence_index.get(symbol, []):
                if seg_id != segment_id:
                    continue
                local = self.annotations.get(("identifier", symbol, seg_id, span))
                if local is not None and local.qid:
                    qids.add(local.qid)
        return qids

    def progress(self) -> float:
        """Annotated targets over non-rejected targets, occurrence-counted."""
        annotated = 0
        total = 0
        for symbol, occurrences in self._occurrence_index.items():
            for segment_id, span in occurrences:
                if self._occurrence_rejected(symbol, segment_id, span):
                    continue
                total += 1
                if self.occurrence_status(symbol, segment_id, span) == "annotated":
                    annotated += 1
        for segment in self.segments:
            status = self.segment_status(segment.segment_id)
            if status == "rejected":
                continue
            total += 1
            if status == "annotated":
                annotated += 1
        return annotated / total if total else 1.0

    # -- mutations ---------------------------------------------------------

    def _append(self, event: AnnotationEvent) -> None:
        self.events.append(event)
        self._apply(event)

    def _apply(self, event: AnnotationEvent) -> None:
        _fold_event(self.annotations, self.rejected, event)

    def _validate_target(self, target: TargetRef) -> None:
        if target.kind == "formula":
            if target.segment_id is None or not 0 <= target.segment_id < len(self.segments):
                raise UnknownTarget(target.to_key_string())
            return
        if target.kind != "identifier" or not target.symbol:
            raise UnknownTarget(str(target))
        occurrences = self._occurrence_index.get(target.symbol)
        if not occurrences:
            raise UnknownTarget(target.to_key_string())
        if target.segment_id is not None and (target.segment_id, target.token_span) not in occurrences:
            raise UnknownTarget(target.to_key_string())

    def annotate(
        self,
        target: TargetRef,
        name: str,
        qid: Optional[str] = None,
        mode: str = MODE_GLOBAL,
        provenance: str = PROVENANCE_MANUAL,
        elapsed_ms: int = 0,
        *,
        source: Optional[str] = None,
        position: Optional[int] = None,
    ) -> Annotation:
        """Commit one annotation; global identifier mode covers every occurrence."""
        if mode not in (MODE_GLOBAL, MODE_LOCAL):
            raise ValueError(f"unknown mode: {mode!r}")
        if not name:
            raise ValueError("annotation name must be non-empty")
        if elapsed_ms < 0:
            raise ValueError("elapsed_ms must be non-negative")
        if provenance == PROVENANCE_RECOMMENDED:
            if source is None or position is None:
                raise ValueError("recommended provenance requires source and position")
            if not 1 <= position <= MAX_ACCEPTED_POSITION:
                raise ValueError(f"accepted position must be in 1..{MAX_ACCEPTED_POSITION}")
        elif provenance != PROVENANCE_MANUAL:
            raise ValueError(f"unknown provenance: {provenance!r}")

        if target.kind == "identifier":
            if mode == MODE_GLOBAL:
                # a global annotation carries no single occurrence
                target = TargetRef("identifier", target.symbol)
            elif target.segment_id is None:
                raise ValueError("local identifier annotation requires an occurrence")
        self._validate_target(target)

        if target in self.rejected:
            raise AlreadyRejected(target.to_key_string())
        if target.is_occurrence() and self._occurrence_rejected(
            target.symbol, target.segment_id, target.token_span
        ):
            raise AlreadyRejected(target.to_key_string())
        if target.key() in self.annotations:
            raise AlreadyAnnotated(target.to_key_string())

        if target.kind == "identifier":
            self._warn_on_conflict(target, name, qid)

        event = AnnotationEvent(
            kind=EVENT_ACCEPT if provenance == PROVENANCE_RECOMMENDED else EVENT_MANUAL,
            target=target,
            timestamp=self._clock(),
            name=name,
            qid=qid,
            mode=mode,
            source=source,
            position=position,
            elapsed_ms=elapsed_ms,
        )
        self._append(event)

        if target.kind == "formula":
            segment = self.segments[target.segment_id]
            self.fc_memory.add_variant(name, qid, segment.raw_latex)
        if provenance == PROVENANCE_MANUAL:
            if target.kind == "identifier":
                self.user_store.record_identifier(target.symbol, name, qid)
            else:
                self.user_store.record_formula(name, qid)
        return self.annotations[target.key()]

    def _warn_on_conflict(self, target: TargetRef, name: str, qid: Optional[str]) -> None:
        """Same symbol, different meaning in one document: allowed, but logged."""
        for annotation in self.annotations.values():
            other = annotation.target
            if other.kind != "identifier" or other.symbol != target.symbol:
                continue
            if (annotation.name, annotation.qid) != (name, qid):
                message = (
                    f"symbol {target.symbol!r} now means {name!r} ({qid}) but was "
                    f"annotated as {annotation.name!r} ({annotation.qid}) elsewhere"
                )
                self.conflicts.append(message)
                logger.warning("%s: %s", self.session_id, message)

    def unannotate(self, target: TargetRef) -> None:
        if target.kind == "identifier" and target.segment_id is None:
            target = TargetRef("identifier", target.symbol)
        if target.key() not in self.annotations:
            raise NotAnnotated(target.to_key_string())
        self._append(
            AnnotationEvent(kind=EVENT_UNDO, target=target, timestamp=self._clock())
        )

    def reject(self, target: TargetRef) -> None:
        """Mark a mis-parsed target as not an identifier/formula."""
        self._validate_target(target)
        if target.key() in self.annotations:
            raise AlreadyAnnotated(target.to_key_string())
        if target.is_occurrence() and ("identifier", target.symbol) in self.annotations:
            raise AlreadyAnnotated(target.to_key_string())
        if target in self.rejected:
            raise AlreadyRejected(target.to_key_string())
        self._append(
            AnnotationEvent(kind=EVENT_REJECT, target=target, timestamp=self._clock())
        )

    # -- views --------------------------------------------------------------

    def effective_annotations(self) -> list[Annotation]:
        return list(self.annotations.values())

    def _position_of(self, annotation: Annotation) -> tuple[int, int]:
        target = annotation.target
        if target.kind == "formula":
            return (target.segment_id, -1)
        if target.segment_id is not None:
            return (target.segment_id, target.token_span[0])
        occurrences = self._occurrence_index.get(target.symbol) or [(len(self.segments), 0)]
        segment_id, span = occurrences[0]
        return (segment_id, span[0])

    def annotation_table(self) -> list[AnnotationTableRow]:
        """One row per effective annotation, ordered by first occurrence."""
        rows = []
        for annotation in self.annotations.values():
            target = annotation.target
            if target.kind == "identifier":
                text = target.symbol
            else:
                text = self.segments[target.segment_id].raw_latex
            rows.append(
                (
                    self._position_of(annotation),
                    AnnotationTableRow(
                        target_text=text,
                        name=annotation.name,
                        qid=annotation.qid,
                        mode=annotation.mode,
                        provenance=annotation.provenance,
                        is_identifier=target.kind == "identifier",
                        target_key=target.to_key_string(),
                    ),
                )
            )
        rows.sort(key=lambda pair: pair[0])
        return [row for _, row in rows]

    def verify_replay(self) -> None:
        """Assert that incremental state equals a fresh fold over the log."""
        annotations, rejected = replay_events(self.events)
        if annotations != self.annotations or rejected != self.rejected:
            raise AssertionError("session state diverged from event-log replay")


def create_session(
    doc: RawDocument,
    *,
    tokenizer_options: Optional[TokenizerOptions] = None,
    fc_memory: Optional[FcMemory] = None,
    user_store: Optional[UserInputStore] = None,
    session_id: Optional[str] = None,
) -> SessionState:
    """Parse a document and open a fresh session over it.

    Parser problems (unbalanced delimiters, unknown macros) become
    session warnings rather than errors.
    """
    issues: list = []
    segments = extract_math_segments(doc, issues)
    warnings = [f"unbalanced delimiter at {issue.span}: {issue.detail}" for issue in issues]
    formulas = []
    for segment in segments:
        formula = tokenize_formula(
            segment.raw_latex, tokenizer_options, segment_id=segment.segment_id
        )
        for lex_issue in formula.issues:
            warnings.append(
                f"segment {segment.segment_id}: unknown control sequence "
                f"{lex_issue.text!r} at {lex_issue.position}"
            )
        formulas.append(formula)
    return SessionState(
        doc,
        segments,
        formulas,
        session_id=session_id,
        fc_memory=fc_memory,
        user_store=user_store,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# persistence


def save_session(session: SessionState, path) -> None:
    """Write the versioned event-log session file."""
    data = {
        "version": SESSION_FILE_VERSION,
        "session_id": session.session_id,
        "doc": {
            "title": session.doc.title,
            "body": session.doc.body,
            "format": session.doc.format,
            "retrieved_at": session.doc.retrieved_at.isoformat(),
            "origin": session.doc.origin,
        },
        "events": [event.to_dict() for event in session.events],
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_session(
    path,
    *,
    tokenizer_options: Optional[TokenizerOptions] = None,
    fc_memory: Optional[FcMemory] = None,
    user_store: Optional[UserInputStore] = None,
) -> SessionState:
    """Rebuild a session by replaying its event log.

    Replay does not re-feed the shared stores; they persist separately
    and already absorbed this history.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid session JSON: {exc}") from exc
    version = data.get("version")
    if version != SESSION_FILE_VERSION:
        raise VersionMismatch(version, SESSION_FILE_VERSION)
    for key in ("session_id", "doc", "events"):
        if key not in data:
            raise SchemaViolation(f"session file missing {key!r}")
    doc_data = data["doc"]
    try:
        doc = RawDocument(
            title=doc_data["title"],
            body=doc_data["body"],
            format=doc_data["format"],
            retrieved_at=datetime.fromisoformat(doc_data["retrieved_at"]),
            origin=doc_data["origin"],
        )
    except (KeyError, ValueError) as exc:
        raise SchemaViolation(f"bad document record: {exc}") from exc

    session = create_session(
        doc,
        tokenizer_options=tokenizer_options,
        fc_memory=fc_memory,
        user_store=user_store,
        session_id=data["session_id"],
    )
    try:
        events = [AnnotationEvent.from_dict(entry) for entry in data["events"]]
    except (KeyError, TypeError) as exc:
        raise SchemaViolation(f"bad event record: {exc}") from exc
    for event in events:
        session._append(event)
    session.verify_replay()
    return session
