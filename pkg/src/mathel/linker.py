"""Transfer of session annotations into qid-linked Wikitext, plus the
knowledge-base seeding list.

Link insertion only touches opening ``<math ...>`` tags of annotated
equations; every byte outside those tags is preserved, so stripping the
inserted attributes reproduces the input exactly.  A QID is emitted at
most once per document (first occurrence wins), and segments that
already carry a ``qid`` attribute are authoritative and left alone.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import MalformedTag, QidFormatError
from .ingest import FcMemory, FormulaCatalog, QID_RE, RawDocument
from .parsing import MathSegment, TokenizerOptions, tokenize_formula
from .session import SessionState

PROPERTY_HAS_PART = "has_part"
PROPERTY_CALCULATED_FROM = "calculated_from"

_PROPERTY_SHORT = {PROPERTY_HAS_PART: "hp", PROPERTY_CALCULATED_FROM: "cf"}

CONTRIBUTION_ORDER = ("i", "f", "p")  # item, formula, parts


@dataclass(frozen=True)
class LinkStats:
    candidates: int
    skipped_duplicates: int
    linked: int
    skipped_non_equation: int

    def __post_init__(self):
        if min(self.candidates, self.skipped_duplicates, self.linked, self.skipped_non_equation) < 0:
            raise ValueError("link statistics must be non-negative")
        if self.linked + self.skipped_duplicates != self.candidates:
            raise ValueError("linked + skipped_duplicates must equal candidates")

    def __add__(self, other: "LinkStats") -> "LinkStats":
        return LinkStats(
            self.candidates + other.candidates,
            self.skipped_duplicates + other.skipped_duplicates,
            self.linked + other.linked,
            self.skipped_non_equation + other.skipped_non_equation,
        )


@dataclass(frozen=True)
class SeedEntry:
    """One row of the knowledge-base seeding list."""

    name: str
    qid: str
    contribution: tuple[str, ...]  # subset of ("i", "f", "p")
    fc_variations: int
    identifier_property: str = PROPERTY_HAS_PART

    def contribution_text(self) -> str:
        return "/".join(flag for flag in CONTRIBUTION_ORDER if flag in self.contribution)

    def property_text(self) -> str:
        return _PROPERTY_SHORT[self.identifier_property]


def insert_qid_links(
    doc: RawDocument,
    segments: Iterable[MathSegment],
    formula_annotations: Mapping[int, str],
    *,
    quote_attrs: bool = False,
    block_only: bool = False,
    tokenizer_options: Optional[TokenizerOptions] = None,
) -> tuple[str, LinkStats]:
    """Insert ``qid=QNNN`` attributes for annotated equations.

    Only equations (top-level ``=``) are eligible; with ``block_only``
    inline equations are skipped as well.  Returns the edited Wikitext
    and the candidate/skip/link counts.
    """
    if doc.format != "wikitext":
        raise ValueError("qid link insertion operates on wikitext documents")

    segments = list(segments)
    seen_qids = {s.existing_qid for s in segments if s.existing_qid}
    insertions: list[tuple[int, str]] = []
    candidates = linked = skipped_duplicates = skipped_non_equation = 0

    for segment in segments:
        qid = formula_annotations.get(segment.segment_id)
        if qid is None:
            continue
        if not QID_RE.match(qid or ""):
            raise QidFormatError(qid)
        if segment.existing_qid:
            continue  # live markup wins; not a candidate
        formula = tokenize_formula(segment.raw_latex, tokenizer_options, segment.segment_id)
        if not formula.is_equation or (block_only and segment.display != "block"):
            skipped_non_equation += 1
            continue
        candidates += 1
        if qid in seen_qids:
            skipped_duplicates += 1
            continue
        seen_qids.add(qid)
        start, end = segment.span
        tag_close = doc.body.find(">", start, end)
        if tag_close == -1:
            raise MalformedTag(segment.segment_id, "no closing '>' in opening tag")
        attr = f' qid="{qid}"' if quote_attrs else f" qid={qid}"
        insertions.append((tag_close, attr))
        linked += 1

    pieces = []
    cursor = 0
    for offset, attr in insertions:
        pieces.append(doc.body[cursor:offset])
        pieces.append(attr)
        cursor = offset
    pieces.append(doc.body[cursor:])
    stats = LinkStats(
        candidates=candidates,
        skipped_duplicates=skipped_duplicates,
        linked=linked,
        skipped_non_equation=skipped_non_equation,
    )
    return "".join(pieces), stats


def seeding_list(
    sessions: Iterable[SessionState],
    catalog: FormulaCatalog,
    memory: FcMemory,
) -> list[SeedEntry]:
    """Concepts whose knowledge-base items need creation or completion.

    Per annotated formula concept: ``i`` when the item is missing from
    the catalog, ``f`` when it lacks a defining formula, ``p`` when some
    annotated constituent-identifier QID is absent from its parts.
    Fully covered concepts are omitted.
    """
    # (name, qid) -> union of identifier QIDs annotated in the concept's segments
    concept_parts: dict[tuple[str, str], set[str]] = {}
    for session in sessions:
        for annotation in session.effective_annotations():
            if annotation.target.kind != "formula" or not annotation.qid:
                continue
            key = (annotation.name, annotation.qid)
            parts = concept_parts.setdefault(key, set())
            parts.update(session.annotated_identifier_qids(annotation.target.segment_id))

    entries = []
    for (name, qid), annotated_parts in concept_parts.items():
        item = catalog.get(qid)
        contribution = []
        if item is None:
            contribution.append("i")
        if item is None or not item.defining_formula:
            contribution.append("f")
        known_parts = item.has_part_qids if item is not None else frozenset()
        if annotated_parts - known_parts:
            contribution.append("p")
        if not contribution:
            continue
        entries.append(
            SeedEntry(
                name=name,
                qid=qid,
                contribution=tuple(contribution),
                fc_variations=memory.variation_count(name, qid),
            )
        )
    entries.sort(key=lambda entry: (entry.name.lower(), entry.qid))
    return entries


def write_seeding_list(entries: Iterable[SeedEntry], path) -> None:
    """Write the seeding list as TSV (name, qid, contribution, variations, property)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# name\tqid\tcontribution\tfc_variations\tidentifier_property\n")
        for entry in entries:
            fh.write(
                f"{entry.name}\t{entry.qid}\t{entry.contribution_text()}"
                f"\t{entry.fc_variations}\t{entry.property_text()}\n"
            )


# ---------------------------------------------------------------------------
# annotation exports

EXPORT_COLUMNS = ("target", "kind", "name", "qid", "mode", "source", "position", "elapsed_ms")


def _export_rows(session: SessionState) -> list[dict]:
    by_key = {a.target.to_key_string(): a for a in session.effective_annotations()}
    rows = []
    for table_row in session.annotation_table():
        annotation = by_key[table_row.target_key]
        rows.append(
            {
                "target": annotation.target.to_key_string(),
                "kind": annotation.target.kind,
                "name": annotation.name,
                "qid": annotation.qid,
                "mode": annotation.mode,
                "source": annotation.source,
                "position": annotation.position,
                "elapsed_ms": annotation.elapsed_ms,
            }
        )
    return rows


def export_annotations(session: SessionState, format: str, path) -> None:
    """Write the effective annotations as CSV or JSON, stable column order."""
    rows = _export_rows(session)
    path = Path(path)
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=EXPORT_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    else:
        raise ValueError(f"unknown export format: {format!r}")


def load_exported_annotations(path) -> list[dict]:
    """Read back an annotation export (by extension), for round-trips."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    with open(path, encoding="utf-8", newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]
