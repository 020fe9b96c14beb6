"""Ranked name/QID candidates for identifiers and formulae.

Each source produces its own top-10 list; sources are never merged.
For evaluation runs the per-source columns can be shuffled and shown
under anonymous labels so that annotators cannot favour a source by
reputation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from .ingest import FcMemory, FormulaCatalog, IdentifierCatalog, RawDocument, UserInputStore
from .parsing import MathSegment, canonicalize_latex, extract_math_segments

CUTOFF = 10
FUZZY_THRESHOLD = 0.7

SOURCE_ARXIV = "arxiv"
SOURCE_WIKIPEDIA = "wikipedia"
SOURCE_WIKIDATA = "wikidata"
SOURCE_WORD_WINDOW = "word_window"
SOURCE_USER_INPUT = "user_input"
SOURCE_WIKIDATA_FUZZY = "wikidata_fuzzy"
SOURCE_WIKIDATA_PARTS = "wikidata_parts"
SOURCE_FC_MEMORY = "fc_memory"

# Fixed non-evaluation ordering; word window and user input close both
# the identifier and the formula listings.
CANONICAL_SOURCE_ORDER = (
    SOURCE_ARXIV,
    SOURCE_WIKIPEDIA,
    SOURCE_WIKIDATA,
    SOURCE_WIKIDATA_FUZZY,
    SOURCE_WIKIDATA_PARTS,
    SOURCE_FC_MEMORY,
    SOURCE_WORD_WINDOW,
    SOURCE_USER_INPUT,
)

SOURCE_DISPLAY_NAMES = {
    SOURCE_ARXIV: "arXiv",
    SOURCE_WIKIPEDIA: "Wikipedia",
    SOURCE_WIKIDATA: "Wikidata",
    SOURCE_WORD_WINDOW: "Word window",
    SOURCE_USER_INPUT: "User input",
    SOURCE_WIKIDATA_FUZZY: "Wikidata fuzzy",
    SOURCE_WIKIDATA_PARTS: "Wikidata parts",
    SOURCE_FC_MEMORY: "Formula Concept memory",
}


@dataclass(frozen=True)
class RecommendationCandidate:
    name: str
    qid: Optional[str]
    source: str
    rank: int  # 1-based position within its source list
    score: float  # similarity/overlap in [0, 1]; 1.0 for frequency-list entries


@dataclass(frozen=True)
class RecommendationSet:
    """Per-source candidate lists for one identifier or formula target."""

    target: Union[str, int]  # identifier symbol or segment_id
    per_source: Mapping[str, tuple[RecommendationCandidate, ...]]
    presentation: tuple[tuple[str, str], ...]  # (label, source) pairs

    def sources(self) -> tuple[str, ...]:
        return tuple(self.per_source)


# ---------------------------------------------------------------------------
# string similarity


def levenshtein(a: str, b: str) -> int:
    """Edit distance, two-row dynamic programming."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized edit-distance similarity: 1 - lev/max(len), in [0, 1]."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def _qid_sort_value(qid: Optional[str]) -> int:
    return int(qid[1:]) if qid else 10 ** 12


# ---------------------------------------------------------------------------
# per-source candidate lists


_WIKILINK_RE = re.compile(r"\[\[(?:[^\[\]|]*\|)?([^\[\]|]*)\]\]")
_TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}")
_REF_RE = re.compile(r"<ref[^>]*>.*?</ref>|<ref[^>]*/>", re.DOTALL | re.IGNORECASE)
_TAG_RE = re.compile(r"<[^>]+>")
_LATEX_CMD_RE = re.compile(r"\\[a-zA-Z]+")
_WORD_TRIM = ".,;:!?()[]{}<>\"'`|*#"


def _strip_markup(text: str, fmt: str) -> str:
    if fmt == "wikitext":
        text = _REF_RE.sub(" ", text)
        for _ in range(3):  # peel shallowly nested templates
            text, count = _TEMPLATE_RE.subn(" ", text)
            if not count:
                break
        text = _WIKILINK_RE.sub(r"\1", text)
        text = _TAG_RE.sub(" ", text)
        text = text.replace("'''", " ").replace("''", " ")
        text = text.replace("&nbsp;", " ")
    else:
        text = _LATEX_CMD_RE.sub(" ", text)
        text = text.replace("{", " ").replace("}", " ")
    return text


def _words_of(text: str, fmt: str) -> list[str]:
    words = []
    for chunk in _strip_markup(text, fmt).split():
        word = chunk.strip(_WORD_TRIM)
        if word and any(ch.isalnum() for ch in word):
            words.append(word)
    return words


def word_window(
    doc: RawDocument,
    segment: MathSegment,
    k: int = 5,
    segments: Optional[Sequence[MathSegment]] = None,
    cutoff: int = CUTOFF,
) -> list[RecommendationCandidate]:
    """The k words before and after a segment, nearest first.

    Other math regions are skipped, markup is stripped and punctuation
    trimmed.  Candidates carry no QID; at equal distance the
    before-side word ranks ahead of the after-side one.
    """
    if segments is None:
        segments = extract_math_segments(doc)

    def blank_math(text: str, offset: int) -> str:
        for other in segments:
            start, end = other.span
            start, end = start - offset, end - offset
            if 0 <= start and end <= len(text):
                text = text[:start] + " " * (end - start) + text[end:]
        return text

    before_text = blank_math(doc.body[: segment.span[0]], 0)
    after_text = blank_math(doc.body[segment.span[1]:], segment.span[1])
    before = _words_of(before_text, doc.format)[-k:][::-1]  # nearest first
    after = _words_of(after_text, doc.format)[:k]

    ordered: list[tuple[str, int]] = []
    for distance in range(1, k + 1):
        if distance <= len(before):
            ordered.append((before[distance - 1], distance))
        if distance <= len(after):
            ordered.append((after[distance - 1], distance))

    candidates = []
    seen = set()
    for word, distance in ordered:
        if word in seen:
            continue
        seen.add(word)
        candidates.append(
            RecommendationCandidate(
                name=word,
                qid=None,
                source=SOURCE_WORD_WINDOW,
                rank=len(candidates) + 1,
                score=1.0 / distance,
            )
        )
        if len(candidates) >= cutoff:
            break
    return candidates


def _catalog_candidates(
    catalog: IdentifierCatalog, symbol: str, cutoff: int
) -> list[RecommendationCandidate]:
    rows = catalog.candidates(symbol)[:cutoff]
    return [
        RecommendationCandidate(
            name=row.name,
            qid=row.qid,
            source=catalog.source_kind,
            rank=position,
            score=1.0,
        )
        for position, row in enumerate(rows, 1)
    ]


def fuzzy_match(
    raw_latex: str,
    catalog: FormulaCatalog,
    threshold: float = FUZZY_THRESHOLD,
    cutoff: int = CUTOFF,
) -> list[RecommendationCandidate]:
    """Formula items whose defining formula is close to the query.

    Similarity is normalized edit distance over canonical forms; ties
    break by ascending numeric QID.
    """
    query = canonicalize_latex(raw_latex)
    scored = []
    for item in catalog.items:
        if item.defining_formula is None:
            continue
        score = similarity(query, canonicalize_latex(item.defining_formula))
        if score >= threshold:
            scored.append((score, item))
    scored.sort(key=lambda pair: (-pair[0], _qid_sort_value(pair[1].qid), pair[1].name))
    return [
        RecommendationCandidate(
            name=item.name,
            qid=item.qid,
            source=SOURCE_WIKIDATA_FUZZY,
            rank=position,
            score=score,
        )
        for position, (score, item) in enumerate(scored[:cutoff], 1)
    ]


def parts_overlap(
    annotated_identifier_qids: Iterable[str],
    catalog: FormulaCatalog,
    cutoff: int = CUTOFF,
) -> list[RecommendationCandidate]:
    """Formula items sharing constituent-identifier QIDs with the annotations.

    Score is |intersection| / |item parts|, so fully-explained formulae
    rank first; larger intersections break ties, then ascending QID.
    """
    annotated = set(annotated_identifier_qids)
    scored = []
    for item in catalog.items:
        common = annotated & item.has_part_qids
        if not common:
            continue
        scored.append((len(common) / len(item.has_part_qids), len(common), item))
    scored.sort(
        key=lambda row: (-row[0], -row[1], _qid_sort_value(row[2].qid), row[2].name)
    )
    return [
        RecommendationCandidate(
            name=item.name,
            qid=item.qid,
            source=SOURCE_WIKIDATA_PARTS,
            rank=position,
            score=score,
        )
        for position, (score, _, item) in enumerate(scored[:cutoff], 1)
    ]


def fc_memory_lookup(
    raw_latex: str,
    memory: FcMemory,
    threshold: float = FUZZY_THRESHOLD,
    cutoff: int = CUTOFF,
) -> list[RecommendationCandidate]:
    """Concepts whose stored variants match the query, one candidate each."""
    query = canonicalize_latex(raw_latex)
    scored = []
    for name, qid in memory.concepts():
        best = 0.0
        for canonical in memory.canonical_variants(name, qid):
            best = max(best, similarity(query, canonical))
        if best >= threshold:
            scored.append((best, name, qid))
    scored.sort(key=lambda row: (-row[0], _qid_sort_value(row[2]), row[1]))
    return [
        RecommendationCandidate(
            name=name,
            qid=qid,
            source=SOURCE_FC_MEMORY,
            rank=position,
            score=score,
        )
        for position, (score, name, qid) in enumerate(scored[:cutoff], 1)
    ]


# ---------------------------------------------------------------------------
# assembled recommendation sets


def _as_catalog_map(
    catalogs: Union[Mapping[str, IdentifierCatalog], Iterable[IdentifierCatalog], None]
) -> dict[str, IdentifierCatalog]:
    if catalogs is None:
        return {}
    if isinstance(catalogs, Mapping):
        return dict(catalogs)
    return {catalog.source_kind: catalog for catalog in catalogs}


def _build_set(target, lists: dict[str, list[RecommendationCandidate]]) -> RecommendationSet:
    per_source = {
        source: tuple(candidates)
        for source in CANONICAL_SOURCE_ORDER
        for candidates in [lists.get(source, [])]
        if candidates
    }
    presentation = tuple(
        (SOURCE_DISPLAY_NAMES[source], source) for source in per_source
    )
    return RecommendationSet(target=target, per_source=per_source, presentation=presentation)


def recommend_identifier(
    symbol: str,
    doc: RawDocument,
    segment: MathSegment,
    catalogs: Union[Mapping[str, IdentifierCatalog], Iterable[IdentifierCatalog], None],
    user_store: Optional[UserInputStore] = None,
    *,
    k: int = 5,
    cutoff: int = CUTOFF,
    segments: Optional[Sequence[MathSegment]] = None,
) -> RecommendationSet:
    """Assemble the identifier sources for one symbol; empty sources omitted."""
    catalog_map = _as_catalog_map(catalogs)
    lists: dict[str, list[RecommendationCandidate]] = {}
    for kind in (SOURCE_ARXIV, SOURCE_WIKIPEDIA, SOURCE_WIKIDATA):
        catalog = catalog_map.get(kind)
        if catalog is not None:
            lists[kind] = _catalog_candidates(catalog, symbol, cutoff)
    lists[SOURCE_WORD_WINDOW] = word_window(doc, segment, k, segments=segments, cutoff=cutoff)
    if user_store is not None:
        lists[SOURCE_USER_INPUT] = [
            RecommendationCandidate(
                name=name, qid=qid, source=SOURCE_USER_INPUT, rank=position, score=1.0
            )
            for position, (name, qid) in enumerate(
                user_store.identifier_candidates(symbol)[:cutoff], 1
            )
        ]
    return _build_set(symbol, lists)


def recommend_formula(
    segment: MathSegment,
    doc: RawDocument,
    catalog: Optional[FormulaCatalog],
    memory: Optional[FcMemory],
    session=None,
    *,
    threshold: float = FUZZY_THRESHOLD,
    k: int = 5,
    cutoff: int = CUTOFF,
    segments: Optional[Sequence[MathSegment]] = None,
) -> RecommendationSet:
    """Assemble the formula sources for one segment.

    The parts-overlap source only appears once at least one identifier
    of the segment carries a QID annotation in the session.
    """
    lists: dict[str, list[RecommendationCandidate]] = {}
    if catalog is not None:
        lists[SOURCE_WIKIDATA_FUZZY] = fuzzy_match(
            segment.raw_latex, catalog, threshold, cutoff
        )
        if session is not None:
            annotated_qids = session.annotated_identifier_qids(segment.segment_id)
            if annotated_qids:
                lists[SOURCE_WIKIDATA_PARTS] = parts_overlap(annotated_qids, catalog, cutoff)
    if memory is not None:
        lists[SOURCE_FC_MEMORY] = fc_memory_lookup(segment.raw_latex, memory, threshold, cutoff)
    lists[SOURCE_WORD_WINDOW] = word_window(doc, segment, k, segments=segments, cutoff=cutoff)
    user_store = getattr(session, "user_store", None)
    if user_store is not None:
        lists[SOURCE_USER_INPUT] = [
            RecommendationCandidate(
                name=name, qid=qid, source=SOURCE_USER_INPUT, rank=position, score=1.0
            )
            for position, (name, qid) in enumerate(user_store.formula_candidates()[:cutoff], 1)
        ]
    return _build_set(segment.segment_id, lists)


def presentation_order(
    rec_set: RecommendationSet, rng_seed: int, eval_mode: bool
) -> RecommendationSet:
    """Fix the on-screen column order.

    In evaluation mode the non-empty sources are shuffled
    seed-deterministically and labelled "Source A", "Source B", ...;
    otherwise they keep the fixed ordering and their real names.
    """
    sources = [s for s in CANONICAL_SOURCE_ORDER if s in rec_set.per_source]
    if eval_mode:
        rng = random.Random(rng_seed)
        rng.shuffle(sources)
        presentation = tuple(
            (f"Source {chr(ord('A') + position)}", source)
            for position, source in enumerate(sources)
        )
    else:
        presentation = tuple((SOURCE_DISPLAY_NAMES[s], s) for s in sources)
    return replace(rec_set, presentation=presentation)
