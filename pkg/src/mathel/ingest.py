"""Loading of documents and recommendation-source datasets.

Catalogs are immutable after construction and safe to share across
threads.  The two mutable stores (formula-concept memory and the
user-input store) accumulate annotation history and are owned by the
session layer, which serializes writes.

File formats:

* identifier catalog: TSV ``symbol<TAB>name<TAB>qid-or-empty<TAB>rank``,
  UTF-8, ``#`` comment lines;
* formula catalog: JSON array of
  ``{qid, name, defining_formula, has_part: [qid, ...]}``;
* formula-concept memory: JSON array of ``{name, qid, variants: [latex, ...]}``;
* user-input store: JSON object with per-symbol and per-formula name counts.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping, NamedTuple, Optional
from urllib.parse import quote

import requests

from .errors import (
    DuplicateQid,
    FileMissing,
    InvalidQid,
    NetworkError,
    NotFound,
    RateLimited,
    SchemaViolation,
)
from .parsing import canonicalize_latex

QID_RE = re.compile(r"Q[0-9]+\Z")

IDENTIFIER_SOURCE_KINDS = ("arxiv", "wikipedia", "wikidata", "user_input")

WIKI_BASE_URL_ENV = "MATHEL_WIKI_BASE_URL"


@dataclass(frozen=True)
class RawDocument:
    title: str
    body: str
    format: str  # "wikitext" | "latex"
    retrieved_at: datetime
    origin: str  # "file" | "remote"

    def __post_init__(self):
        if not self.body:
            raise ValueError("document body must be non-empty")
        if self.format not in ("wikitext", "latex"):
            raise ValueError(f"unknown document format: {self.format!r}")


class IdentifierCandidate(NamedTuple):
    name: str
    qid: Optional[str]
    frequency_rank: int


@dataclass(frozen=True)
class IdentifierCatalog:
    """Per-symbol candidate lists, rank-ordered, read-only."""

    source_kind: str
    entries: Mapping[str, tuple[IdentifierCandidate, ...]]

    def candidates(self, symbol: str) -> tuple[IdentifierCandidate, ...]:
        return self.entries.get(symbol, ())

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class FormulaItem:
    qid: str
    name: str
    defining_formula: Optional[str]
    has_part_qids: frozenset[str]


@dataclass(frozen=True)
class FormulaCatalog:
    items: tuple[FormulaItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def get(self, qid: str) -> Optional[FormulaItem]:
        return self._by_qid().get(qid)

    def __contains__(self, qid: str) -> bool:
        return qid in self._by_qid()

    def _by_qid(self) -> dict[str, FormulaItem]:
        cached = getattr(self, "_qid_index", None)
        if cached is None:
            cached = {item.qid: item for item in self.items}
            object.__setattr__(self, "_qid_index", cached)
        return cached


class FcMemory:
    """Formula-concept memory: LaTeX variants collected per (name, qid).

    Variants are deduplicated by canonical form, so re-adding an
    equivalent spelling is a no-op.
    """

    def __init__(self):
        # (name, qid) -> {canonical form -> raw variant as first seen}
        self._concepts: dict[tuple[str, Optional[str]], dict[str, str]] = {}

    def add_variant(self, name: str, qid: Optional[str], latex: str) -> bool:
        """Record a variant; returns True when it was new."""
        canonical = canonicalize_latex(latex)
        bucket = self._concepts.setdefault((name, qid), {})
        if canonical in bucket:
            return False
        bucket[canonical] = latex
        return True

    def variants(self, name: str, qid: Optional[str]) -> tuple[str, ...]:
        return tuple(self._concepts.get((name, qid), {}).values())

    def variation_count(self, name: str, qid: Optional[str]) -> int:
        return len(self._concepts.get((name, qid), {}))

    def concepts(self) -> Iterator[tuple[str, Optional[str]]]:
        return iter(self._concepts)

    def canonical_variants(self, name: str, qid: Optional[str]) -> tuple[str, ...]:
        return tuple(self._concepts.get((name, qid), {}).keys())

    def __len__(self) -> int:
        return len(self._concepts)

    def __contains__(self, key: tuple[str, Optional[str]]) -> bool:
        return key in self._concepts

    def __eq__(self, other) -> bool:
        if not isinstance(other, FcMemory):
            return NotImplemented
        return self._concepts == other._concepts


class UserInputStore:
    """Names previously typed in manually, reused as a recommendation source.

    Candidates are ordered by how often they were entered, first use
    breaking ties.
    """

    def __init__(self):
        # symbol -> {(name, qid) -> count}, insertion ordered
        self._identifier_names: dict[str, dict[tuple[str, Optional[str]], int]] = {}
        # (name, qid) -> count for whole formulae
        self._formula_names: dict[tuple[str, Optional[str]], int] = {}

    def record_identifier(self, symbol: str, name: str, qid: Optional[str] = None) -> None:
        bucket = self._identifier_names.setdefault(symbol, {})
        bucket[(name, qid)] = bucket.get((name, qid), 0) + 1

    def record_formula(self, name: str, qid: Optional[str] = None) -> None:
        self._formula_names[(name, qid)] = self._formula_names.get((name, qid), 0) + 1

    def identifier_candidates(self, symbol: str) -> list[tuple[str, Optional[str]]]:
        bucket = self._identifier_names.get(symbol, {})
        order = {key: pos for pos, key in enumerate(bucket)}
        return sorted(bucket, key=lambda key: (-bucket[key], order[key]))

    def formula_candidates(self) -> list[tuple[str, Optional[str]]]:
        order = {key: pos for pos, key in enumerate(self._formula_names)}
        return sorted(self._formula_names, key=lambda key: (-self._formula_names[key], order[key]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, UserInputStore):
            return NotImplemented
        return (
            self._identifier_names == other._identifier_names
            and self._formula_names == other._formula_names
        )


# ---------------------------------------------------------------------------
# loaders


def load_identifier_catalog(path, source_kind: str) -> IdentifierCatalog:
    """Load a rank-ordered identifier candidate list from a TSV file.

    Duplicate (symbol, name) rows collapse to their best rank; two
    different names claiming the same rank for one symbol violate the
    strict per-symbol ordering and are rejected.
    """
    if source_kind not in IDENTIFIER_SOURCE_KINDS:
        raise ValueError(f"unknown identifier source kind: {source_kind!r}")
    path = Path(path)
    if not path.exists():
        raise FileMissing(path)

    # (symbol, name) -> (best rank, qid at best rank, line_no)
    best: dict[tuple[str, str], tuple[int, Optional[str], int]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise SchemaViolation(
                    f"expected 4 tab-separated fields, got {len(fields)}", line_no
                )
            symbol, name, qid, rank_text = fields
            if not symbol or not name:
                raise SchemaViolation("symbol and name must be non-empty", line_no)
            qid = qid.strip() or None
            if qid is not None and not QID_RE.match(qid):
                raise InvalidQid(qid, line_no)
            try:
                rank = int(rank_text)
            except ValueError:
                raise SchemaViolation(f"rank is not an integer: {rank_text!r}", line_no)
            if rank < 1:
                raise SchemaViolation(f"rank must be positive, got {rank}", line_no)
            key = (symbol, name)
            if key not in best or rank < best[key][0]:
                best[key] = (rank, qid, line_no)

    per_symbol: dict[str, list[tuple[int, str, Optional[str], int]]] = {}
    for (symbol, name), (rank, qid, line_no) in best.items():
        per_symbol.setdefault(symbol, []).append((rank, name, qid, line_no))

    entries: dict[str, tuple[IdentifierCandidate, ...]] = {}
    for symbol in sorted(per_symbol):
        rows = sorted(per_symbol[symbol])
        for (rank_a, _, _, _), (rank_b, _, _, line_no) in zip(rows, rows[1:]):
            if rank_a == rank_b:
                raise SchemaViolation(
                    f"duplicate rank {rank_b} for symbol {symbol!r}", line_no
                )
        entries[symbol] = tuple(
            IdentifierCandidate(name=name, qid=qid, frequency_rank=rank)
            for rank, name, qid, _ in rows
        )
    return IdentifierCatalog(source_kind=source_kind, entries=MappingProxyType(entries))


def load_formula_catalog(path) -> FormulaCatalog:
    """Load formula items (name, QID, defining formula, parts) from JSON."""
    path = Path(path)
    if not path.exists():
        raise FileMissing(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise SchemaViolation("formula catalog must be a JSON array")

    items: list[FormulaItem] = []
    seen: set[str] = set()
    for idx, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise SchemaViolation(f"item {idx}: expected an object")
        qid = entry.get("qid")
        name = entry.get("name")
        if not isinstance(qid, str) or not QID_RE.match(qid):
            raise InvalidQid(qid)
        if not isinstance(name, str) or not name:
            raise SchemaViolation(f"item {qid}: name must be a non-empty string")
        if qid in seen:
            raise DuplicateQid(qid)
        seen.add(qid)
        formula = entry.get("defining_formula") or None
        if formula is not None and not isinstance(formula, str):
            raise SchemaViolation(f"item {qid}: defining_formula must be a string")
        parts_raw = entry.get("has_part", [])
        if not isinstance(parts_raw, list):
            raise SchemaViolation(f"item {qid}: has_part must be an array")
        parts = set()
        for part in parts_raw:
            if not isinstance(part, str) or not QID_RE.match(part):
                raise InvalidQid(part)
            parts.add(part)
        items.append(
            FormulaItem(
                qid=qid,
                name=name,
                defining_formula=formula,
                has_part_qids=frozenset(parts),
            )
        )
    return FormulaCatalog(items=tuple(items))


def load_fc_memory(path) -> FcMemory:
    path = Path(path)
    if not path.exists():
        raise FileMissing(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise SchemaViolation("formula-concept memory must be a JSON array")
    memory = FcMemory()
    for idx, entry in enumerate(data):
        if not isinstance(entry, dict) or "name" not in entry or "variants" not in entry:
            raise SchemaViolation(f"concept {idx}: expected {{name, qid, variants}}")
        name = entry["name"]
        qid = entry.get("qid")
        variants = entry["variants"]
        if not isinstance(name, str) or not name:
            raise SchemaViolation(f"concept {idx}: name must be a non-empty string")
        if qid is not None and (not isinstance(qid, str) or not QID_RE.match(qid)):
            raise InvalidQid(qid)
        if not isinstance(variants, list):
            raise SchemaViolation(f"concept {idx}: variants must be an array")
        for variant in variants:
            if not isinstance(variant, str):
                raise SchemaViolation(f"concept {idx}: variants must be strings")
            memory.add_variant(name, qid, variant)
    return memory


def save_fc_memory(memory: FcMemory, path) -> None:
    data = [
        {"name": name, "qid": qid, "variants": list(memory.variants(name, qid))}
        for name, qid in memory.concepts()
    ]
    _atomic_write_json(path, data)


def load_user_input_store(path) -> UserInputStore:
    path = Path(path)
    if not path.exists():
        raise FileMissing(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation("user-input store must be a JSON object")
    store = UserInputStore()
    for symbol, rows in data.get("identifiers", {}).items():
        for row in rows:
            for _ in range(int(row.get("count", 1))):
                store.record_identifier(symbol, row["name"], row.get("qid"))
    for row in data.get("formulas", []):
        for _ in range(int(row.get("count", 1))):
            store.record_formula(row["name"], row.get("qid"))
    return store


def save_user_input_store(store: UserInputStore, path) -> None:
    data = {
        "identifiers": {
            symbol: [
                {"name": name, "qid": qid, "count": count}
                for (name, qid), count in bucket.items()
            ]
            for symbol, bucket in store._identifier_names.items()
        },
        "formulas": [
            {"name": name, "qid": qid, "count": count}
            for (name, qid), count in store._formula_names.items()
        ],
    }
    _atomic_write_json(path, data)


def _atomic_write_json(path, data) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# article fetching


def fetch_article(
    title: str,
    endpoint: Optional[str] = None,
    *,
    max_retries: int = 2,
    timeout: float = 10.0,
) -> RawDocument:
    """Fetch an article body from a file path or a raw-wikitext endpoint.

    ``endpoint`` may be a local file (``.tex`` files load as LaTeX,
    anything else as Wikitext) or an HTTP(S) URL; a ``{title}``
    placeholder in the URL is substituted, otherwise
    ``/<title>?action=raw`` is appended.  When omitted, the
    ``MATHEL_WIKI_BASE_URL`` environment variable supplies the base URL.
    """
    if endpoint is None:
        endpoint = os.environ.get(WIKI_BASE_URL_ENV)
        if not endpoint:
            raise ValueError(
                f"no endpoint given and {WIKI_BASE_URL_ENV} is not set"
            )

    if not str(endpoint).startswith(("http://", "https://")):
        path = Path(endpoint)
        if not path.exists():
            raise FileMissing(path)
        body = path.read_text(encoding="utf-8")
        fmt = "latex" if path.suffix.lower() == ".tex" else "wikitext"
        return RawDocument(
            title=title,
            body=body,
            format=fmt,
            retrieved_at=datetime.now(timezone.utc),
            origin="file",
        )

    if "{title}" in endpoint:
        url = endpoint.format(title=quote(title, safe=""))
    else:
        url = f"{endpoint.rstrip('/')}/{quote(title, safe='')}?action=raw"

    attempts = 0
    while True:
        try:
            response = requests.get(url, timeout=timeout)
        except requests.RequestException as exc:
            raise NetworkError(f"GET {url} failed: {exc}") from exc
        if response.status_code == 404:
            raise NotFound(title)
        if response.status_code == 429:
            retry_after = response.headers.get("Retry-After")
            if attempts >= max_retries:
                raise RateLimited(retry_after)
            attempts += 1
            try:
                time.sleep(min(float(retry_after), 30.0) if retry_after else 0.5)
            except ValueError:
                time.sleep(0.5)
            continue
        if response.status_code >= 400:
            raise NetworkError(f"GET {url} returned HTTP {response.status_code}")
        return RawDocument(
            title=title,
            body=response.text,
            format="wikitext",
            retrieved_at=datetime.now(timezone.utc),
            origin="remote",
        )
