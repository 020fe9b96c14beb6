from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from mathel.errors import (
    DuplicateQid,
    FileMissing,
    InvalidQid,
    NotFound,
    RateLimited,
    SchemaViolation,
)
from mathel.ingest import (
    FcMemory,
    UserInputStore,
    fetch_article,
    load_fc_memory,
    load_formula_catalog,
    load_identifier_catalog,
    load_user_input_store,
    save_fc_memory,
    save_user_input_store,
)


# ---------------------------------------------------------------------------
# identifier catalog


def test_basic_row_loads_with_rank_one(fixtures_dir):
    catalog = load_identifier_catalog(fixtures_dir / "identifiers_arxiv.tsv", "arxiv")
    top = catalog.candidates("m")[0]
    assert top.name == "mass"
    assert top.qid == "Q11423"
    assert top.frequency_rank == 1


def test_empty_file_gives_empty_catalog(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("", encoding="utf-8")
    catalog = load_identifier_catalog(path, "wikipedia")
    assert len(catalog) == 0
    assert catalog.candidates("m") == ()


def test_rows_sort_by_rank_regardless_of_file_order(tmp_path):
    path = tmp_path / "shuffled.tsv"
    path.write_text(
        "x\tsecond\t\t2\nx\tfirst\tQ1\t1\nx\tthird\t\t3\n", encoding="utf-8"
    )
    catalog = load_identifier_catalog(path, "arxiv")
    # brute-force sort of the same rows is the oracle
    rows = [("second", 2), ("first", 1), ("third", 3)]
    expected = [name for name, _ in sorted(rows, key=lambda r: r[1])]
    assert [c.name for c in catalog.candidates("x")] == expected


def test_duplicate_symbol_name_rows_keep_best_rank(tmp_path):
    path = tmp_path / "dups.tsv"
    path.write_text("m\tmass\tQ11423\t4\nm\tmass\tQ11423\t2\n", encoding="utf-8")
    catalog = load_identifier_catalog(path, "arxiv")
    assert [c.frequency_rank for c in catalog.candidates("m")] == [2]


def test_conflicting_rank_for_different_names_is_rejected(tmp_path):
    path = tmp_path / "conflict.tsv"
    path.write_text("m\tmass\t\t1\nm\tmeter\t\t1\n", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        load_identifier_catalog(path, "arxiv")


def test_comment_and_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "comments.tsv"
    path.write_text("# header\n\nm\tmass\t\t1\n", encoding="utf-8")
    catalog = load_identifier_catalog(path, "arxiv")
    assert len(catalog) == 1


def test_bad_field_count_reports_line_number(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("m\tmass\t\t1\nm\tmass\n", encoding="utf-8")
    with pytest.raises(SchemaViolation) as excinfo:
        load_identifier_catalog(path, "arxiv")
    assert excinfo.value.line_no == 2


def test_invalid_qid_reports_line_number(tmp_path):
    path = tmp_path / "badqid.tsv"
    path.write_text("m\tmass\tX123\t1\n", encoding="utf-8")
    with pytest.raises(InvalidQid) as excinfo:
        load_identifier_catalog(path, "arxiv")
    assert excinfo.value.line_no == 1


def test_non_positive_rank_is_rejected(tmp_path):
    path = tmp_path / "rank0.tsv"
    path.write_text("m\tmass\t\t0\n", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        load_identifier_catalog(path, "arxiv")


def test_missing_file_raises_file_missing(tmp_path):
    with pytest.raises(FileMissing):
        load_identifier_catalog(tmp_path / "nope.tsv", "arxiv")


def test_catalog_loading_is_deterministic(fixtures_dir):
    path = fixtures_dir / "identifiers_arxiv.tsv"
    first = load_identifier_catalog(path, "arxiv")
    second = load_identifier_catalog(path, "arxiv")
    assert first == second
    assert list(first.entries) == list(second.entries)


def test_catalog_entries_are_read_only(fixtures_dir):
    catalog = load_identifier_catalog(fixtures_dir / "identifiers_arxiv.tsv", "arxiv")
    with pytest.raises(TypeError):
        catalog.entries["m"] = ()


def test_unknown_source_kind_is_rejected(fixtures_dir):
    with pytest.raises(ValueError):
        load_identifier_catalog(fixtures_dir / "identifiers_arxiv.tsv", "sparql")


# ---------------------------------------------------------------------------
# formula catalog


def test_formula_item_loads_intact(fixtures_dir):
    catalog = load_formula_catalog(fixtures_dir / "formula_catalog.json")
    item = catalog.get("Q35875")
    assert item.name == "mass–energy equivalence"
    assert item.defining_formula == "E=mc^2"
    assert item.has_part_qids == frozenset({"Q11379", "Q11423", "Q2111"})


def test_empty_has_part_loads_as_empty_set(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(
        json.dumps([{"qid": "Q1", "name": "thing", "defining_formula": "x=1", "has_part": []}]),
        encoding="utf-8",
    )
    catalog = load_formula_catalog(path)
    assert catalog.get("Q1").has_part_qids == frozenset()


def test_two_items_may_share_a_defining_formula(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(
        json.dumps(
            [
                {"qid": "Q1", "name": "a", "defining_formula": "x=y", "has_part": []},
                {"qid": "Q2", "name": "b", "defining_formula": "x=y", "has_part": []},
            ]
        ),
        encoding="utf-8",
    )
    catalog = load_formula_catalog(path)
    assert len(catalog) == 2


def test_duplicate_qid_is_rejected(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(
        json.dumps(
            [
                {"qid": "Q1", "name": "a", "defining_formula": "x=y"},
                {"qid": "Q1", "name": "b", "defining_formula": "x=z"},
            ]
        ),
        encoding="utf-8",
    )
    with pytest.raises(DuplicateQid):
        load_formula_catalog(path)


def test_missing_formula_field_loads_as_none(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps([{"qid": "Q9", "name": "bare item"}]), encoding="utf-8")
    assert load_formula_catalog(path).get("Q9").defining_formula is None


def test_bad_part_qid_is_rejected(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(
        json.dumps([{"qid": "Q1", "name": "a", "has_part": ["notaqid"]}]),
        encoding="utf-8",
    )
    with pytest.raises(InvalidQid):
        load_formula_catalog(path)


# ---------------------------------------------------------------------------
# formula-concept memory


def test_fc_memory_round_trips(fixtures_dir, tmp_path):
    memory = load_fc_memory(fixtures_dir / "fc_memory.json")
    assert set(memory.variants("mass–energy equivalence", "Q35875")) == {
        "E=mc^2",
        "m=E/c^2",
    }
    out = tmp_path / "memory.json"
    save_fc_memory(memory, out)
    assert load_fc_memory(out) == memory


def test_empty_memory_round_trips(tmp_path):
    memory = FcMemory()
    out = tmp_path / "memory.json"
    save_fc_memory(memory, out)
    assert load_fc_memory(out) == memory
    assert len(load_fc_memory(out)) == 0


def test_adding_duplicate_variant_is_idempotent():
    memory = FcMemory()
    assert memory.add_variant("momentum", "Q38143", "p=mv")
    assert not memory.add_variant("momentum", "Q38143", "p=mv")
    # equivalent spelling canonicalizes to the same form
    assert not memory.add_variant("momentum", "Q38143", "p = m\\,v")
    assert memory.variation_count("momentum", "Q38143") == 1


def test_memory_save_then_load_twice_is_stable(fixtures_dir, tmp_path):
    memory = load_fc_memory(fixtures_dir / "fc_memory.json")
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_fc_memory(memory, first)
    save_fc_memory(load_fc_memory(first), second)
    assert first.read_bytes() == second.read_bytes()


# ---------------------------------------------------------------------------
# user-input store


def test_user_store_orders_by_count_then_first_use(tmp_path):
    store = UserInputStore()
    store.record_identifier("m", "mass", "Q11423")
    store.record_identifier("m", "meter", None)
    store.record_identifier("m", "meter", None)
    assert store.identifier_candidates("m") == [("meter", None), ("mass", "Q11423")]
    store.record_formula("momentum", "Q38143")
    out = tmp_path / "store.json"
    save_user_input_store(store, out)
    assert load_user_input_store(out) == store


# ---------------------------------------------------------------------------
# article fetching


def test_file_fixture_loads_as_wikitext(fixtures_dir):
    doc = fetch_article("Mass–energy equivalence", fixtures_dir / "article_massenergy.wiki")
    assert doc.format == "wikitext"
    assert doc.origin == "file"
    assert "<math" in doc.body


def test_tex_extension_loads_as_latex(fixtures_dir):
    doc = fetch_article("Motion notes", fixtures_dir / "article_sample.tex")
    assert doc.format == "latex"


def test_missing_article_file(tmp_path):
    with pytest.raises(FileMissing):
        fetch_article("gone", tmp_path / "gone.wiki")


class _WikiHandler(BaseHTTPRequestHandler):
    rate_limit_hits = 0

    def do_GET(self):
        if self.path.startswith("/Known"):
            payload = "'''Known''' article with <math>x=1</math>.".encode()
            self.send_response(200)
            self.send_header("Content-Type", "text/plain; charset=utf-8")
            self.end_headers()
            self.wfile.write(payload)
        elif self.path.startswith("/Flaky"):
            type(self).rate_limit_hits += 1
            if type(self).rate_limit_hits < 2:
                self.send_response(429)
                self.send_header("Retry-After", "0")
                self.end_headers()
            else:
                self.send_response(200)
                self.end_headers()
                self.wfile.write(b"flaky content $a=b$")
        else:
            self.send_response(404)
            self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture
def wiki_server():
    server = HTTPServer(("127.0.0.1", 0), _WikiHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _WikiHandler.rate_limit_hits = 0
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_remote_fetch_returns_wikitext(wiki_server):
    doc = fetch_article("Known", wiki_server)
    assert doc.origin == "remote"
    assert doc.format == "wikitext"
    assert "<math>x=1</math>" in doc.body


def test_remote_unknown_title_raises_not_found(wiki_server):
    with pytest.raises(NotFound):
        fetch_article("Unknown title", wiki_server)


def test_rate_limit_is_retried_with_retry_after(wiki_server):
    doc = fetch_article("Flaky", wiki_server)
    assert "flaky content" in doc.body


def test_rate_limit_exhausts_retries(wiki_server):
    _WikiHandler.rate_limit_hits = -10  # stay limited for all attempts
    with pytest.raises(RateLimited):
        fetch_article("Flaky", wiki_server, max_retries=1)


def test_url_template_substitution(wiki_server):
    doc = fetch_article("Known", wiki_server + "/{title}?action=raw")
    assert doc.origin == "remote"
