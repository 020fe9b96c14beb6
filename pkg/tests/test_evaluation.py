from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mathel.evaluation import (
    OUTLIER_ELAPSED_MS,
    PositionHistogram,
    cg,
    dcg,
    qid_coverage,
    source_report,
    timing_report,
)
from mathel.session import AnnotationEvent, TargetRef, create_session

from conftest import make_doc

# Reference performance table rows (accepted recommendations by position).
ARXIV_IDS = (79, 18, 20, 3, 21, 2, 0, 3, 0, 0)
WIKIPEDIA_IDS = (45, 16, 45, 15, 3, 3, 18, 5, 18, 1)
WIKIDATA_IDS = (23, 55, 4, 53, 6, 0, 0, 0, 0, 0)
WORDWIN_IDS = (14, 18, 25, 20, 17, 10, 7, 12, 5, 8)


def _hist(source, counts):
    return PositionHistogram(source=source, counts=tuple(counts))


def _accept(kind, source, position, symbol="E", elapsed_ms=1000):
    target = (
        TargetRef("identifier", symbol)
        if kind == "identifier"
        else TargetRef("formula", segment_id=0)
    )
    return AnnotationEvent(
        kind="accept_recommendation",
        target=target,
        timestamp=0.0,
        name="name",
        qid=None,
        mode="global",
        source=source,
        position=position,
        elapsed_ms=elapsed_ms,
    )


def _manual(kind, elapsed_ms):
    target = (
        TargetRef("identifier", "E") if kind == "identifier" else TargetRef("formula", segment_id=0)
    )
    return AnnotationEvent(
        kind="manual_insert",
        target=target,
        timestamp=0.0,
        name="name",
        mode="global",
        elapsed_ms=elapsed_ms,
    )


# ---------------------------------------------------------------------------
# cg / dcg


def test_cg_of_arxiv_identifier_row():
    assert cg(_hist("arxiv", ARXIV_IDS)) == 146


def test_cg_of_all_zero_histogram():
    assert cg(_hist("arxiv", [0] * 10)) == 0


def test_cg_of_wikipedia_identifier_row():
    assert cg(_hist("wikipedia", WIKIPEDIA_IDS)) == 169


def test_dcg_of_arxiv_row_rounds_to_reference():
    value = dcg(_hist("arxiv", ARXIV_IDS))
    assert value == pytest.approx(111.431483, abs=1e-4)
    assert round(value) == 111


def test_dcg_of_wikidata_row_rounds_to_reference():
    value = dcg(_hist("wikidata", WIKIDATA_IDS))
    assert value == pytest.approx(84.848111, abs=1e-4)
    assert round(value) == 85


def test_single_acceptance_at_position_one_scores_one():
    counts = [0] * 10
    counts[0] = 1
    assert dcg(_hist("arxiv", counts)) == pytest.approx(1.0)


def test_histogram_must_have_ten_positions():
    with pytest.raises(ValueError):
        PositionHistogram(source="arxiv", counts=(1, 2, 3))


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=10, max_size=10))
@settings(max_examples=300)
def test_dcg_never_exceeds_cg(counts):
    hist = _hist("any", counts)
    assert dcg(hist) <= cg(hist) + 1e-9
    only_first = sum(counts[1:]) == 0
    if only_first:
        assert dcg(hist) == pytest.approx(cg(hist))
    elif cg(hist) > 0:
        assert dcg(hist) < cg(hist)


@given(
    st.lists(st.integers(min_value=0, max_value=50), min_size=10, max_size=10),
    st.lists(st.integers(min_value=0, max_value=50), min_size=10, max_size=10),
)
@settings(max_examples=200)
def test_dcg_is_linear_in_the_histogram(a, b):
    summed = [x + y for x, y in zip(a, b)]
    assert dcg(_hist("s", summed)) == pytest.approx(dcg(_hist("s", a)) + dcg(_hist("s", b)))


# ---------------------------------------------------------------------------
# source report


def _events_from_rows(kind, rows):
    events = []
    for source, counts in rows.items():
        for position, count in enumerate(counts, 1):
            events.extend(_accept(kind, source, position) for _ in range(count))
    return events


def test_report_reproduces_reference_identifier_rows():
    rows = {
        "arxiv": ARXIV_IDS,
        "wikipedia": WIKIPEDIA_IDS,
        "wikidata": WIKIDATA_IDS,
        "word_window": WORDWIN_IDS,
    }
    report = source_report(_events_from_rows("identifier", rows))["identifier"]
    expected = {"arxiv": (146, 111), "wikipedia": (169, 100), "wikidata": (141, 85),
                "word_window": (136, 67)}
    for source, (want_cg, want_dcg) in expected.items():
        perf = report[source]
        assert perf.cg == want_cg
        assert round(perf.dcg) == want_dcg
        assert perf.histogram.counts == rows[source]


def test_empty_log_gives_empty_report():
    report = source_report([])
    assert report["identifier"] == {}
    assert report["formula"] == {}


def test_single_acceptance_lands_in_position_bucket():
    report = source_report([_accept("identifier", "arxiv", 5)])
    hist = report["identifier"]["arxiv"].histogram
    assert hist.counts == (0, 0, 0, 0, 1, 0, 0, 0, 0, 0)


def test_acceptance_beyond_cutoff_counts_into_cg_only():
    events = [_accept("identifier", "arxiv", 1), _accept("identifier", "arxiv", 12)]
    perf = source_report(events)["identifier"]["arxiv"]
    assert perf.cg == 2
    assert perf.cg_shown == 1
    assert perf.histogram.counts == (1, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    assert perf.dcg == pytest.approx(1.0)


def test_identifier_and_formula_events_are_bucketed_apart():
    events = [_accept("identifier", "word_window", 1), _accept("formula", "word_window", 2)]
    report = source_report(events)
    assert report["identifier"]["word_window"].cg == 1
    assert report["formula"]["word_window"].cg == 1


def test_manual_events_do_not_enter_source_report():
    report = source_report([_manual("identifier", 5000)])
    assert report["identifier"] == {}


# ---------------------------------------------------------------------------
# timing report


def test_identifier_speedup_matches_reference_ratio():
    events = [
        _accept("identifier", "arxiv", 1, elapsed_ms=2600),
        _accept("identifier", "arxiv", 2, elapsed_ms=2600),
        _manual("identifier", 6300),
        _manual("identifier", 6300),
    ]
    (summary,) = timing_report(events)
    assert summary.mean_recommendation_s == pytest.approx(2.6)
    assert summary.mean_manual_s == pytest.approx(6.3)
    assert summary.speedup == pytest.approx(2.423, abs=0.001)
    assert summary.speedup == pytest.approx(2.4, abs=0.05)


def test_formula_speedup_matches_reference_ratio():
    events = [
        _accept("formula", "fc_memory", 1, elapsed_ms=2800),
        _manual("formula", 4000),
    ]
    (summary,) = timing_report(events)
    assert summary.speedup == pytest.approx(1.4286, abs=0.001)
    assert summary.speedup == pytest.approx(1.4, abs=0.05)


def test_all_manual_log_has_no_speedup():
    events = [_manual("identifier", 5000), _manual("identifier", 7000)]
    (summary,) = timing_report(events)
    assert summary.mean_recommendation_s is None
    assert summary.speedup is None
    assert summary.mean_manual_s == pytest.approx(6.0)


def test_abandoned_popups_are_excluded_from_means():
    events = [
        _accept("identifier", "arxiv", 1, elapsed_ms=2000),
        _accept("identifier", "arxiv", 1, elapsed_ms=OUTLIER_ELAPSED_MS + 1),
    ]
    (summary,) = timing_report(events)
    assert summary.mean_recommendation_s == pytest.approx(2.0)


def test_empty_log_gives_no_timing_rows():
    assert timing_report([]) == []


# ---------------------------------------------------------------------------
# QID coverage


def _session_with_annotations(identifier_qids, formula_qids):
    body = "<math>a+b+c+d+e</math> " + " ".join(
        f"<math>x_{{{i}}}=({i})</math>" for i in range(max(len(formula_qids), 1))
    )
    session = create_session(make_doc(body))
    symbols = ["a", "b", "c", "d", "e"]
    for symbol, qid in zip(symbols, identifier_qids):
        session.annotate(TargetRef("identifier", symbol), f"name {symbol}", qid)
    for i, qid in enumerate(formula_qids):
        session.annotate(TargetRef("formula", segment_id=i + 1), f"formula {i}", qid)
    return session


def test_four_of_five_identifier_annotations_is_eighty_percent():
    session = _session_with_annotations(["Q1", "Q2", "Q3", "Q4", None], [])
    coverage = qid_coverage([session])
    assert coverage["identifier_pct"] == pytest.approx(80.0)


def test_zero_annotations_reports_absent_coverage():
    coverage = qid_coverage([])
    assert coverage["identifier_pct"] is None
    assert coverage["formula_pct"] is None


def test_three_of_five_formula_annotations_is_sixty_percent():
    session = _session_with_annotations([], ["Q1", "Q2", "Q3", None, None])
    coverage = qid_coverage([session])
    assert coverage["formula_pct"] == pytest.approx(60.0)


# ---------------------------------------------------------------------------
# purity


def test_report_is_pure_over_saved_sessions(massenergy_doc, tmp_path):
    from mathel.session import load_session, save_session

    session = create_session(massenergy_doc)
    session.annotate(TargetRef("identifier", "E"), "energy", "Q11379",
                     provenance="recommended", source="arxiv", position=1, elapsed_ms=2000)
    session.annotate(TargetRef("formula", segment_id=0), "mass–energy equivalence", "Q35875",
                     elapsed_ms=3000)
    path = tmp_path / "session.json"
    save_session(session, path)
    loaded = load_session(path)
    assert source_report(session.events) == source_report(loaded.events)
    assert timing_report(session.events) == timing_report(loaded.events)
