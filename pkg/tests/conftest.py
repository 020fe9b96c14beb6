from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from mathel.ingest import RawDocument

FIXTURES = Path(__file__).parent / "fixtures"


def make_doc(body: str, fmt: str = "wikitext", title: str = "Test article") -> RawDocument:
    return RawDocument(
        title=title,
        body=body,
        format=fmt,
        retrieved_at=datetime(2020, 11, 23, tzinfo=timezone.utc),
        origin="file",
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def massenergy_doc() -> RawDocument:
    body = (FIXTURES / "article_massenergy.wiki").read_text(encoding="utf-8")
    return make_doc(body, title="Mass–energy equivalence")


@pytest.fixture
def latex_doc() -> RawDocument:
    body = (FIXTURES / "article_sample.tex").read_text(encoding="utf-8")
    return make_doc(body, fmt="latex", title="Motion notes")
