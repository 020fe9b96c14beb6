"""Source-performance and timing reports over annotation event logs.

Reports are pure functions of the events: replaying a saved session
reproduces them bit-identically.  Accepted recommendations are bucketed
by the popup position they were taken from; cumulative gain sums them,
discounted cumulative gain divides the count at position i by
log2(i + 1), penalizing low-ranked acceptances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .session import EVENT_ACCEPT, EVENT_MANUAL, AnnotationEvent, SessionState

POSITION_CUTOFF = 10

# Popups left open this long were abandoned, not deliberated over.
OUTLIER_ELAPSED_MS = 10 * 60 * 1000


@dataclass(frozen=True)
class PositionHistogram:
    """Accepted recommendations per popup position, positions 1..10."""

    source: str
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != POSITION_CUTOFF:
            raise ValueError(f"histogram must have exactly {POSITION_CUTOFF} positions")
        if any(c < 0 for c in self.counts):
            raise ValueError("histogram counts must be non-negative")


def cg(hist: PositionHistogram) -> int:
    """Cumulative gain: total accepted recommendations."""
    return sum(hist.counts)


def dcg(hist: PositionHistogram) -> float:
    """Discounted cumulative gain: counts[i] weighted by 1/log2(i+1), 1-based."""
    return sum(
        count / math.log2(position + 1)
        for position, count in enumerate(hist.counts, 1)
    )


@dataclass(frozen=True)
class SourcePerformance:
    source: str
    histogram: PositionHistogram
    cg: int  # all acceptances, positions beyond the cutoff included
    cg_shown: int  # acceptances at positions 1..10 only
    dcg: float

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "positions": list(self.histogram.counts),
            "cg": self.cg,
            "cg_shown": self.cg_shown,
            "dcg": self.dcg,
            "dcg_rounded": round(self.dcg),
        }


@dataclass(frozen=True)
class TimingSummary:
    target_kind: str  # "identifier" | "formula"
    mean_recommendation_s: Optional[float]
    mean_manual_s: Optional[float]
    speedup: Optional[float]  # manual / recommendation time

    def to_dict(self) -> dict:
        return {
            "target_kind": self.target_kind,
            "mean_recommendation_s": self.mean_recommendation_s,
            "mean_manual_s": self.mean_manual_s,
            "speedup": self.speedup,
        }


def source_report(events: Iterable[AnnotationEvent]) -> dict[str, dict[str, SourcePerformance]]:
    """Per-source acceptance histograms with CG/DCG, identifiers and formulae apart.

    Acceptances recorded beyond position 10 still count into CG but are
    excluded from the histogram and therefore from DCG.
    """
    buckets: dict[tuple[str, str], list[int]] = {}
    beyond: dict[tuple[str, str], int] = {}
    for event in events:
        if event.kind != EVENT_ACCEPT or event.source is None or event.position is None:
            continue
        key = (event.target.kind, event.source)
        counts = buckets.setdefault(key, [0] * POSITION_CUTOFF)
        if 1 <= event.position <= POSITION_CUTOFF:
            counts[event.position - 1] += 1
        else:
            beyond[key] = beyond.get(key, 0) + 1

    report: dict[str, dict[str, SourcePerformance]] = {"identifier": {}, "formula": {}}
    for (kind, source), counts in sorted(buckets.items()):
        hist = PositionHistogram(source=source, counts=tuple(counts))
        shown = cg(hist)
        report.setdefault(kind, {})[source] = SourcePerformance(
            source=source,
            histogram=hist,
            cg=shown + beyond.get((kind, source), 0),
            cg_shown=shown,
            dcg=dcg(hist),
        )
    return report


def timing_report(events: Iterable[AnnotationEvent]) -> list[TimingSummary]:
    """Mean annotation times and the recommendation speedup factor.

    Events with an elapsed time over ten minutes are abandoned popups
    and excluded from the means.
    """
    samples: dict[tuple[str, str], list[int]] = {}
    for event in events:
        if event.kind not in (EVENT_ACCEPT, EVENT_MANUAL) or event.elapsed_ms is None:
            continue
        if event.elapsed_ms > OUTLIER_ELAPSED_MS:
            continue
        way = "recommendation" if event.kind == EVENT_ACCEPT else "manual"
        samples.setdefault((event.target.kind, way), []).append(event.elapsed_ms)

    summaries = []
    for kind in ("identifier", "formula"):
        rec = samples.get((kind, "recommendation"))
        manual = samples.get((kind, "manual"))
        if not rec and not manual:
            continue
        mean_rec = sum(rec) / len(rec) / 1000.0 if rec else None
        mean_manual = sum(manual) / len(manual) / 1000.0 if manual else None
        speedup = None
        if mean_rec and mean_manual is not None:
            speedup = mean_manual / mean_rec
        summaries.append(
            TimingSummary(
                target_kind=kind,
                mean_recommendation_s=mean_rec,
                mean_manual_s=mean_manual,
                speedup=speedup,
            )
        )
    return summaries


def qid_coverage(sessions: Iterable[SessionState]) -> dict[str, Optional[float]]:
    """Share of effective annotations carrying a QID, as a percentage per kind."""
    totals = {"identifier": 0, "formula": 0}
    with_qid = {"identifier": 0, "formula": 0}
    for session in sessions:
        for annotation in session.effective_annotations():
            kind = annotation.target.kind
            totals[kind] += 1
            if annotation.qid:
                with_qid[kind] += 1
    return {
        f"{kind}_pct": (100.0 * with_qid[kind] / totals[kind]) if totals[kind] else None
        for kind in ("identifier", "formula")
    }


# ---------------------------------------------------------------------------
# rendering


def report_to_dict(
    source: dict[str, dict[str, SourcePerformance]],
    timing: list[TimingSummary],
    coverage: Optional[dict[str, Optional[float]]] = None,
) -> dict:
    data = {
        "sources": {
            kind: {name: perf.to_dict() for name, perf in per_kind.items()}
            for kind, per_kind in source.items()
        },
        "timing": [summary.to_dict() for summary in timing],
    }
    if coverage is not None:
        data["qid_coverage"] = coverage
    return data


def render_text_report(
    source: dict[str, dict[str, SourcePerformance]],
    timing: list[TimingSummary],
    coverage: Optional[dict[str, Optional[float]]] = None,
) -> str:
    lines = []
    for kind in ("identifier", "formula"):
        per_kind = source.get(kind, {})
        if not per_kind:
            continue
        lines.append(f"{kind.capitalize()} sources")
        header = f"{'Source':<16} {'CG':>5} {'DCG':>5}  " + " ".join(
            f"{p:>4}" for p in range(1, POSITION_CUTOFF + 1)
        )
        lines.append(header)
        lines.append("-" * len(header))
        for name, perf in per_kind.items():
            positions = " ".join(f"{c:>4}" for c in perf.histogram.counts)
            lines.append(
                f"{name:<16} {perf.cg:>5} {round(perf.dcg):>5}  {positions}"
            )
        lines.append("")
    if timing:
        lines.append("Annotation timing (seconds)")
        lines.append(f"{'Kind':<12} {'Recommendation':>15} {'Manual':>8} {'Speedup':>8}")
        for summary in timing:
            rec = f"{summary.mean_recommendation_s:.1f}" if summary.mean_recommendation_s else "-"
            manual = f"{summary.mean_manual_s:.1f}" if summary.mean_manual_s else "-"
            speed = f"{summary.speedup:.1f}" if summary.speedup else "-"
            lines.append(f"{summary.target_kind:<12} {rec:>15} {manual:>8} {speed:>8}")
        lines.append("")
    if coverage:
        lines.append("QID coverage")
        for key, value in coverage.items():
            lines.append(f"{key:<16} {'-' if value is None else f'{value:.0f}%'}")
        lines.append("")
    return "\n".join(lines)
