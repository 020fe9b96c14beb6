"""Source-performance and timing reports from annotation events.

Cumulative gain counts accepted recommendations per source; discounted
cumulative gain divides the count at position i by log2(i+1), so a
source that ranks the right answer first scores better than one that
buries it at position nine.

    python demos/04_evaluation_reports.py
"""

from mathel import PositionHistogram, cg, dcg
from mathel.evaluation import render_text_report, source_report, timing_report
from mathel.session import AnnotationEvent, TargetRef


def accept(kind, source, position, ms=2000):
    target = (
        TargetRef("identifier", "E") if kind == "identifier"
        else TargetRef("formula", segment_id=0)
    )
    return AnnotationEvent(
        kind="accept_recommendation", target=target, timestamp=0.0,
        name="name", mode="global", source=source, position=position, elapsed_ms=ms,
    )


def manual(kind, ms):
    target = (
        TargetRef("identifier", "E") if kind == "identifier"
        else TargetRef("formula", segment_id=0)
    )
    return AnnotationEvent(
        kind="manual_insert", target=target, timestamp=0.0,
        name="name", mode="global", elapsed_ms=ms,
    )


# A histogram records how often a source's suggestion was taken at each
# popup position (cut off at position 10).
hist = PositionHistogram(source="arxiv", counts=(79, 18, 20, 3, 21, 2, 0, 3, 0, 0))
print(f"one source row: CG={cg(hist)}  DCG={dcg(hist):.1f} (rounds to {round(dcg(hist))})")

# Build a small synthetic event log and render the full report.
events = []
for position, count in [(1, 5), (2, 3), (3, 1)]:
    events += [accept("identifier", "arxiv", position) for _ in range(count)]
for position, count in [(1, 2), (4, 2)]:
    events += [accept("identifier", "word_window", position) for _ in range(count)]
events += [accept("formula", "fc_memory", 1), accept("formula", "fc_memory", 2)]

# timing: recommendation selections vs. manual typing
events += [accept("identifier", "arxiv", 1, ms=2600), manual("identifier", 6300)]
events += [accept("formula", "fc_memory", 1, ms=2800), manual("formula", 4000)]

print()
print(render_text_report(source_report(events), timing_report(events)))
