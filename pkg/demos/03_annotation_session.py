"""A full annotation session: commit, propagate, undo, reject, persist.

Sessions are event-sourced -- every mutation appends to an immutable
log, and the effective state is a fold over that log, which is what
makes saved sessions replayable and auditable.

    python demos/03_annotation_session.py
"""

import tempfile
from datetime import datetime, timezone
from pathlib import Path

from mathel import RawDocument, TargetRef, create_session, load_session, save_session

doc = RawDocument(
    title="Kinetic energy",
    body="""\
Energy of motion: <math display="block">E_k = \\tfrac{1}{2}mv^2</math>
compare the rest energy <math>E_0 = m c^2</math> where the same mass
<math>m</math> appears again.
""",
    format="wikitext",
    retrieved_at=datetime.now(timezone.utc),
    origin="file",
)

session = create_session(doc)
print(f"{len(session.segments)} segments, progress {session.progress():.2f}")

# A global annotation covers every occurrence of the symbol at once.
print(f"\n'm' occurs {len(session.occurrences('m'))} times")
session.annotate(
    TargetRef("identifier", "m"), "mass", "Q11423",
    provenance="recommended", source="arxiv", position=1, elapsed_ms=2400,
)
print(f"after one global annotation, progress {session.progress():.2f}")

# Formula annotations also teach the formula-concept memory a variant.
session.annotate(TargetRef("formula", segment_id=0), "kinetic energy", "Q46276",
                 elapsed_ms=3100)
print("memory variants:", session.fc_memory.variants("kinetic energy", "Q46276"))

# Mis-parsed tokens are rejected; they leave the progress denominator.
seg_id, span = session.occurrences("v")[0]
session.reject(TargetRef("identifier", "v", seg_id, span))

# Undo is an event too: the log only ever grows.
session.annotate(TargetRef("identifier", "E"), "energy", "Q11379")
session.unannotate(TargetRef("identifier", "E"))
print(f"\n{len(session.events)} events in the log:")
for event in session.events:
    print(f"  {event.kind:<22} {event.target.to_key_string()}")

print("\nannotation table:")
for row in session.annotation_table():
    marker = "**" if row.is_identifier else "  "
    print(f"  {marker} {row.target_text!r} -> {row.name} ({row.qid}) [{row.mode}]")

# Round trip: saved sessions replay to the identical state.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "session.json"
    save_session(session, path)
    loaded = load_session(path)
    assert loaded.annotations == session.annotations
    assert loaded.events == session.events
    print(f"\nsaved, reloaded and replayed {len(loaded.events)} events: states match")
