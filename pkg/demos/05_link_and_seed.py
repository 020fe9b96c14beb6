"""Exporting annotations: qid-linked Wikitext and the seeding list.

Link insertion edits only the opening <math> tags of annotated
equations, emits each QID at most once per document, and leaves every
other byte untouched.  The seeding list names the knowledge-base items
that still need creating or completing before the links resolve.

    python demos/05_link_and_seed.py
"""

import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from mathel import (
    FcMemory,
    RawDocument,
    TargetRef,
    create_session,
    extract_math_segments,
    insert_qid_links,
    load_formula_catalog,
    seeding_list,
    write_seeding_list,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

body = """\
Intro prose.
<math display="block">E=m\\,c^2</math>
a restatement <math>m=E/c^2</math> of the same concept, an inline
non-equation <math>E_k</math>, and momentum <math display="block">p=mv</math>.
"""
doc = RawDocument(title="demo", body=body, format="wikitext",
                  retrieved_at=datetime.now(timezone.utc), origin="file")
segments = extract_math_segments(doc)

# segment_id -> QID, as produced by an annotation session
annotations = {0: "Q35875", 1: "Q35875", 2: "Q46276", 3: "Q38143"}

linked, stats = insert_qid_links(doc, segments, annotations)
print("linked wikitext:")
print(linked)
print(
    f"candidates={stats.candidates} linked={stats.linked} "
    f"skipped_duplicates={stats.skipped_duplicates} "
    f"skipped_non_equation={stats.skipped_non_equation}"
)
# the duplicate QID was skipped after its first occurrence, and the
# non-equation was never a candidate

# Seeding: annotate concepts, then ask which knowledge-base items need work.
session = create_session(doc)
session.annotate(TargetRef("identifier", "E"), "energy", "Q11379")
session.annotate(TargetRef("identifier", "m"), "mass", "Q11423")
session.annotate(TargetRef("formula", segment_id=0), "mass–energy equivalence", "Q35875")
session.annotate(TargetRef("formula", segment_id=3), "four-momentum", "Q1068463")

catalog = load_formula_catalog(FIXTURES / "formula_catalog.json")
memory = FcMemory()
memory.add_variant("four-momentum", "Q1068463", "p=mv")

entries = seeding_list([session], catalog, memory)
print("\nseeding list (name, qid, contribution, variants, property):")
for entry in entries:
    print(f"  {entry.name}\t{entry.qid}\t{entry.contribution_text()}"
          f"\t{entry.fc_variations}\t{entry.property_text()}")

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "seeding.tsv"
    write_seeding_list(entries, out)
    sys.stdout.write("\nTSV output:\n" + out.read_text(encoding="utf-8"))
