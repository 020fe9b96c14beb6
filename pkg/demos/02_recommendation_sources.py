"""Ranked annotation candidates from multiple sources.

Identifier names come from frequency-ranked catalogs plus the local word
window; formula names come from fuzzy string matching, part overlap,
formula-concept memory, the word window and previously typed names.

    python demos/02_recommendation_sources.py
"""

from datetime import datetime, timezone
from pathlib import Path

from mathel import (
    FcMemory,
    RawDocument,
    UserInputStore,
    extract_math_segments,
    fuzzy_match,
    load_formula_catalog,
    load_identifier_catalog,
    parts_overlap,
    presentation_order,
    recommend_identifier,
    word_window,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

doc = RawDocument(
    title="demo",
    body="the kinetic energy of a moving mass obeys <math>E=m\\,c^2</math> at rest",
    format="wikitext",
    retrieved_at=datetime.now(timezone.utc),
    origin="file",
)
segment = extract_math_segments(doc)[0]

# word window: the five words on each side, nearest first
print("word window:")
for cand in word_window(doc, segment):
    print(f"  #{cand.rank} {cand.name!r} (score {cand.score:.2f})")

# frequency catalogs, cut off at rank 10, shown per source
catalogs = {
    kind: load_identifier_catalog(FIXTURES / f"identifiers_{kind}.tsv", kind)
    for kind in ("arxiv", "wikipedia", "wikidata")
}
popup = recommend_identifier("m", doc, segment, catalogs, UserInputStore())
print("\nidentifier popup for 'm':")
for label, source in popup.presentation:
    names = ", ".join(c.name for c in popup.per_source[source][:3])
    print(f"  {label}: {names}")

# evaluation mode shuffles the columns under anonymous labels
shuffled = presentation_order(popup, rng_seed=7, eval_mode=True)
print("\nsame popup in evaluation mode:")
for label, source in shuffled.presentation:
    print(f"  {label} (actually {source})")

# formula sources: fuzzy matching tolerates spelling variants ...
catalog = load_formula_catalog(FIXTURES / "formula_catalog.json")
print("\nfuzzy match for 'E=m\\,c^2':")
for cand in fuzzy_match("E=m\\,c^2", catalog)[:3]:
    print(f"  #{cand.rank} {cand.name} ({cand.qid}) score {cand.score:.2f}")

# ... and part overlap kicks in once constituent identifiers have QIDs
print("\npart overlap for annotated {energy, mass, speed of light}:")
for cand in parts_overlap({"Q11379", "Q11423", "Q2111"}, catalog)[:3]:
    print(f"  #{cand.rank} {cand.name} ({cand.qid}) score {cand.score:.2f}")

# the formula-concept memory recognizes previously annotated variants
memory = FcMemory()
memory.add_variant("mass–energy equivalence", "Q35875", "E=mc^2")
memory.add_variant("mass–energy equivalence", "Q35875", "m=E/c^2")
from mathel import fc_memory_lookup

print("\nmemory lookup for 'm=E/c^2':")
for cand in fc_memory_lookup("m=E/c^2", memory):
    print(f"  #{cand.rank} {cand.name} ({cand.qid}) score {cand.score:.2f}")
