"""Extracting math from a document and tokenizing formulas.

The workbench understands two input grammars: Wikitext with <math> tags
and plain LaTeX with dollar/bracket delimiters.  Run this script from
the repository root:

    python demos/01_parse_and_tokenize.py
"""

from datetime import datetime, timezone

from mathel import RawDocument, canonicalize_latex, extract_math_segments, tokenize_formula

article = RawDocument(
    title="Mass–energy equivalence",
    body="""\
'''Mass–energy equivalence''' relates [[mass]] and [[energy]]:
<math display="block">E=m\\,c^2</math>
Here <math>E</math> is the total energy, <math>m</math> the mass and
<math>c</math> the [[speed of light]].  Angular momentum obeys
<math>L = rmv</math> for circular motion.
""",
    format="wikitext",
    retrieved_at=datetime.now(timezone.utc),
    origin="file",
)

# Every <math> region becomes a segment with its byte span, display mode
# and any pre-existing qid attribute.
segments = extract_math_segments(article)
print(f"{len(segments)} math segments:")
for seg in segments:
    print(f"  [{seg.segment_id}] {seg.display:<6} {seg.raw_latex!r} at {seg.span}")

# Tokenization splits letter runs into single identifiers -- `rmv` is
# r, m, v -- and routes sub/superscripts into the ignored stream.
print("\ntokenizing 'L = rmv':")
formula = tokenize_formula("L = rmv")
for token in formula.tokens:
    print(f"  {token.kind:<11} {token.text!r}")
print("identifiers:", formula.identifier_symbols)
print("is equation:", formula.is_equation)

# The canonical form makes spelling variants comparable: thin spaces
# vanish and \mathbf becomes \vec.
for latex in ("E=m\\,c^2", "\\mathbf{v}", "\\vec v", "c^{2}"):
    print(f"canonical {latex!r:<14} -> {canonicalize_latex(latex)!r}")
