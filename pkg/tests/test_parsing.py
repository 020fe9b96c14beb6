from __future__ import annotations

import string

from hypothesis import given, settings
from hypothesis import strategies as st

from mathel.parsing import (
    IDENTIFIER,
    IGNORED,
    NUMBER,
    RELATION,
    TokenizerOptions,
    canonicalize_latex,
    extract_math_segments,
    tokenize_formula,
)

from conftest import make_doc


# ---------------------------------------------------------------------------
# segment extraction


def test_block_segment_with_qid_attribute():
    doc = make_doc('<math display="block" qid=Q35875>E=m\\,c^2</math>')
    segments = extract_math_segments(doc)
    assert len(segments) == 1
    seg = segments[0]
    assert seg.display == "block"
    assert seg.raw_latex == "E=m\\,c^2"
    assert seg.existing_qid == "Q35875"
    assert doc.body[seg.span[0]:seg.span[1]] == doc.body


def test_document_without_math_yields_no_segments():
    doc = make_doc("Just prose about [[physics]] with no formulas at all.")
    assert extract_math_segments(doc) == []


def test_inline_between_two_blocks_keeps_document_order():
    # hand count: three regions, strictly increasing offsets
    body = (
        'start <math display="block">a=b</math> middle <math>v=d/t</math> '
        'tail <math display="block">F=ma</math> end'
    )
    doc = make_doc(body)
    segments = extract_math_segments(doc)
    assert [s.segment_id for s in segments] == [0, 1, 2]
    assert [s.display for s in segments] == ["block", "inline", "block"]
    spans = [s.span for s in segments]
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
    assert [s.raw_latex for s in segments] == ["a=b", "v=d/t", "F=ma"]


def test_quoted_display_and_qid_variants():
    doc = make_doc("<math display='block' qid=\"Q42\">x=1</math>")
    seg = extract_math_segments(doc)[0]
    assert seg.display == "block"
    assert seg.existing_qid == "Q42"


def test_unbalanced_math_tag_is_reported_and_skipped():
    doc = make_doc("before <math>broken then <math>x=y</math> after")
    issues = []
    segments = extract_math_segments(doc, issues)
    assert len(issues) == 1
    assert "closing" in issues[0].detail
    # extraction continued past the unbalanced opening
    assert [s.raw_latex for s in segments] == ["x=y"]


def test_latex_dollar_and_bracket_regions(latex_doc):
    segments = extract_math_segments(latex_doc)
    assert [s.raw_latex for s in segments] == [
        "v=d/t",
        "p = m v",
        "E_k = \\frac{1}{2} m v^2",
    ]
    assert [s.display for s in segments] == ["inline", "block", "block"]


def test_latex_escaped_dollar_is_not_a_delimiter():
    doc = make_doc("A cost of \\$5 and a formula $x=2$ here.", fmt="latex")
    segments = extract_math_segments(doc)
    assert [s.raw_latex for s in segments] == ["x=2"]


def test_latex_unbalanced_dollar_reported():
    doc = make_doc("text $x=1$ then $broken", fmt="latex")
    issues = []
    segments = extract_math_segments(doc, issues)
    assert [s.raw_latex for s in segments] == ["x=1"]
    assert len(issues) == 1


def test_extraction_preserves_content():
    doc = make_doc(
        'intro <math display="block">E=m\\,c^2</math> middle $ignored$ '
        "<math>p=mv</math> outro"
    )
    segments = extract_math_segments(doc)
    rebuilt = []
    cursor = 0
    for seg in segments:
        rebuilt.append(doc.body[cursor:seg.span[0]])
        rebuilt.append(doc.body[seg.span[0]:seg.span[1]])
        cursor = seg.span[1]
    rebuilt.append(doc.body[cursor:])
    assert "".join(rebuilt) == doc.body
    for seg in segments:
        assert seg.raw_latex in doc.body[seg.span[0]:seg.span[1]]


# ---------------------------------------------------------------------------
# tokenizer


def test_multiletter_run_splits_into_single_identifiers():
    formula = tokenize_formula("L = rmv")
    assert formula.identifier_symbols == ("L", "r", "m", "v")
    assert formula.is_equation


def test_superscript_content_is_ignored():
    formula = tokenize_formula("E=mc^2")
    assert formula.identifier_symbols == ("E", "m", "c")
    assert formula.is_equation
    kinds = [t.kind for t in formula.tokens]
    assert kinds == [IDENTIFIER, RELATION, IDENTIFIER, IDENTIFIER, IGNORED]


def test_plain_number_is_not_an_identifier():
    formula = tokenize_formula("42")
    assert formula.identifier_symbols == ()
    assert not formula.is_equation
    assert [t.kind for t in formula.tokens] == [NUMBER]


def test_decimal_number_groups_greedily():
    formula = tokenize_formula("3.14x")
    assert [t.text for t in formula.tokens] == ["3.14", "x"]
    assert formula.identifier_symbols == ("x",)


def test_subscripts_never_create_identifiers():
    formula = tokenize_formula("x_i + a_{max} + b_2")
    assert formula.identifier_symbols == ("x", "a", "b")


def test_subscript_equals_does_not_mark_equation():
    assert not tokenize_formula("e^{x=0}").is_equation
    assert not tokenize_formula("a_{b=1}").is_equation
    # equals inside a brace group sits at depth 1, not top level
    assert not tokenize_formula("{a=b}").is_equation
    assert tokenize_formula("a=b").is_equation


def test_decorated_identifiers_normalize_to_bare_symbol():
    for latex in ("\\vec{x}", "\\mathbf{x}", "\\vec x", "\\hat{x}"):
        formula = tokenize_formula(latex)
        assert formula.identifier_symbols == ("x",), latex
        token = formula.tokens[0]
        assert token.text == latex  # decoration stays visible in the token text


def test_greek_commands_are_identifiers_keyed_by_command():
    formula = tokenize_formula("\\alpha + \\Omega = \\gamma")
    assert formula.identifier_symbols == ("\\alpha", "\\Omega", "\\gamma")


def test_greek_alias_table_canonicalizes_symbol():
    options = TokenizerOptions(greek_aliases={"varepsilon": "epsilon"})
    formula = tokenize_formula("\\varepsilon", options)
    assert formula.identifier_symbols == ("\\epsilon",)


def test_whitelisted_function_commands_are_not_identifiers():
    formula = tokenize_formula("\\sin x + \\log y")
    assert formula.identifier_symbols == ("x", "y")
    command_texts = [t.text for t in formula.tokens if t.kind == "command"]
    assert command_texts == ["\\sin", "\\log"]


def test_bare_function_name_splits_without_whitelist_protection():
    # only commands are whitelisted; bare letters always split
    formula = tokenize_formula("sin")
    assert formula.identifier_symbols == ("s", "i", "n")


def test_split_multiletter_can_be_disabled():
    options = TokenizerOptions(split_multiletter=False)
    formula = tokenize_formula("rmv", options)
    assert formula.identifier_symbols == ("rmv",)


def test_unknown_macro_degrades_to_ignored_with_issue():
    formula = tokenize_formula("\\foobar x")
    assert formula.identifier_symbols == ("x",)
    assert len(formula.issues) == 1
    assert formula.issues[0].text == "\\foobar"
    assert formula.tokens[0].kind == IGNORED


def test_derivative_marks_are_ignored():
    formula = tokenize_formula("\\dot{x} + \\partial_t u + v'")
    assert formula.identifier_symbols == ("x", "u", "v")
    ignored = [t.text for t in formula.tokens if t.kind == IGNORED and not t.text.isspace()]
    assert "\\dot" in ignored
    assert "\\partial" in ignored
    assert "'" in ignored


def test_text_command_consumes_its_group():
    formula = tokenize_formula("a \\text{if moving} b")
    assert formula.identifier_symbols == ("a", "b")


def test_relation_commands_are_relations_but_not_equations():
    formula = tokenize_formula("a \\leq b")
    assert [t.kind for t in formula.tokens if t.kind == RELATION] == [RELATION]
    assert not formula.is_equation


def test_options_load_from_json_file(tmp_path):
    config = tmp_path / "tokenizer.json"
    config.write_text(
        '{"command_whitelist": ["sin"], "split_multiletter": false, '
        '"greek_aliases": {"varrho": "rho"}}',
        encoding="utf-8",
    )
    options = TokenizerOptions.from_file(config)
    assert options.command_whitelist == frozenset({"sin"})
    assert not options.split_multiletter
    assert options.greek_aliases == {"varrho": "rho"}


_latexish = st.text(
    alphabet=string.ascii_letters + string.digits + " =+-*/^_{}\\().,;!'<>[]|",
    max_size=60,
)


@given(_latexish)
@settings(max_examples=300)
def test_token_spans_tile_the_input(raw):
    formula = tokenize_formula(raw)
    cursor = 0
    for token in formula.tokens:
        assert token.span[0] == cursor
        assert token.text == raw[token.span[0]:token.span[1]]
        cursor = token.span[1]
    assert cursor == len(raw)


@given(_latexish)
@settings(max_examples=300)
def test_tokenizer_is_deterministic(raw):
    assert tokenize_formula(raw) == tokenize_formula(raw)


# ---------------------------------------------------------------------------
# canonical form


def test_canonicalize_strips_thin_space():
    assert canonicalize_latex("E=m\\,c^2") == "E=mc^2"


def test_canonicalize_fixed_point():
    assert canonicalize_latex("x") == "x"


def test_canonicalize_mathbf_rewrites_to_vec():
    assert canonicalize_latex("\\mathbf{v} = \\vec{v}") == "\\vec{v}=\\vec{v}"


def test_canonicalize_braces_bare_decoration_argument():
    assert canonicalize_latex("\\vec v") == canonicalize_latex("\\mathbf{v}")
    assert canonicalize_latex("\\vec v") == "\\vec{v}"


def test_canonicalize_unwraps_single_char_groups():
    assert canonicalize_latex("c^{2}") == "c^2"
    assert canonicalize_latex("{x}") == "x"
    assert canonicalize_latex("{ab}") == "{ab}"


def test_canonicalize_drops_spacing_macros_and_whitespace():
    assert canonicalize_latex("a \\; b \\! c \\, d") == "abcd"


@given(_latexish)
@settings(max_examples=300)
def test_canonicalize_is_idempotent(raw):
    once = canonicalize_latex(raw)
    assert canonicalize_latex(once) == once
