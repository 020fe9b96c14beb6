"""Math extraction and LaTeX tokenization.

Two document grammars are supported: Wikitext (``<math ...>...</math>``
regions, with ``display`` and ``qid`` attributes) and plain LaTeX
(``$...$``, ``$$...$$`` and ``\\[...\\]`` regions).  Extracted segments
keep byte spans into the source body so that downstream edits can splice
attributes back in without disturbing any other byte.

The tokenizer follows a single-letter identifier model: runs of letters
are split into individual identifiers (``rmv`` -> ``r``, ``m``, ``v``)
unless they form a whitelisted function command such as ``\\sin``.
Greek letters are keyed by their LaTeX command (``\\alpha``).  Subscript
and superscript groups, derivative marks and unknown macros all land in
the ``ignored`` token stream so annotation can continue on messy input.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from typing import Mapping, Optional

__all__ = [
    "MathSegment",
    "Token",
    "TokenizedFormula",
    "TokenizerOptions",
    "UnbalancedDelimiter",
    "LexError",
    "extract_math_segments",
    "tokenize_formula",
    "canonicalize_latex",
    "GREEK_COMMANDS",
    "DEFAULT_COMMAND_WHITELIST",
]


# Token kinds
IDENTIFIER = "identifier"
OPERATOR = "operator"
NUMBER = "number"
RELATION = "relation"
COMMAND = "command"
IGNORED = "ignored"

GREEK_COMMANDS = frozenset(
    """alpha beta gamma delta epsilon varepsilon zeta eta theta vartheta iota
    kappa lambda mu nu xi pi varpi rho varrho sigma varsigma tau upsilon phi
    varphi chi psi omega Gamma Delta Theta Lambda Xi Pi Sigma Upsilon Phi Psi
    Omega""".split()
)

DEFAULT_COMMAND_WHITELIST = frozenset(
    """sin cos tan cot sec csc arcsin arccos arctan sinh cosh tanh coth log ln
    lg exp lim limsup liminf sup inf max min det gcd deg dim hom ker arg Pr
    mod""".split()
)

# Commands that wrap a single identifier and only change its rendering.
_DECORATIONS = frozenset(
    """vec mathbf boldsymbol hat bar tilde widehat widetilde overline
    underline mathrm mathit mathcal mathbb mathfrak""".split()
)

# Derivative marks are tokenized but never produce identifiers.
_DERIVATIVES = frozenset("dot ddot partial prime".split())

_RELATION_COMMANDS = frozenset("leq le geq ge approx propto".split())

_OPERATOR_COMMANDS = frozenset(
    """times cdot pm mp div ast star circ bullet cup cap vee wedge oplus
    ominus otimes sum prod int oint iint iiint frac tfrac dfrac cfrac sqrt
    binom nabla""".split()
)

# Layout / spacing macros that carry no annotation-relevant content.
_IGNORED_COMMANDS = frozenset(
    """quad qquad left right big Big bigg Bigg bigl bigr Bigl Bigr displaystyle
    textstyle scriptstyle limits nolimits nonumber notag dots ldots cdots vdots
    ddots infty to rightarrow leftarrow mapsto over atop""".split()
)

# Commands whose braced argument is prose, consumed wholesale.
_TEXT_COMMANDS = frozenset("text mbox hbox textrm textit textbf textsf".split())

_ASCII_LETTERS = frozenset(string.ascii_letters)


@dataclass(frozen=True)
class MathSegment:
    """One math region of a document.

    ``span`` covers the full delimited region (tags/dollar signs included)
    as byte offsets into the document body; ``raw_latex`` is the inner
    content with delimiters stripped.
    """

    segment_id: int
    raw_latex: str
    span: tuple[int, int]
    display: str  # "block" | "inline"
    existing_qid: Optional[str] = None


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: tuple[int, int]
    symbol: Optional[str] = None  # canonical identifier key, identifier tokens only


@dataclass(frozen=True)
class TokenizedFormula:
    segment_id: int
    tokens: tuple[Token, ...]
    identifier_symbols: tuple[str, ...]
    is_equation: bool
    issues: tuple["LexError", ...] = ()


@dataclass(frozen=True)
class UnbalancedDelimiter:
    span: tuple[int, int]
    detail: str


@dataclass(frozen=True)
class LexError:
    position: int
    text: str


@dataclass(frozen=True)
class TokenizerOptions:
    command_whitelist: frozenset[str] = DEFAULT_COMMAND_WHITELIST
    split_multiletter: bool = True
    greek_aliases: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "TokenizerOptions":
        """Load options from a JSON config file; absent keys keep defaults."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        kwargs = {}
        if "command_whitelist" in data:
            kwargs["command_whitelist"] = frozenset(data["command_whitelist"])
        if "split_multiletter" in data:
            kwargs["split_multiletter"] = bool(data["split_multiletter"])
        if "greek_aliases" in data:
            kwargs["greek_aliases"] = dict(data["greek_aliases"])
        return cls(**kwargs)


DEFAULT_OPTIONS = TokenizerOptions()


# ---------------------------------------------------------------------------
# segment extraction


_MATH_OPEN_RE = re.compile(r"<math(?P<attrs>(?:\s[^>]*)?)>", re.IGNORECASE)
_DISPLAY_ATTR_RE = re.compile(r"""display\s*=\s*(?:"([^"]*)"|'([^']*)'|(\S+))""", re.IGNORECASE)
_QID_ATTR_RE = re.compile(r"""qid\s*=\s*(?:"(Q[0-9]+)"|'(Q[0-9]+)'|(Q[0-9]+))""", re.IGNORECASE)


def extract_math_segments(doc, issues: Optional[list] = None) -> list[MathSegment]:
    """Extract all math regions of ``doc`` in document order.

    Unbalanced delimiters are recorded in ``issues`` (when given) and
    extraction continues past them.
    """
    if issues is None:
        issues = []
    if doc.format == "wikitext":
        segments = _extract_wikitext(doc.body, issues)
    elif doc.format == "latex":
        segments = _extract_latex(doc.body, issues)
    else:
        raise ValueError(f"unknown document format: {doc.format!r}")
    return segments


def _extract_wikitext(body: str, issues: list) -> list[MathSegment]:
    segments = []
    pos = 0
    while True:
        m = _MATH_OPEN_RE.search(body, pos)
        if m is None:
            break
        close = body.find("</math>", m.end())
        if close == -1:
            issues.append(UnbalancedDelimiter((m.start(), m.end()), "<math> without closing tag"))
            pos = m.end()
            continue
        inner_open = _MATH_OPEN_RE.search(body, m.end(), close)
        if inner_open is not None:
            # tags do not nest; the outer opening has no close of its own
            issues.append(UnbalancedDelimiter((m.start(), m.end()), "<math> without closing tag"))
            pos = inner_open.start()
            continue
        attrs = m.group("attrs") or ""
        display = "inline"
        dm = _DISPLAY_ATTR_RE.search(attrs)
        if dm and next(g for g in dm.groups() if g is not None).lower() == "block":
            display = "block"
        qm = _QID_ATTR_RE.search(attrs)
        qid = next((g for g in qm.groups() if g is not None), None) if qm else None
        end = close + len("</math>")
        segments.append(
            MathSegment(
                segment_id=len(segments),
                raw_latex=body[m.end():close],
                span=(m.start(), end),
                display=display,
                existing_qid=qid,
            )
        )
        pos = end
    return segments


def _extract_latex(body: str, issues: list) -> list[MathSegment]:
    segments = []
    i, n = 0, len(body)

    def add(start, end, inner, display):
        segments.append(
            MathSegment(
                segment_id=len(segments),
                raw_latex=inner,
                span=(start, end),
                display=display,
            )
        )

    while i < n:
        c = body[i]
        if c == "\\" and body.startswith("\\[", i):
            close = body.find("\\]", i + 2)
            if close == -1:
                issues.append(UnbalancedDelimiter((i, i + 2), "\\[ without \\]"))
                i += 2
                continue
            add(i, close + 2, body[i + 2:close], "block")
            i = close + 2
        elif c == "\\" and i + 1 < n:
            i += 2  # escaped character, e.g. \$ -- never a delimiter
        elif body.startswith("$$", i):
            close = body.find("$$", i + 2)
            if close == -1:
                issues.append(UnbalancedDelimiter((i, i + 2), "$$ without closing $$"))
                i += 2
                continue
            add(i, close + 2, body[i + 2:close], "block")
            i = close + 2
        elif c == "$":
            close = _find_unescaped_dollar(body, i + 1)
            if close == -1:
                issues.append(UnbalancedDelimiter((i, i + 1), "$ without closing $"))
                i += 1
                continue
            add(i, close + 1, body[i + 1:close], "inline")
            i = close + 1
        else:
            i += 1
    return segments


def _find_unescaped_dollar(body: str, start: int) -> int:
    i = start
    while i < len(body):
        if body[i] == "\\":
            i += 2
            continue
        if body[i] == "$":
            return i
        i += 1
    return -1


# ---------------------------------------------------------------------------
# tokenizer


def tokenize_formula(
    raw_latex: str,
    options: Optional[TokenizerOptions] = None,
    segment_id: int = -1,
) -> TokenizedFormula:
    """Tokenize one formula string; total over arbitrary input.

    Token spans tile ``raw_latex`` without gaps or overlap.  ``=`` at
    brace depth zero marks the formula as an equation; relation signs
    inside sub/superscript arguments never do.
    """
    opts = options or DEFAULT_OPTIONS
    tokens: list[Token] = []
    issues: list[LexError] = []
    is_equation = False
    depth = 0
    i, n = 0, len(raw_latex)

    def emit(kind, start, end, symbol=None):
        tokens.append(Token(kind=kind, text=raw_latex[start:end], span=(start, end), symbol=symbol))

    while i < n:
        c = raw_latex[i]
        if c.isspace():
            j = i + 1
            while j < n and raw_latex[j].isspace():
                j += 1
            emit(IGNORED, i, j)
            i = j
        elif c == "\\":
            i = _lex_command(raw_latex, i, opts, emit, issues)
        elif c in "^_":
            j = _script_argument_end(raw_latex, i + 1)
            emit(IGNORED, i, j)
            i = j
        elif c == "{":
            depth += 1
            emit(IGNORED, i, i + 1)
            i += 1
        elif c == "}":
            depth = max(0, depth - 1)
            emit(IGNORED, i, i + 1)
            i += 1
        elif c in _ASCII_LETTERS:
            if opts.split_multiletter:
                emit(IDENTIFIER, i, i + 1, symbol=c)
                i += 1
            else:
                j = i + 1
                while j < n and raw_latex[j] in _ASCII_LETTERS:
                    j += 1
                emit(IDENTIFIER, i, j, symbol=raw_latex[i:j])
                i = j
        elif c.isdigit():
            j = i + 1
            while j < n and (
                raw_latex[j].isdigit()
                or (raw_latex[j] == "." and j + 1 < n and raw_latex[j + 1].isdigit())
            ):
                j += 1
            emit(NUMBER, i, j)
            i = j
        elif c == "=":
            emit(RELATION, i, i + 1)
            if depth == 0:
                is_equation = True
            i += 1
        elif c in "<>":
            emit(RELATION, i, i + 1)
            i += 1
        elif c in "+-*/()[]|":
            emit(OPERATOR, i, i + 1)
            i += 1
        else:
            # punctuation, primes, alignment marks, non-ASCII -- all ignored
            emit(IGNORED, i, i + 1)
            i += 1

    symbols = tuple(
        dict.fromkeys(t.symbol for t in tokens if t.kind == IDENTIFIER and t.symbol)
    )
    return TokenizedFormula(
        segment_id=segment_id,
        tokens=tuple(tokens),
        identifier_symbols=symbols,
        is_equation=is_equation,
        issues=tuple(issues),
    )


def _command_name_end(s: str, start: int) -> int:
    """End offset of the control sequence starting at ``start`` ('\\\\')."""
    j = start + 1
    if j < len(s) and s[j].isalpha():
        while j < len(s) and s[j].isalpha():
            j += 1
        return j
    return min(j + 1, len(s))


def _script_argument_end(s: str, j: int) -> int:
    """End of a sub/superscript argument beginning at ``j`` (marker excluded)."""
    n = len(s)
    while j < n and s[j].isspace():
        j += 1
    if j >= n:
        return n
    if s[j] == "{":
        end = _matching_brace(s, j)
        return end if end != -1 else n
    if s[j] == "\\":
        return _command_name_end(s, j)
    return j + 1


def _matching_brace(s: str, open_idx: int) -> int:
    """Offset one past the brace matching ``s[open_idx]``, or -1."""
    depth = 0
    i = open_idx
    n = len(s)
    while i < n:
        c = s[i]
        if c == "\\":
            i += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return -1


def _lex_command(s: str, i: int, opts: TokenizerOptions, emit, issues: list) -> int:
    n = len(s)
    j = _command_name_end(s, i)
    name = s[i + 1:j]
    if not name.isalpha():
        emit(IGNORED, i, j)  # \, \; \\ \{ and friends
        return j

    if name in GREEK_COMMANDS:
        canonical = "\\" + opts.greek_aliases.get(name, name)
        emit(IDENTIFIER, i, j, symbol=canonical)
        return j
    if name in opts.command_whitelist:
        emit(COMMAND, i, j)
        return j
    if name in _DECORATIONS:
        return _lex_decorated(s, i, j, opts, emit)
    if name in _DERIVATIVES:
        emit(IGNORED, i, j)
        return j
    if name in _RELATION_COMMANDS:
        emit(RELATION, i, j)
        return j
    if name in _OPERATOR_COMMANDS:
        emit(OPERATOR, i, j)
        return j
    if name in _TEXT_COMMANDS or name == "operatorname":
        k = j
        while k < n and s[k].isspace():
            k += 1
        end = j
        if k < n and s[k] == "{":
            close = _matching_brace(s, k)
            end = close if close != -1 else n
        emit(COMMAND if name == "operatorname" else IGNORED, i, end)
        return end
    if name in ("begin", "end"):
        end = j
        if j < n and s[j] == "{":
            close = _matching_brace(s, j)
            end = close if close != -1 else n
        emit(IGNORED, i, end)
        return end
    if name in _IGNORED_COMMANDS:
        emit(IGNORED, i, j)
        return j

    issues.append(LexError(position=i, text=s[i:j]))
    emit(IGNORED, i, j)
    return j


def _lex_decorated(s: str, i: int, j: int, opts: TokenizerOptions, emit) -> int:
    """Lex a decoration such as ``\\vec{x}`` into one identifier token."""
    n = len(s)
    k = j
    while k < n and s[k].isspace():
        k += 1
    if k < n and s[k] == "{":
        close = _matching_brace(s, k)
        if close != -1:
            inner = s[k + 1:close - 1].strip()
            if len(inner) == 1 and inner in _ASCII_LETTERS:
                emit(IDENTIFIER, i, close, symbol=inner)
                return close
            if inner.startswith("\\") and inner[1:] in GREEK_COMMANDS:
                canonical = "\\" + opts.greek_aliases.get(inner[1:], inner[1:])
                emit(IDENTIFIER, i, close, symbol=canonical)
                return close
        emit(IGNORED, i, j)  # group is not a single identifier; lex it normally
        return j
    if k < n and s[k] == "\\":
        end = _command_name_end(s, k)
        inner = s[k + 1:end]
        if inner in GREEK_COMMANDS:
            canonical = "\\" + opts.greek_aliases.get(inner, inner)
            emit(IDENTIFIER, i, end, symbol=canonical)
            return end
        emit(IGNORED, i, j)
        return j
    if k < n and s[k] in _ASCII_LETTERS:
        emit(IDENTIFIER, i, k + 1, symbol=s[k])
        return k + 1
    emit(IGNORED, i, j)
    return j


# ---------------------------------------------------------------------------
# canonical form


def canonicalize_latex(raw_latex: str) -> str:
    """Deterministic normal form used for formula string comparison.

    Rules: drop thin-space macros (``\\,`` ``\\;`` ``\\!``) and all
    whitespace; rewrite ``\\mathbf`` to ``\\vec`` and normalize the
    decoration argument to braced form (``\\vec v`` == ``\\vec{v}``);
    unwrap single-character brace groups elsewhere.  Everything else is
    preserved byte-for-byte.  Idempotent and total.
    """
    out: list[str] = []
    i, n = 0, len(raw_latex)
    s = raw_latex
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
            continue
        if c == "\\":
            j = _command_name_end(s, i)
            name = s[i + 1:j]
            if not name.isalpha():
                if name in (",", ";", "!"):
                    i = j
                    continue
                out.append(s[i:j])
                i = j
                continue
            if name == "mathbf":
                name = "vec"
            if name == "vec":
                k = j
                while k < n and s[k].isspace():
                    k += 1
                if k < n and s[k] == "{":
                    close = _matching_brace(s, k)
                    if close != -1:
                        out.append("\\vec{" + canonicalize_latex(s[k + 1:close - 1]) + "}")
                        i = close
                        continue
                elif k < n and s[k] == "\\":
                    end = _command_name_end(s, k)
                    out.append("\\vec{" + s[k:end] + "}")
                    i = end
                    continue
                elif k < n:
                    out.append("\\vec{" + s[k] + "}")
                    i = k + 1
                    continue
                out.append("\\vec")
                i = k
                continue
            out.append("\\" + name)
            i = j
            continue
        if c == "{":
            close = _matching_brace(s, i)
            if close == -1:
                out.append(c)
                i += 1
                continue
            inner = canonicalize_latex(s[i + 1:close - 1])
            out.append(inner if len(inner) == 1 else "{" + inner + "}")
            i = close
            continue
        out.append(c)
        i += 1
    return "".join(out)
