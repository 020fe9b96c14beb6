"""Command-line entry points: evaluation reports, link transfer, seeding
list generation, and the HTTP service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation
from .ingest import FcMemory, load_fc_memory, load_formula_catalog
from .linker import insert_qid_links, seeding_list, write_seeding_list
from .parsing import TokenizerOptions, canonicalize_latex, extract_math_segments
from .session import SessionState, load_session
from .ingest import fetch_article


def _load_sessions(directory: str) -> list[SessionState]:
    sessions = []
    for path in sorted(Path(directory).glob("*.json")):
        sessions.append(load_session(path))
    return sessions


def cmd_report(args) -> int:
    sessions = _load_sessions(args.sessions)
    events = [event for session in sessions for event in session.events]
    source = evaluation.source_report(events)
    timing = evaluation.timing_report(events)
    coverage = evaluation.qid_coverage(sessions)
    if args.format == "json":
        print(json.dumps(evaluation.report_to_dict(source, timing, coverage), indent=2))
    else:
        print(evaluation.render_text_report(source, timing, coverage))
    return 0


def match_annotations_to_segments(session: SessionState, segments) -> dict[int, str]:
    """Map formula annotations onto segments by canonical LaTeX string."""
    by_canonical = {}
    for annotation in session.effective_annotations():
        if annotation.target.kind == "formula" and annotation.qid:
            raw = session.segments[annotation.target.segment_id].raw_latex
            by_canonical.setdefault(canonicalize_latex(raw), annotation.qid)
    matched = {}
    for segment in segments:
        qid = by_canonical.get(canonicalize_latex(segment.raw_latex))
        if qid is not None:
            matched[segment.segment_id] = qid
    return matched


def cmd_link(args) -> int:
    session = load_session(args.session)
    if args.article:
        doc = fetch_article(Path(args.article).stem, args.article)
        segments = extract_math_segments(doc)
        annotations = match_annotations_to_segments(session, segments)
    else:
        doc = session.doc
        segments = session.segments
        annotations = {
            a.target.segment_id: a.qid
            for a in session.effective_annotations()
            if a.target.kind == "formula" and a.qid
        }
    options = TokenizerOptions.from_file(args.tokenizer_config) if args.tokenizer_config else None
    wikitext, stats = insert_qid_links(
        doc,
        segments,
        annotations,
        quote_attrs=args.quote_attrs,
        block_only=args.block_only,
        tokenizer_options=options,
    )
    print(
        f"candidates={stats.candidates} linked={stats.linked} "
        f"skipped_duplicates={stats.skipped_duplicates} "
        f"skipped_non_equation={stats.skipped_non_equation}"
    )
    if not args.dry_run:
        if args.out:
            Path(args.out).write_text(wikitext, encoding="utf-8")
        else:
            sys.stdout.write(wikitext)
    return 0


def cmd_seed(args) -> int:
    sessions = _load_sessions(args.sessions)
    catalog = load_formula_catalog(args.catalog)
    memory = load_fc_memory(args.memory) if args.memory else FcMemory()
    entries = seeding_list(sessions, catalog, memory)
    write_seeding_list(entries, args.out)
    print(f"wrote {len(entries)} seeding entries to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import AppConfig, create_app

    config = AppConfig.from_file(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.fuzzy_threshold is not None:
        config.fuzzy_threshold = args.fuzzy_threshold
    if args.cutoff is not None:
        config.cutoff = args.cutoff
    if args.eval_seed is not None:
        config.eval_seed = args.eval_seed
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mathel")
    sub = parser.add_subparsers(dest="command", required=True)

    p_report = sub.add_parser("report", help="evaluation reports from saved sessions")
    p_report.add_argument("--sessions", required=True, help="directory of session JSON files")
    p_report.add_argument("--format", choices=("json", "table"), default="table")
    p_report.set_defaults(func=cmd_report)

    p_link = sub.add_parser("link", help="insert qid attributes into Wikitext")
    p_link.add_argument("--article", help="article file; defaults to the session document")
    p_link.add_argument("--session", required=True, help="session JSON file")
    p_link.add_argument("--out", help="output file (stdout when omitted)")
    p_link.add_argument("--dry-run", action="store_true", help="print stats only")
    p_link.add_argument("--block-only", action="store_true", help="link block equations only")
    p_link.add_argument("--quote-attrs", action="store_true", help='emit qid="QNNN"')
    p_link.add_argument("--tokenizer-config", help="tokenizer options JSON file")
    p_link.set_defaults(func=cmd_link)

    p_seed = sub.add_parser("seed", help="generate the knowledge-base seeding list")
    p_seed.add_argument("--sessions", required=True, help="directory of session JSON files")
    p_seed.add_argument("--catalog", required=True, help="formula catalog JSON")
    p_seed.add_argument("--memory", help="formula-concept memory JSON")
    p_seed.add_argument("--out", default="seeding.tsv")
    p_seed.set_defaults(func=cmd_seed)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--config", help="service config JSON file")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--fuzzy-threshold", type=float, dest="fuzzy_threshold")
    p_serve.add_argument("--cutoff", type=int)
    p_serve.add_argument("--eval-seed", type=int, dest="eval_seed")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
