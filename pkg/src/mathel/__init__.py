"""Mathematical entity linking workbench.

Parses math out of Wikitext/LaTeX documents, recommends names and
knowledge-base QIDs for formulae and identifiers from ranked sources,
manages annotation sessions with undo and timing capture, evaluates
source performance (CG/DCG) and annotation speedup, and exports
qid-linked Wikitext plus a knowledge-base seeding list.
"""

from .errors import (
    AlreadyAnnotated,
    AlreadyRejected,
    DuplicateQid,
    FileMissing,
    InvalidQid,
    MalformedTag,
    MathelError,
    NetworkError,
    NotAnnotated,
    NotFound,
    QidFormatError,
    RateLimited,
    SchemaViolation,
    UnknownTarget,
    VersionMismatch,
)
from .evaluation import (
    PositionHistogram,
    TimingSummary,
    cg,
    dcg,
    qid_coverage,
    source_report,
    timing_report,
)
from .ingest import (
    FcMemory,
    FormulaCatalog,
    FormulaItem,
    IdentifierCandidate,
    IdentifierCatalog,
    RawDocument,
    UserInputStore,
    fetch_article,
    load_fc_memory,
    load_formula_catalog,
    load_identifier_catalog,
    save_fc_memory,
)
from .linker import (
    LinkStats,
    SeedEntry,
    export_annotations,
    insert_qid_links,
    seeding_list,
    write_seeding_list,
)
from .parsing import (
    MathSegment,
    Token,
    TokenizedFormula,
    TokenizerOptions,
    canonicalize_latex,
    extract_math_segments,
    tokenize_formula,
)
from .recommend import (
    RecommendationCandidate,
    RecommendationSet,
    fc_memory_lookup,
    fuzzy_match,
    parts_overlap,
    presentation_order,
    recommend_formula,
    recommend_identifier,
    word_window,
)
from .session import (
    Annotation,
    AnnotationEvent,
    SessionState,
    TargetRef,
    create_session,
    load_session,
    save_session,
)

__version__ = "0.1.0"
