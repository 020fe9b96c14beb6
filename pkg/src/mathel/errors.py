"""Exception types shared across the workbench modules."""

from __future__ import annotations


class MathelError(Exception):
    """Base class for all workbench errors."""


# --- catalog / document ingestion ---

class FileMissing(MathelError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = path


class SchemaViolation(MathelError):
    """Input file does not match the expected schema."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InvalidQid(SchemaViolation):
    def __init__(self, qid, line_no=None):
        super().__init__(f"invalid QID {qid!r} (expected Q[0-9]+)", line_no)
        self.qid = qid


class DuplicateQid(MathelError):
    def __init__(self, qid):
        super().__init__(f"duplicate catalog QID {qid}")
        self.qid = qid


class NetworkError(MathelError):
    pass


class NotFound(MathelError):
    def __init__(self, title):
        super().__init__(f"article not found: {title!r}")
        self.title = title


class RateLimited(NetworkError):
    def __init__(self, retry_after=None):
        super().__init__(f"rate limited (retry-after: {retry_after})")
        self.retry_after = retry_after


# --- annotation session ---

class UnknownTarget(MathelError):
    def __init__(self, target):
        super().__init__(f"no such annotation target: {target}")
        self.target = target


class AlreadyAnnotated(MathelError):
    def __init__(self, target):
        super().__init__(f"target already annotated: {target}")
        self.target = target


class NotAnnotated(MathelError):
    def __init__(self, target):
        super().__init__(f"target carries no annotation: {target}")
        self.target = target


class AlreadyRejected(MathelError):
    def __init__(self, target):
        super().__init__(f"target was rejected: {target}")
        self.target = target


class VersionMismatch(MathelError):
    def __init__(self, found, supported):
        super().__init__(f"session file version {found} not supported (expected {supported})")
        self.found = found
        self.supported = supported


# --- link export ---

class MalformedTag(MathelError):
    def __init__(self, segment_id, detail=""):
        super().__init__(f"segment {segment_id}: cannot edit opening tag {detail}".rstrip())
        self.segment_id = segment_id


class QidFormatError(MathelError):
    def __init__(self, qid):
        super().__init__(f"not a well-formed QID: {qid!r}")
        self.qid = qid
