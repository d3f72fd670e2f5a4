"""Exception hierarchy shared across the toolchain.

Every error carries an ``exit_code`` so the CLI and the HTTP service can map
failures onto the stable scripting contract: 1 for domain-level failures,
2 for input/IO failures.
"""

from __future__ import annotations


class SlimRaftError(Exception):
    """Base class for all toolchain errors (domain-level by default)."""

    exit_code = 1


class InputError(SlimRaftError):
    """Unreadable, unparsable, or structurally invalid input."""

    exit_code = 2


class DomainError(SlimRaftError):
    """Input parsed fine but the pipeline cannot proceed with it."""

    exit_code = 1


# --- nomenclature ---------------------------------------------------------


class CodeError(InputError):
    """A classification code string is not valid."""


class InvalidLengthError(CodeError):
    pass


class NonDigitError(CodeError):
    pass


class ChapterOutOfRangeError(CodeError):
    pass


class TableParseError(InputError):
    """A nomenclature file row could not be parsed."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class DuplicateCodeError(InputError):
    pass


class MissingAncestorError(DomainError):
    """Strict-mode table with an entry whose ancestor prefix is absent."""


class UnknownCodeError(DomainError):
    """A code was looked up that the loaded table does not contain."""


# --- templates / corpus ----------------------------------------------------


class TemplateError(InputError):
    pass


class UnknownPlaceholderError(TemplateError):
    def __init__(self, name: str, template_id: str):
        super().__init__(f"unknown placeholder {{{{{name}}}}} in template {template_id!r}")
        self.name = name
        self.template_id = template_id


class DuplicateTemplateIdError(TemplateError):
    pass


class EmptyTemplateSetError(TemplateError):
    pass


class RecordError(InputError):
    """A product record row is structurally invalid."""


class ResidualPlaceholderError(DomainError):
    """Rendered output still contains placeholder braces (internal guard)."""


class CorpusGenerationError(DomainError):
    """Rendering failed for one (template, record) pair."""

    def __init__(self, template_id: str, record_id: str, cause: Exception):
        super().__init__(
            f"template {template_id!r}, record {record_id!r}: {cause}"
        )
        self.template_id = template_id
        self.record_id = record_id
        self.cause = cause


class HoldoutTooLargeError(DomainError):
    pass


# --- retrieval -------------------------------------------------------------


class EmptyTableError(DomainError):
    pass


class SnapshotError(DomainError):
    """Index snapshot missing or unreadable."""


class SnapshotVersionError(SnapshotError):
    pass


# --- clients / evaluation --------------------------------------------------


class ClientError(DomainError):
    """Chat-completion client gave up after exhausting its retry budget."""


class BudgetExhaustedError(DomainError):
    """Could not collect enough conforming generations within the budget."""


class UnparsableVerdictError(DomainError):
    pass


class NonCanonicalOutputError(DomainError):
    pass


class EmptyVerdictSetError(DomainError):
    pass


class EmptyItemSetError(InputError):
    pass


class TotalEvalFailureError(SlimRaftError):
    """Every item failed judging; by contract this exits with code 2."""

    exit_code = 2


class ConfigError(InputError):
    pass
