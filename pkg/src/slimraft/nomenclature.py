"""Hierarchical HS/NCM classification codes and their description table.

Codes are strings of 2, 4, 6, 7 or 8 digits (chapter, heading, subheading,
item, sub-item). The first two digits identify the chapter and must fall in
01-97. A nomenclature table maps codes to official descriptions; deeper
entries are expected to have their chapter and heading ancestors present.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

from .errors import (
    ChapterOutOfRangeError,
    DuplicateCodeError,
    InvalidLengthError,
    NonDigitError,
    TableParseError,
    MissingAncestorError,
    UnknownCodeError,
)

logger = logging.getLogger(__name__)

VALID_LENGTHS = (2, 4, 6, 7, 8)
CHAPTER_MIN, CHAPTER_MAX = 1, 97


class Level(enum.Enum):
    """Depth of a code; the value is its digit count."""

    CHAPTER = 2
    HEADING = 4
    SUBHEADING = 6
    ITEM = 7
    SUB_ITEM = 8

    @classmethod
    def for_length(cls, length: int) -> "Level":
        try:
            return cls(length)
        except ValueError:
            raise InvalidLengthError(
                f"code length {length} not one of {VALID_LENGTHS}"
            ) from None


@dataclass(frozen=True)
class NcmCode:
    """A validated classification code, stored as plain digits."""

    digits: str

    def __post_init__(self):
        if not self.digits.isascii() or not self.digits.isdigit():
            raise NonDigitError(f"code {self.digits!r} contains non-digit characters")
        Level.for_length(len(self.digits))
        chapter = int(self.digits[:2])
        if not CHAPTER_MIN <= chapter <= CHAPTER_MAX:
            raise ChapterOutOfRangeError(
                f"chapter {self.digits[:2]} outside 01-{CHAPTER_MAX:02d}"
            )

    @property
    def level(self) -> Level:
        return Level(len(self.digits))

    def __str__(self) -> str:
        return self.digits


def parse_code(text: str) -> NcmCode:
    """Parse a raw code string, accepting dotted or plain digit forms.

    Raises InvalidLengthError, NonDigitError or ChapterOutOfRangeError.
    """
    if not text or not text.strip():
        raise NonDigitError("empty code string")
    cleaned = text.strip().replace(".", "")
    return NcmCode(cleaned)


def format_code(code: NcmCode, style: Literal["plain", "dotted"] = "plain") -> str:
    """Render a code as plain digits or in the canonical dotted grouping.

    Dotted style inserts dots after the 4th and 6th digits when digits
    follow them ("22041010" -> "2204.10.10", "0101211" -> "0101.21.1");
    chapter and heading codes have no dot positions and render verbatim.
    """
    if style == "plain":
        return code.digits
    if style == "dotted":
        d = code.digits
        parts = [d[:4], d[4:6], d[6:]]
        return ".".join(p for p in parts if p)
    raise ValueError(f"unknown style {style!r}")


def ancestors(code: NcmCode) -> list[NcmCode]:
    """All strict prefixes of a code at valid levels, shallowest first."""
    return [
        NcmCode(code.digits[:length])
        for length in VALID_LENGTHS
        if length < len(code.digits)
    ]


@dataclass(frozen=True)
class NomenclatureEntry:
    """One table row: a code and its original-language description.

    Leading dashes in descriptions (used by the official lists to denote
    depth) are preserved verbatim.
    """

    code: NcmCode
    description: str

    def __post_init__(self):
        if not self.description.strip():
            raise TableParseError(0, f"empty description for code {self.code}")


@dataclass(frozen=True)
class CategoryPath:
    """Ancestor-chain descriptions from chapter down to the entry itself."""

    segments: tuple[str, ...]

    @property
    def rendered(self) -> str:
        return " - ".join(self.segments)


@dataclass(frozen=True)
class NomenclatureTable:
    """Immutable code -> entry map; safe for concurrent reads after load."""

    entries: dict[str, NomenclatureEntry] = field(default_factory=dict)
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, code: NcmCode | str) -> bool:
        return self._key(code) in self.entries

    def get(self, code: NcmCode | str) -> NomenclatureEntry | None:
        return self.entries.get(self._key(code))

    def level_histogram(self) -> dict[str, int]:
        histogram: dict[str, int] = {}
        for entry in self.entries.values():
            name = entry.code.level.name
            histogram[name] = histogram.get(name, 0) + 1
        return histogram

    @staticmethod
    def _key(code: NcmCode | str) -> str:
        return code.digits if isinstance(code, NcmCode) else code


def build_table(entries: Iterable[NomenclatureEntry], source_id: str = "") -> NomenclatureTable:
    """Assemble a table from entries, rejecting duplicate codes."""
    mapping: dict[str, NomenclatureEntry] = {}
    for entry in entries:
        key = entry.code.digits
        if key in mapping:
            raise DuplicateCodeError(f"duplicate code {key}")
        mapping[key] = entry
    return NomenclatureTable(entries=mapping, source_id=source_id)


def check_integrity(table: NomenclatureTable) -> list[str]:
    """Report entries deeper than chapter whose 2- or 4-digit ancestor is absent."""
    violations = []
    for key in sorted(table.entries):
        for length in (2, 4):
            if len(key) > length and key[:length] not in table.entries:
                violations.append(f"code {key} missing ancestor {key[:length]}")
    return violations


def load_table(source: str | Path, strict: bool = False) -> NomenclatureTable:
    """Load a `code,description` delimited file into a table.

    Codes may be dotted or plain. In strict mode a missing chapter/heading
    ancestor raises MissingAncestorError; in lenient mode it is logged as a
    warning. An empty file yields an empty table with a warning.
    """
    path = Path(source)
    entries: list[NomenclatureEntry] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            logger.warning("nomenclature file %s is empty", path)
            return NomenclatureTable(source_id=str(path))
        fields = [name.strip().lower() for name in reader.fieldnames]
        if "code" not in fields or "description" not in fields:
            raise TableParseError(1, "header must contain `code` and `description`")
        code_col = reader.fieldnames[fields.index("code")]
        desc_col = reader.fieldnames[fields.index("description")]
        for row_number, row in enumerate(reader, start=2):
            raw_code = (row.get(code_col) or "").strip()
            description = (row.get(desc_col) or "").strip()
            if not raw_code and not description:
                continue
            try:
                code = parse_code(raw_code)
            except Exception as exc:
                raise TableParseError(row_number, f"bad code {raw_code!r}: {exc}") from exc
            if not description:
                raise TableParseError(row_number, f"empty description for code {raw_code!r}")
            entries.append(NomenclatureEntry(code=code, description=description))
    if not entries:
        logger.warning("nomenclature file %s has no data rows", path)
    table = build_table(entries, source_id=str(path))
    violations = check_integrity(table)
    if violations:
        if strict:
            raise MissingAncestorError(
                f"{len(violations)} integrity violation(s); first: {violations[0]}"
            )
        for violation in violations:
            logger.warning("nomenclature integrity: %s", violation)
    return table


def category_path(code: NcmCode, table: NomenclatureTable) -> CategoryPath:
    """Concatenate the descriptions of a code's present ancestors plus its own.

    Ancestor levels absent from the table (typically the 7-digit item level)
    are skipped silently.
    """
    own = table.get(code)
    if own is None:
        raise UnknownCodeError(f"code {code} not in table {table.source_id or '<memory>'}")
    segments = [
        table.get(ancestor).description  # type: ignore[union-attr]
        for ancestor in ancestors(code)
        if ancestor in table
    ]
    segments.append(own.description)
    return CategoryPath(segments=tuple(segments))
