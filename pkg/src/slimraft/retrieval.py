"""Lexical retrieval over nomenclature entries and RAG prompt assembly.

Entries are indexed under the tokens of their description plus their plain
and dotted code forms. Scoring is TF-IDF with cosine length normalization;
ties break by ascending code digits so rankings are fully deterministic.
"""

from __future__ import annotations

import json
import logging
import math
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyTableError, SnapshotError, SnapshotVersionError
from .nomenclature import (
    NcmCode,
    NomenclatureEntry,
    NomenclatureTable,
    build_table,
    category_path,
    format_code,
)
from .prompting import render_user_message

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "slimraft-index"
SNAPSHOT_VERSION = 1
DEFAULT_K = 3

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, fold accents (NFD strip) and split on non-alphanumerics."""
    folded = unicodedata.normalize("NFD", text.lower())
    folded = "".join(ch for ch in folded if not unicodedata.combining(ch))
    return _TOKEN_RE.findall(folded)


def document_tokens(entry: NomenclatureEntry) -> list[str]:
    """Index tokens of an entry: its description plus both code renderings."""
    return tokenize(
        f"{entry.description} {format_code(entry.code)} {format_code(entry.code, 'dotted')}"
    )


@dataclass(frozen=True)
class ContextDocument:
    """One retrieved hit, rendered as a single argument line."""

    text: str
    source_code: NcmCode
    score: float

    def __post_init__(self):
        if not self.text:
            raise ValueError("context document text must be non-empty")
        if not math.isfinite(self.score) or self.score < 0:
            raise ValueError(f"bad score {self.score}")


@dataclass
class LexicalIndex:
    """Immutable after build; concurrent searches are safe."""

    table: NomenclatureTable
    postings: dict[str, list[tuple[str, float]]]
    doc_count: int
    doc_lengths: dict[str, int]
    doc_norms: dict[str, float]
    idf: dict[str, float] = field(default_factory=dict)


def _idf(doc_count: int, document_frequency: int) -> float:
    # Smoothed so that tokens present in every document still carry weight.
    return math.log((1 + doc_count) / (1 + document_frequency)) + 1.0


def build_index(table: NomenclatureTable) -> LexicalIndex:
    """Index every entry of a non-empty table."""
    if not table.entries:
        raise EmptyTableError("cannot index an empty nomenclature table")
    token_counts: dict[str, dict[str, int]] = {}
    document_frequency: dict[str, int] = {}
    doc_lengths: dict[str, int] = {}
    for key, entry in table.entries.items():
        tokens = document_tokens(entry)
        doc_lengths[key] = len(tokens)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        token_counts[key] = counts
        for token in counts:
            document_frequency[token] = document_frequency.get(token, 0) + 1

    doc_count = len(table.entries)
    idf = {
        token: _idf(doc_count, frequency)
        for token, frequency in document_frequency.items()
    }
    postings: dict[str, list[tuple[str, float]]] = {}
    doc_norms: dict[str, float] = {}
    for key in sorted(token_counts):
        counts = token_counts[key]
        # Sorted token order keeps float accumulation reproducible, so a
        # naive full-scan scorer lands on bit-identical norms and scores.
        norm_sq = 0.0
        for token in sorted(counts):
            weight = counts[token] * idf[token]
            postings.setdefault(token, []).append((key, weight))
            norm_sq += weight * weight
        doc_norms[key] = math.sqrt(norm_sq)
    return LexicalIndex(
        table=table,
        postings=postings,
        doc_count=doc_count,
        doc_lengths=doc_lengths,
        doc_norms=doc_norms,
        idf=idf,
    )


def render_hit(entry: NomenclatureEntry, table: NomenclatureTable) -> str:
    """Collapse a hit into one argument line.

    The line asserts the entry's code, gives its full category description,
    and, for entries below heading level, names the heading it belongs to.
    """
    code = entry.code.digits
    path = category_path(entry.code, table).rendered
    line = f"a categoria {code} possui a seguinte descrição: {path} tem código: {code}"
    heading = table.get(code[:4]) if len(code) > 4 else None
    if heading is not None:
        line += f" e tem posição: {heading.description}"
    return line


def search(index: LexicalIndex, query: str, k: int = DEFAULT_K) -> list[ContextDocument]:
    """Top-k entries by TF-IDF cosine score; ties break by ascending code.

    k = 0 or a query with no indexable tokens yields an empty list (the
    latter with a logged warning). Entries sharing no token with the query
    are never returned.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    query_tokens = tokenize(query)
    if not query_tokens:
        logger.warning("query %r has no indexable tokens", query)
        return []
    counts: dict[str, int] = {}
    for token in query_tokens:
        counts[token] = counts.get(token, 0) + 1

    scores: dict[str, float] = {}
    query_norm_sq = 0.0
    for token in sorted(counts):
        idf = index.idf.get(token)
        if idf is None:
            continue
        query_weight = counts[token] * idf
        query_norm_sq += query_weight * query_weight
        for key, doc_weight in index.postings[token]:
            scores[key] = scores.get(key, 0.0) + query_weight * doc_weight
    if not scores:
        return []
    query_norm = math.sqrt(query_norm_sq)

    ranked = sorted(
        (
            (dot / (index.doc_norms[key] * query_norm), key)
            for key, dot in scores.items()
        ),
        key=lambda pair: (-pair[0], pair[1]),
    )
    hits = []
    for score, key in ranked[:k]:
        entry = index.table.entries[key]
        hits.append(
            ContextDocument(
                text=render_hit(entry, index.table),
                source_code=entry.code,
                score=score,
            )
        )
    return hits


def assemble_prompt(
    docs: list[ContextDocument], question: str, instruction: str
) -> str:
    """Build the inference-time user message, byte-compatible with training."""
    if not question:
        raise ValueError("question must be non-empty")
    return render_user_message([doc.text for doc in docs], instruction, question)


# --- snapshot persistence -----------------------------------------------------


def save_snapshot(index: LexicalIndex, destination: str | Path) -> Path:
    """Persist the indexed entry set with a format-version header.

    Postings and norms are derived data and are rebuilt deterministically on
    load, so the snapshot stays small and cannot drift out of sync.
    """
    path = Path(destination)
    payload = {
        "format": SNAPSHOT_FORMAT,
        "format_version": SNAPSHOT_VERSION,
        "source_id": index.table.source_id,
        "entries": [
            {"code": key, "description": index.table.entries[key].description}
            for key in sorted(index.table.entries)
        ],
    }
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )
    return path


def load_snapshot(source: str | Path) -> LexicalIndex:
    """Load a snapshot, rejecting unknown formats or mismatched versions."""
    path = Path(source)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: not a valid snapshot: {exc}") from exc
    if payload.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{path}: not a {SNAPSHOT_FORMAT} snapshot")
    version = payload.get("format_version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotVersionError(
            f"{path}: snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})"
        )
    entries = [
        NomenclatureEntry(code=NcmCode(item["code"]), description=item["description"])
        for item in payload.get("entries", [])
    ]
    table = build_table(entries, source_id=payload.get("source_id", str(path)))
    return build_index(table)
