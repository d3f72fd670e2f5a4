"""Fine-tuning corpus construction from expert templates and product records.

A template holds context/question/answer masks over the placeholder
vocabulary ``{{product}}``, ``{{NCM}}`` and ``{{category}}``. Each template is
paired with paraphrase variants of its question mask (the original mask counts
as variant #1), and every (template, variant, record) triple renders one
two-message chat record, giving exactly q x v x n records overall.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .clients import ChatClient
from .errors import (
    BudgetExhaustedError,
    CorpusGenerationError,
    DuplicateTemplateIdError,
    EmptyTemplateSetError,
    HoldoutTooLargeError,
    RecordError,
    ResidualPlaceholderError,
    TemplateError,
    UnknownPlaceholderError,
)
from .nomenclature import Level, NcmCode, NomenclatureTable, category_path, parse_code
from .prompting import DEFAULT_INSTRUCTION, canonicalize, render_user_message

logger = logging.getLogger(__name__)

PLACEHOLDER_NAMES = ("product", "NCM", "category")
MAX_DESCRIPTION_LENGTH = 120

_PLACEHOLDER_RE = re.compile(r"\{\{([^{}]*)\}\}")


def _validate_mask(mask: str, template_id: str, allow_newlines: bool = True) -> None:
    """Check placeholder vocabulary and brace balance of one mask."""
    for name in _PLACEHOLDER_RE.findall(mask):
        if name not in PLACEHOLDER_NAMES:
            raise UnknownPlaceholderError(name, template_id)
    stripped = _PLACEHOLDER_RE.sub("", mask)
    if "{{" in stripped or "}}" in stripped:
        raise TemplateError(
            f"unbalanced placeholder braces in template {template_id!r}: {mask!r}"
        )
    if not allow_newlines and ("\n" in mask or "\r" in mask):
        raise TemplateError(
            f"line break inside context mask of template {template_id!r}"
        )


def mask_placeholders(mask: str) -> set[str]:
    """Placeholder names used by a mask."""
    return set(_PLACEHOLDER_RE.findall(mask))


@dataclass(frozen=True)
class QaTemplate:
    """Expert-authored masks for one question-and-answer unit."""

    id: str
    context_masks: tuple[str, ...]
    question_mask: str
    answer_mask: str

    def __post_init__(self):
        if not self.id:
            raise TemplateError("template id must be non-empty")
        if not self.context_masks:
            raise TemplateError(f"template {self.id!r} has no context masks")
        if not self.question_mask or not self.answer_mask:
            raise TemplateError(f"template {self.id!r} has empty question or answer mask")
        for mask in self.context_masks:
            _validate_mask(mask, self.id, allow_newlines=False)
        _validate_mask(self.question_mask, self.id)
        _validate_mask(self.answer_mask, self.id)


@dataclass(frozen=True)
class VariationSet:
    """Paraphrase masks of one template's question; may be empty (v = 1)."""

    template_id: str
    question_variants: tuple[str, ...] = ()

    def __post_init__(self):
        for variant in self.question_variants:
            _validate_mask(variant, self.template_id)
        normalized = [canonicalize(v) for v in self.question_variants]
        if len(set(normalized)) != len(normalized):
            raise TemplateError(
                f"variation set for {self.template_id!r} has duplicate variants"
            )


@dataclass(frozen=True)
class ProductRecord:
    """One labeled product: short description plus its full 8-digit code."""

    id: str
    description: str
    ncm_code: NcmCode

    def __post_init__(self):
        if not self.description.strip():
            raise RecordError(f"record {self.id!r} has an empty description")
        if len(self.description) > MAX_DESCRIPTION_LENGTH:
            raise RecordError(
                f"record {self.id!r} description exceeds {MAX_DESCRIPTION_LENGTH} characters"
            )
        if "\n" in self.description or "\r" in self.description:
            raise RecordError(f"record {self.id!r} description contains a line break")
        if self.ncm_code.level is not Level.SUB_ITEM:
            raise RecordError(
                f"record {self.id!r} code {self.ncm_code} is not a full 8-digit sub-item"
            )


@dataclass(frozen=True)
class Message:
    content: str
    role: str

    def as_dict(self) -> dict[str, str]:
        return {"content": self.content, "role": self.role}


@dataclass(frozen=True)
class TrainingRecord:
    """Exactly one user message followed by one assistant message."""

    messages: tuple[Message, Message]

    def __post_init__(self):
        roles = [message.role for message in self.messages]
        if roles != ["user", "assistant"]:
            raise ResidualPlaceholderError(f"bad message roles {roles}")
        for message in self.messages:
            if "{{" in message.content or "}}" in message.content:
                raise ResidualPlaceholderError(
                    f"unrendered placeholder in {message.role} message"
                )

    def to_json(self) -> str:
        return json.dumps(
            {"messages": [message.as_dict() for message in self.messages]},
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class CorpusPlan:
    """Corpus arithmetic: q templates x v variants x n records = total."""

    q: int
    v: int
    n: int

    @property
    def total(self) -> int:
        return self.q * self.v * self.n

    def as_dict(self) -> dict[str, int]:
        return {"q": self.q, "v": self.v, "n": self.n, "N": self.total}


# --- loading ----------------------------------------------------------------


def load_templates(source: str | Path) -> list[QaTemplate]:
    """Load a JSON list of {id, context_masks, question_mask, answer_mask}."""
    path = Path(source)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise TemplateError(f"{path}: expected a JSON list of templates")
    if not raw:
        raise EmptyTemplateSetError(f"{path}: template list is empty")
    templates = []
    seen: set[str] = set()
    for item in raw:
        if not isinstance(item, dict):
            raise TemplateError(f"{path}: template entries must be objects")
        masks = item.get("context_masks", ())
        if not isinstance(masks, list) or not all(isinstance(m, str) for m in masks):
            raise TemplateError(f"{path}: context_masks must be a list of strings")
        question_mask = item.get("question_mask", "")
        answer_mask = item.get("answer_mask", "")
        if not isinstance(question_mask, str) or not isinstance(answer_mask, str):
            raise TemplateError(f"{path}: question_mask and answer_mask must be strings")
        template = QaTemplate(
            id=str(item.get("id", "")),
            context_masks=tuple(masks),
            question_mask=question_mask,
            answer_mask=answer_mask,
        )
        if template.id in seen:
            raise DuplicateTemplateIdError(f"duplicate template id {template.id!r}")
        seen.add(template.id)
        templates.append(template)
    return templates


def load_variations(source: str | Path) -> dict[str, VariationSet]:
    """Load a JSON map template_id -> [question variants]."""
    path = Path(source)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise TemplateError(f"{path}: expected a JSON object mapping id -> variants")
    variation_sets = {}
    for template_id, variants in raw.items():
        if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
            raise TemplateError(f"{path}: variants for {template_id!r} must be a list of strings")
        variation_sets[template_id] = VariationSet(
            template_id=template_id, question_variants=tuple(variants)
        )
    return variation_sets


def load_records(source: str | Path) -> list[ProductRecord]:
    """Load a `id,description,ncm_code` delimited file of product records."""
    import csv

    path = Path(source)
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        fields = [name.strip().lower() for name in reader.fieldnames]
        for required in ("id", "description", "ncm_code"):
            if required not in fields:
                raise RecordError(f"{path}: header must contain `{required}`")
        id_col = reader.fieldnames[fields.index("id")]
        desc_col = reader.fieldnames[fields.index("description")]
        code_col = reader.fieldnames[fields.index("ncm_code")]
        for row_number, row in enumerate(reader, start=2):
            record_id = (row.get(id_col) or "").strip()
            description = (row.get(desc_col) or "").strip()
            raw_code = (row.get(code_col) or "").strip()
            if not record_id and not description and not raw_code:
                continue
            try:
                code = parse_code(raw_code)
            except Exception as exc:
                raise RecordError(f"{path} row {row_number}: bad code {raw_code!r}: {exc}") from exc
            records.append(ProductRecord(id=record_id, description=description, ncm_code=code))
    return records


# --- variation generation ----------------------------------------------------

VARIATION_PROMPT = (
    "Reescreva a pergunta abaixo com outras palavras, mantendo exatamente os "
    "marcadores entre chaves duplas (por exemplo {{product}}) que aparecem nela. "
    "Responda somente com a pergunta reescrita.\n\nPergunta: {mask}"
)


def generate_variations(
    template: QaTemplate,
    count: int,
    llm: ChatClient,
    max_rejections: int = 10,
) -> VariationSet:
    """Collect `count` paraphrases of the question mask from a chat client.

    A generation is accepted only if it still contains every placeholder of
    the original mask, uses no unknown placeholders, and is distinct (after
    whitespace normalization) from the mask and the variants collected so
    far. Rejected generations consume the rejection budget.
    """
    if count < 1:
        raise ValueError("variation count must be >= 1")
    required = mask_placeholders(template.question_mask)
    prompt = VARIATION_PROMPT.format(mask=template.question_mask)
    accepted: list[str] = []
    seen = {canonicalize(template.question_mask)}
    rejections = 0
    while len(accepted) < count:
        text = llm.complete([{"role": "user", "content": prompt}]).strip()
        if _conforms(text, required, template.id) and canonicalize(text) not in seen:
            accepted.append(text)
            seen.add(canonicalize(text))
            continue
        rejections += 1
        logger.debug("rejected variation for %s: %r", template.id, text)
        if rejections > max_rejections:
            raise BudgetExhaustedError(
                f"collected {len(accepted)}/{count} variants for template "
                f"{template.id!r} after {rejections} rejections"
            )
    return VariationSet(template_id=template.id, question_variants=tuple(accepted))


def _conforms(text: str, required: set[str], template_id: str) -> bool:
    if not text:
        return False
    try:
        _validate_mask(text, template_id)
    except TemplateError:
        return False
    return required.issubset(mask_placeholders(text))


# --- rendering ----------------------------------------------------------------


def _substitute(mask: str, record: ProductRecord, table: NomenclatureTable) -> str:
    values = {
        "product": record.description,
        "NCM": record.ncm_code.digits,
    }
    if "category" in mask_placeholders(mask):
        values["category"] = category_path(record.ncm_code, table).rendered
    return canonicalize(
        _PLACEHOLDER_RE.sub(lambda match: values[match.group(1)], mask)
    )


def render_record(
    question_mask: str,
    template: QaTemplate,
    record: ProductRecord,
    table: NomenclatureTable,
    instruction: str = DEFAULT_INSTRUCTION,
) -> TrainingRecord:
    """Render one chat training record for a (question variant, record) pair.

    ``{{product}}`` becomes the product description, ``{{NCM}}`` the plain
    8-digit code, and ``{{category}}`` the full category path of the code in
    the table. Raises UnknownCodeError when the record's code is absent.
    """
    contexts = [_substitute(mask, record, table) for mask in template.context_masks]
    question = _substitute(question_mask, record, table)
    answer = _substitute(template.answer_mask, record, table)
    user_content = render_user_message(contexts, canonicalize(instruction), question)
    return TrainingRecord(
        messages=(Message(user_content, "user"), Message(answer, "assistant"))
    )


def generate_corpus(
    templates: Sequence[QaTemplate],
    variations: Mapping[str, VariationSet],
    records: Sequence[ProductRecord],
    table: NomenclatureTable,
    instruction: str = DEFAULT_INSTRUCTION,
) -> tuple[CorpusPlan, Iterator[TrainingRecord]]:
    """Stream the full corpus in deterministic (template, variant, record) order.

    Every template must have a variation set (possibly empty: the original
    question mask counts as variant #1) and all templates must end up with
    the same variant count so that N = q x v x n holds exactly.
    """
    if not templates:
        raise EmptyTemplateSetError("no templates to generate from")
    variant_lists: dict[str, list[str]] = {}
    for template in templates:
        if template.id not in variations:
            raise TemplateError(f"no variation set for template {template.id!r}")
        variant_lists[template.id] = [
            template.question_mask,
            *variations[template.id].question_variants,
        ]
    counts = {len(variants) for variants in variant_lists.values()}
    if len(counts) > 1:
        raise TemplateError(
            f"templates have differing variant counts {sorted(counts)}; "
            "N = q x v x n requires a uniform v"
        )
    plan = CorpusPlan(q=len(templates), v=counts.pop(), n=len(records))

    def stream() -> Iterator[TrainingRecord]:
        for template in templates:
            for variant in variant_lists[template.id]:
                for record in records:
                    try:
                        yield render_record(variant, template, record, table, instruction)
                    except Exception as exc:
                        raise CorpusGenerationError(template.id, record.id, exc) from exc

    return plan, stream()


def write_corpus(records: Iterable[TrainingRecord], destination: str | Path) -> int:
    """Write training records as JSON Lines; returns the number written."""
    path = Path(destination)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json())
            fh.write("\n")
            count += 1
    return count


def corpus_manifest(
    plan: CorpusPlan, seed: int, sources: Mapping[str, Path | None]
) -> dict:
    """Manifest sidecar content: plan, seed and sha256 of each input file."""
    checksums = {
        name: hashlib.sha256(Path(path).read_bytes()).hexdigest()
        for name, path in sources.items()
        if path is not None
    }
    return {**plan.as_dict(), "seed": seed, "source_checksums": checksums}


# --- holdout splitting --------------------------------------------------------


def split_holdout(
    records: Sequence[ProductRecord], holdout_count: int, seed: int
) -> tuple[list[ProductRecord], list[ProductRecord]]:
    """Deterministically split records into train/eval at record granularity.

    A held-out product contributes zero training records. The split depends
    only on the seed and the input order.
    """
    if holdout_count < 0:
        raise ValueError("holdout_count must be >= 0")
    if holdout_count >= len(records) and holdout_count > 0:
        raise HoldoutTooLargeError(
            f"holdout {holdout_count} would leave no training records "
            f"(have {len(records)})"
        )
    rng = random.Random(seed)
    holdout_indices = set(rng.sample(range(len(records)), holdout_count))
    train = [record for i, record in enumerate(records) if i not in holdout_indices]
    held_out = [record for i, record in enumerate(records) if i in holdout_indices]
    return train, held_out


# --- description normalization -------------------------------------------------


def normalize_description(text: str, dictionary: Mapping[str, str]) -> str:
    """Expand known abbreviations in a product description.

    Matching is case-insensitive, token-boundary aware and longest-first;
    the expansion's own casing is preserved. With an empty dictionary the
    text is returned unchanged.
    """
    if not dictionary:
        return text
    expansions: dict[str, str] = {}
    for key, value in dictionary.items():
        if not key:
            raise ValueError("abbreviation dictionary keys must be non-empty")
        expansions[key.casefold()] = value
    alternation = "|".join(
        re.escape(key) for key in sorted(dictionary, key=len, reverse=True)
    )
    pattern = re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", re.IGNORECASE)
    return pattern.sub(lambda match: expansions[match.group(0).casefold()], text)
