"""Blind judge evaluation, score aggregation, and query reformulation.

A judge prompt carries the question, the expected answer and the candidate
answer but never the candidate's model tag, so the judging client cannot
tell which model produced what. Scores live on a 0-10 scale and aggregate
into a report with average, population standard deviation, min and max.
"""

from __future__ import annotations

import importlib.resources
import json
import logging
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .clients import ChatClient, Messages
from .errors import (
    EmptyItemSetError,
    EmptyVerdictSetError,
    InputError,
    NonCanonicalOutputError,
    TotalEvalFailureError,
    UnparsableVerdictError,
)

logger = logging.getLogger(__name__)

DEFAULT_CONCURRENCY = 4
DEFAULT_CANONICAL_PATTERN = r"Qual a categoria NCM correta para o produto: .+?\?"

_SCORE_NUMBER_RE = re.compile(r"\b(?:10|[0-9])(?:\.[0-9]+)?\b")
_SCORE_CUE_RE = re.compile(r"score|nota", re.IGNORECASE)


def default_rubric() -> str:
    """The shipped judge prompt; any text with the same slots may replace it."""
    return (
        importlib.resources.files("slimraft")
        .joinpath("data/judge_rubric.txt")
        .read_text(encoding="utf-8")
    )


def default_fewshot_prompt() -> str:
    """The shipped few-shot reformulation prompt with a {query} slot."""
    return (
        importlib.resources.files("slimraft")
        .joinpath("data/reformulate_fewshot.txt")
        .read_text(encoding="utf-8")
    )


@dataclass(frozen=True)
class EvalItem:
    """One held-out question with the expected and the candidate answer."""

    id: str
    question: str
    expected_answer: str
    model_answer: str
    model_tag: str

    def __post_init__(self):
        if not self.question.strip():
            raise InputError(f"eval item {self.id!r} has an empty question")
        if not self.expected_answer.strip():
            raise InputError(f"eval item {self.id!r} has an empty expected answer")


@dataclass(frozen=True)
class JudgeVerdict:
    item_id: str
    score: float
    rationale: str

    def __post_init__(self):
        if not 0 <= self.score <= 10:
            raise UnparsableVerdictError(f"score {self.score} outside 0-10")


@dataclass(frozen=True)
class ItemFailure:
    item_id: str
    error: str


@dataclass(frozen=True)
class EvalReport:
    """Aggregate statistics over the verdicts of one model."""

    model_tag: str
    average: float
    std_dev: float
    min_score: float
    max_score: float
    verdicts: tuple[JudgeVerdict, ...]
    judged: int
    total: int
    failures: tuple[ItemFailure, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "average": self.average,
            "std_dev": self.std_dev,
            "min": self.min_score,
            "max": self.max_score,
            "coverage": {"judged": self.judged, "total": self.total},
            "verdicts": [
                {"item_id": v.item_id, "score": v.score, "rationale": v.rationale}
                for v in self.verdicts
            ],
            "failures": [
                {"item_id": f.item_id, "error": f.error} for f in self.failures
            ],
        }


def load_items(source: str | Path) -> list[EvalItem]:
    """Load eval items from JSON Lines."""
    path = Path(source)
    items = []
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path} line {line_number}: {exc}") from exc
            try:
                items.append(
                    EvalItem(
                        id=str(raw["id"]),
                        question=raw["question"],
                        expected_answer=raw["expected_answer"],
                        model_answer=raw.get("model_answer", ""),
                        model_tag=raw.get("model_tag", ""),
                    )
                )
            except KeyError as exc:
                raise InputError(f"{path} line {line_number}: missing field {exc}") from exc
    return items


# --- judging -------------------------------------------------------------------


def parse_score(text: str) -> float | None:
    """Extract a 0-10 score from judge output.

    Prefers the first number after a score cue; otherwise accepts a single
    standalone number. Returns None when nothing (or something ambiguous)
    is found.
    """
    cue = _SCORE_CUE_RE.search(text)
    if cue:
        match = _SCORE_NUMBER_RE.search(text, cue.end())
        if match:
            value = float(match.group(0))
            return value if value <= 10 else None
    numbers = _SCORE_NUMBER_RE.findall(text)
    if len(numbers) == 1:
        value = float(numbers[0])
        return value if value <= 10 else None
    return None


def judge(
    item: EvalItem,
    client: ChatClient,
    rubric: str | None = None,
    max_parse_retries: int = 2,
) -> JudgeVerdict:
    """Score one item with a blinded judge prompt.

    The prompt never contains the item's model tag. Responses that do not
    parse to a score in [0, 10] are retried, then raise
    UnparsableVerdictError.
    """
    prompt = (rubric or default_rubric()).format(
        question=item.question,
        expected_answer=item.expected_answer,
        model_answer=item.model_answer,
    )
    attempts = max_parse_retries + 1
    last_text = ""
    for _ in range(attempts):
        last_text = client.complete([{"role": "user", "content": prompt}], temperature=0.0)
        score = parse_score(last_text)
        if score is not None:
            return JudgeVerdict(item_id=item.id, score=score, rationale=last_text.strip())
    raise UnparsableVerdictError(
        f"item {item.id!r}: no usable score after {attempts} attempts; last reply: {last_text!r}"
    )


def aggregate(verdicts: Sequence[JudgeVerdict], model_tag: str) -> EvalReport:
    """Aggregate verdicts: mean, population standard deviation, min, max."""
    if not verdicts:
        raise EmptyVerdictSetError("cannot aggregate an empty verdict list")
    scores = [verdict.score for verdict in verdicts]
    return EvalReport(
        model_tag=model_tag,
        average=statistics.fmean(scores),
        std_dev=statistics.pstdev(scores),
        min_score=min(scores),
        max_score=max(scores),
        verdicts=tuple(verdicts),
        judged=len(verdicts),
        total=len(verdicts),
    )


def run_eval(
    items: Sequence[EvalItem],
    judge_client: ChatClient,
    concurrency: int = DEFAULT_CONCURRENCY,
    rubric: str | None = None,
) -> EvalReport:
    """Judge every item with bounded concurrency and aggregate the verdicts.

    Per-item failures are recorded in the report (coverage = judged/total);
    the run aborts only when every single item fails.
    """
    if not items:
        raise EmptyItemSetError("no eval items to run")
    rubric_text = rubric or default_rubric()

    def judge_one(item: EvalItem) -> JudgeVerdict | ItemFailure:
        try:
            return judge(item, judge_client, rubric=rubric_text)
        except Exception as exc:
            logger.warning("judging failed for item %s: %s", item.id, exc)
            return ItemFailure(item_id=item.id, error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as executor:
        outcomes = list(executor.map(judge_one, items))

    verdicts = [outcome for outcome in outcomes if isinstance(outcome, JudgeVerdict)]
    failures = tuple(outcome for outcome in outcomes if isinstance(outcome, ItemFailure))
    if not verdicts:
        raise TotalEvalFailureError(
            f"all {len(items)} items failed judging; first error: {failures[0].error}"
        )
    tags = {item.model_tag for item in items}
    report = aggregate(verdicts, model_tag=tags.pop() if len(tags) == 1 else "mixed")
    return EvalReport(
        model_tag=report.model_tag,
        average=report.average,
        std_dev=report.std_dev,
        min_score=report.min_score,
        max_score=report.max_score,
        verdicts=report.verdicts,
        judged=len(verdicts),
        total=len(items),
        failures=failures,
    )


def render_report_table(reports: Sequence[EvalReport]) -> str:
    """Render reports as a text table with Model / Aver. / St. Dev. / Min. / Max."""
    headers = ("Model", "Aver.", "St. Dev.", "Min.", "Max.")
    rows = [
        (
            report.model_tag or "-",
            f"{report.average:.2f}",
            f"{report.std_dev:.2f}",
            f"{report.min_score:.2f}",
            f"{report.max_score:.2f}",
        )
        for report in reports
    ]
    widths = [
        max(len(headers[column]), *(len(row[column]) for row in rows)) if rows else len(headers[column])
        for column in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


# --- local deterministic judge ----------------------------------------------


_FIELD_RE = re.compile(
    r"Question: (?P<question>.*?)\nExpected answer: (?P<expected>.*?)\n"
    r"Candidate answer: (?P<candidate>.*)",
    re.DOTALL,
)


class LocalJudgeClient(ChatClient):
    """Deterministic offline judge for smoke runs and tests.

    Understands prompts built from the shipped rubric (labeled Question /
    Expected answer / Candidate answer blocks) and scores by token overlap:
    identical answers score 10, disjoint ones 0.
    """

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        prompt = messages[-1]["content"]
        match = _FIELD_RE.search(prompt)
        if match is None:
            return "Score: 0 (unrecognized judge prompt)"
        expected = match.group("expected").strip()
        candidate = match.group("candidate").strip()
        score = self._overlap_score(expected, candidate)
        return f"Score: {score:g} (token overlap with the expected answer)"

    @staticmethod
    def _overlap_score(expected: str, candidate: str) -> float:
        expected_tokens = set(expected.lower().split())
        candidate_tokens = set(candidate.lower().split())
        if not expected_tokens or not candidate_tokens:
            return 0.0
        if expected_tokens == candidate_tokens:
            return 10.0
        union = expected_tokens | candidate_tokens
        return round(10 * len(expected_tokens & candidate_tokens) / len(union), 2)


# --- query reformulation -------------------------------------------------------


def reformulate(
    raw_query: str,
    fewshot_prompt: str,
    client: ChatClient,
    pattern: str = DEFAULT_CANONICAL_PATTERN,
    max_retries: int = 2,
) -> str:
    """Rewrite a free-form query into the canonical question pattern.

    The few-shot prompt must itself contain at least one worked example
    matching the pattern. The client's output is searched for the pattern;
    non-conforming outputs are retried, then raise NonCanonicalOutputError.
    """
    compiled = re.compile(pattern)
    if not compiled.search(fewshot_prompt):
        raise ValueError("few-shot prompt contains no worked example of the canonical pattern")
    if "{query}" in fewshot_prompt:
        prompt = fewshot_prompt.replace("{query}", raw_query)
    else:
        prompt = f"{fewshot_prompt}\n\n{raw_query}"
    last_text = ""
    for _ in range(max_retries + 1):
        last_text = client.complete([{"role": "user", "content": prompt}], temperature=0.0)
        match = compiled.search(last_text)
        if match:
            return match.group(0)
    raise NonCanonicalOutputError(
        f"reformulation never matched the canonical pattern; last reply: {last_text!r}"
    )
