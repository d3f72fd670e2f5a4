"""Request/response models for the pipeline service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class NomenclatureValidateRequest(BaseModel):
    path: str


class NomenclatureValidateResponse(BaseModel):
    entry_count: int
    level_histogram: dict[str, int]
    violations: list[str]
    strict_clean: bool


class CorpusPlanModel(BaseModel):
    q: int
    v: int
    n: int
    N: int


class CorpusGenerateRequest(BaseModel):
    nomenclature_path: str
    templates_path: str
    records_path: str
    variations_path: str | None = None
    output_dir: str
    corpus_filename: str = "corpus.jsonl"
    seed: int = 0
    instruction: str | None = None


class CorpusGenerateResponse(BaseModel):
    plan: CorpusPlanModel
    corpus_path: str
    manifest_path: str


class CorpusSplitRequest(BaseModel):
    records_path: str
    holdout_count: int = Field(ge=0)
    seed: int = 0
    output_dir: str


class CorpusSplitResponse(BaseModel):
    train_path: str
    eval_path: str
    train_count: int
    eval_count: int


class IndexBuildRequest(BaseModel):
    nomenclature_path: str
    output_path: str


class IndexBuildResponse(BaseModel):
    doc_count: int
    snapshot_path: str


class ContextDocumentModel(BaseModel):
    text: str
    code: str
    score: float


class RagAskRequest(BaseModel):
    index_path: str
    question: str
    k: int = Field(default=3, ge=0)
    reformulate: bool = False
    # Scripted responses turn on a mock chat client for offline runs.
    mock_responses: list[str] | None = None


class RagAskResponse(BaseModel):
    question: str
    contexts: list[ContextDocumentModel]
    prompt: str
    answer: str | None = None


class EvalRunRequest(BaseModel):
    items_path: str
    output_dir: str
    mock_judge: bool = False
    concurrency: int | None = None


class CoverageModel(BaseModel):
    judged: int
    total: int


class EvalRunResponse(BaseModel):
    model_tag: str
    average: float
    std_dev: float
    min: float
    max: float
    coverage: CoverageModel
    table: str
    report_json_path: str
    report_table_path: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
