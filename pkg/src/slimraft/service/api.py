"""FastAPI service exposing the pipeline over HTTP.

The CLI drives these endpoints (in-process by default); a long-running
deployment serves them with uvicorn. Handlers are thin wrappers over the
core package; toolchain errors map to 400 (domain failures) or 422
(input/IO failures) so clients can translate them into exit codes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..clients import ChatClient, ClientConfig, HttpChatClient, MockChatClient
from ..config import PipelineConfig, load_config
from ..corpus import (
    corpus_manifest,
    generate_corpus,
    load_records,
    load_templates,
    load_variations,
    split_holdout,
    write_corpus,
    VariationSet,
)
from ..errors import DomainError, InputError, SlimRaftError
from ..evaluation import (
    LocalJudgeClient,
    default_fewshot_prompt,
    load_items,
    reformulate,
    render_report_table,
    run_eval,
)
from ..nomenclature import check_integrity, load_table
from ..retrieval import assemble_prompt, build_index, load_snapshot, save_snapshot, search
from . import schemas

logger = logging.getLogger(__name__)


def _http_client(config: PipelineConfig) -> HttpChatClient | None:
    if config.client_endpoint and config.client_model:
        return HttpChatClient(
            ClientConfig(
                endpoint=config.client_endpoint,
                model=config.client_model,
                timeout=config.client_timeout,
                max_retries=config.client_max_retries,
                requests_per_second=config.client_requests_per_second,
            )
        )
    return None


def _require_file(path_text: str, what: str) -> Path:
    path = Path(path_text)
    if not path.exists():
        raise InputError(f"{what} file {path} does not exist")
    return path


def create_app(config: PipelineConfig | None = None) -> FastAPI:
    cfg = config or load_config()
    app = FastAPI(title="slimraft", version=__version__)
    app.state.config = cfg

    @app.exception_handler(SlimRaftError)
    async def _toolchain_error(request, exc: SlimRaftError):
        status = 422 if exc.exit_code == 2 else 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=422,
            content={"error": "FileNotFound", "detail": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(version=__version__)

    @app.post("/nomenclature/validate", response_model=schemas.NomenclatureValidateResponse)
    def nomenclature_validate(
        request: schemas.NomenclatureValidateRequest,
    ) -> schemas.NomenclatureValidateResponse:
        path = _require_file(request.path, "nomenclature")
        table = load_table(path, strict=False)
        violations = check_integrity(table)
        return schemas.NomenclatureValidateResponse(
            entry_count=len(table),
            level_histogram=table.level_histogram(),
            violations=violations,
            strict_clean=not violations,
        )

    @app.post("/corpus/generate", response_model=schemas.CorpusGenerateResponse)
    def corpus_generate(
        request: schemas.CorpusGenerateRequest,
    ) -> schemas.CorpusGenerateResponse:
        table = load_table(_require_file(request.nomenclature_path, "nomenclature"))
        templates = load_templates(_require_file(request.templates_path, "templates"))
        records = load_records(_require_file(request.records_path, "records"))
        if request.variations_path:
            variations = load_variations(_require_file(request.variations_path, "variations"))
        else:
            variations = {}
        # Templates without listed variations use the original mask alone.
        for template in templates:
            variations.setdefault(template.id, VariationSet(template_id=template.id))
        instruction = request.instruction or cfg.instruction
        plan, stream = generate_corpus(templates, variations, records, table, instruction)

        output_dir = Path(request.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        corpus_path = output_dir / request.corpus_filename
        written = write_corpus(stream, corpus_path)
        if written != plan.total:
            raise DomainError(f"emitted {written} records, planned {plan.total}")
        manifest = corpus_manifest(
            plan,
            seed=request.seed,
            sources={
                "nomenclature": Path(request.nomenclature_path),
                "templates": Path(request.templates_path),
                "variations": Path(request.variations_path) if request.variations_path else None,
                "records": Path(request.records_path),
            },
        )
        manifest_path = output_dir / f"{corpus_path.stem}.manifest.json"
        manifest_path.write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return schemas.CorpusGenerateResponse(
            plan=schemas.CorpusPlanModel(**plan.as_dict()),
            corpus_path=str(corpus_path),
            manifest_path=str(manifest_path),
        )

    @app.post("/corpus/split", response_model=schemas.CorpusSplitResponse)
    def corpus_split(request: schemas.CorpusSplitRequest) -> schemas.CorpusSplitResponse:
        records = load_records(_require_file(request.records_path, "records"))
        train, held_out = split_holdout(records, request.holdout_count, request.seed)
        output_dir = Path(request.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        train_path = output_dir / "train_records.csv"
        eval_path = output_dir / "eval_records.csv"
        for path, subset in ((train_path, train), (eval_path, held_out)):
            _write_records_csv(path, subset)
        return schemas.CorpusSplitResponse(
            train_path=str(train_path),
            eval_path=str(eval_path),
            train_count=len(train),
            eval_count=len(held_out),
        )

    @app.post("/index/build", response_model=schemas.IndexBuildResponse)
    def index_build(request: schemas.IndexBuildRequest) -> schemas.IndexBuildResponse:
        table = load_table(_require_file(request.nomenclature_path, "nomenclature"))
        index = build_index(table)
        output_path = Path(request.output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        save_snapshot(index, output_path)
        return schemas.IndexBuildResponse(
            doc_count=index.doc_count, snapshot_path=str(output_path)
        )

    @app.post("/rag/ask", response_model=schemas.RagAskResponse)
    def rag_ask(request: schemas.RagAskRequest) -> schemas.RagAskResponse:
        index_path = Path(request.index_path)
        if not index_path.exists():
            raise DomainError(
                f"index snapshot {index_path} not found; build it with `index build`"
            )
        index = load_snapshot(index_path)
        client: ChatClient | None
        if request.mock_responses is not None:
            client = MockChatClient(responses=request.mock_responses)
        else:
            client = _http_client(cfg)
        question = request.question
        if request.reformulate:
            if client is None:
                raise InputError(
                    "reformulation needs a chat client: configure client_endpoint/"
                    "client_model or pass scripted mock responses"
                )
            fewshot = (
                Path(cfg.fewshot_prompt_path).read_text(encoding="utf-8")
                if cfg.fewshot_prompt_path
                else default_fewshot_prompt()
            )
            question = reformulate(question, fewshot, client, pattern=cfg.canonical_pattern)
        docs = search(index, question, request.k)
        prompt = assemble_prompt(docs, question, cfg.instruction)
        answer = None
        if client is not None:
            answer = client.complete([{"role": "user", "content": prompt}])
        return schemas.RagAskResponse(
            question=question,
            contexts=[
                schemas.ContextDocumentModel(
                    text=doc.text, code=doc.source_code.digits, score=doc.score
                )
                for doc in docs
            ],
            prompt=prompt,
            answer=answer,
        )

    @app.post("/eval/run", response_model=schemas.EvalRunResponse)
    def eval_run(request: schemas.EvalRunRequest) -> schemas.EvalRunResponse:
        items = load_items(_require_file(request.items_path, "eval items"))
        if request.mock_judge:
            judge_client: ChatClient = LocalJudgeClient()
        else:
            http = _http_client(cfg)
            if http is None:
                raise InputError(
                    "no judge client configured: set client_endpoint/client_model "
                    "or request mock_judge"
                )
            judge_client = http
        rubric = (
            Path(cfg.judge_rubric_path).read_text(encoding="utf-8")
            if cfg.judge_rubric_path
            else None
        )
        report = run_eval(
            items,
            judge_client,
            concurrency=request.concurrency or cfg.eval_concurrency,
            rubric=rubric,
        )
        table_text = render_report_table([report])
        output_dir = Path(request.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        report_json_path = output_dir / "eval_report.json"
        report_table_path = output_dir / "eval_report.txt"
        report_json_path.write_text(
            json.dumps(report.as_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        report_table_path.write_text(table_text + "\n", encoding="utf-8")
        return schemas.EvalRunResponse(
            model_tag=report.model_tag,
            average=report.average,
            std_dev=report.std_dev,
            min=report.min_score,
            max=report.max_score,
            coverage=schemas.CoverageModel(judged=report.judged, total=report.total),
            table=table_text,
            report_json_path=str(report_json_path),
            report_table_path=str(report_table_path),
        )

    return app


def _write_records_csv(path: Path, records) -> None:
    import csv

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "description", "ncm_code"])
        for record in records:
            writer.writerow([record.id, record.description, record.ncm_code.digits])
