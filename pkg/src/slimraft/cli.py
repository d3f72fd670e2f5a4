"""Command-line client for the pipeline service.

Every subcommand is a thin HTTP client: with `server_url` configured it
talks to a running service, otherwise it mounts the service in-process and
drives the same endpoints without any network. Logs go to stderr; data goes
to stdout or to files. Exit codes: 0 success, 1 domain-level failure,
2 input/IO failure.
"""

from __future__ import annotations

import asyncio
import json
import logging
import sys
from pathlib import Path

import click
import httpx

from .config import PipelineConfig, load_config
from .errors import SlimRaftError

logger = logging.getLogger(__name__)

_REMOTE_TIMEOUT = 600.0


def _decode(response: httpx.Response):
    try:
        return response.status_code, response.json()
    except ValueError:
        detail = response.text.strip()[:500] or f"HTTP {response.status_code} with empty body"
        return response.status_code, {"error": "BadResponse", "detail": detail}


def call_service(config: PipelineConfig, method: str, path: str, payload: dict | None = None):
    """Send one request to the service and return (status_code, body)."""
    if config.server_url:
        with httpx.Client(base_url=config.server_url, timeout=_REMOTE_TIMEOUT) as client:
            return _decode(client.request(method, path, json=payload))

    from .service import create_app

    async def _run():
        transport = httpx.ASGITransport(app=create_app(config))
        async with httpx.AsyncClient(
            transport=transport, base_url="http://slimraft.internal", timeout=_REMOTE_TIMEOUT
        ) as client:
            return _decode(await client.request(method, path, json=payload))

    return asyncio.run(_run())


def _fail(status: int, body) -> None:
    detail = body.get("detail", body) if isinstance(body, dict) else body
    click.echo(f"error: {detail}", err=True)
    sys.exit(1 if status == 400 else 2)


def _require(value, name: str):
    if value is None:
        click.echo(f"error: {name} not given and not set in the config file", err=True)
        sys.exit(2)
    return value


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Config file (JSON); defaults to $SLIMRAFT_CONFIG.")
@click.option("--server-url", default=None,
              help="Base URL of a running service; omit to run in-process.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, server_url: str | None):
    """Nomenclature validation, corpus generation, retrieval and evaluation."""
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        ctx.obj = load_config(config_path).override(server_url=server_url)
    except SlimRaftError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


# --- nomenclature -----------------------------------------------------------


@main.group()
def nomenclature():
    """Nomenclature table commands."""


@nomenclature.command("validate")
@click.argument("path", required=False)
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def nomenclature_validate(config: PipelineConfig, path: str | None, as_json: bool):
    """Check a nomenclature file; exit 0 only when strict-mode clean."""
    path = _require(path or config.nomenclature_path, "nomenclature path")
    status, body = call_service(config, "POST", "/nomenclature/validate", {"path": path})
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        click.echo(f"{body['entry_count']} entries")
        for level, count in sorted(body["level_histogram"].items()):
            click.echo(f"  {level}: {count}")
        for violation in body["violations"]:
            click.echo(f"violation: {violation}")
    sys.exit(0 if body["strict_clean"] else 1)


# --- corpus -------------------------------------------------------------------


@main.group()
def corpus():
    """Training-corpus commands."""


@corpus.command("generate")
@click.option("--nomenclature", "nomenclature_path", default=None)
@click.option("--templates", "templates_path", default=None)
@click.option("--variations", "variations_path", default=None)
@click.option("--records", "records_path", default=None)
@click.option("--output-dir", default=None)
@click.option("--corpus-filename", default="corpus.jsonl", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--instruction", default=None)
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def corpus_generate(config: PipelineConfig, nomenclature_path, templates_path,
                    variations_path, records_path, output_dir, corpus_filename,
                    seed, instruction, as_json):
    """Render the full q x v x n corpus plus its manifest sidecar."""
    payload = {
        "nomenclature_path": _require(nomenclature_path or config.nomenclature_path, "nomenclature path"),
        "templates_path": _require(templates_path or config.templates_path, "templates path"),
        "records_path": _require(records_path or config.records_path, "records path"),
        "variations_path": variations_path or config.variations_path,
        "output_dir": output_dir or config.output_dir,
        "corpus_filename": corpus_filename,
        "seed": seed if seed is not None else config.corpus_seed,
        "instruction": instruction,
    }
    status, body = call_service(config, "POST", "/corpus/generate", payload)
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        plan = body["plan"]
        click.echo(f"q={plan['q']} v={plan['v']} n={plan['n']} N={plan['N']}")
        click.echo(f"corpus: {body['corpus_path']}")
        click.echo(f"manifest: {body['manifest_path']}")
    sys.exit(0)


@corpus.command("split")
@click.option("--records", "records_path", default=None)
@click.option("--holdout", "holdout_count", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--output-dir", default=None)
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def corpus_split(config: PipelineConfig, records_path, holdout_count, seed, output_dir, as_json):
    """Split product records into train/held-out sets, seed-deterministic."""
    payload = {
        "records_path": _require(records_path or config.records_path, "records path"),
        "holdout_count": holdout_count if holdout_count is not None else config.holdout_count,
        "seed": seed if seed is not None else config.corpus_seed,
        "output_dir": output_dir or config.output_dir,
    }
    status, body = call_service(config, "POST", "/corpus/split", payload)
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        click.echo(f"train: {body['train_count']} -> {body['train_path']}")
        click.echo(f"eval:  {body['eval_count']} -> {body['eval_path']}")
    sys.exit(0)


# --- index / rag ----------------------------------------------------------------


@main.group()
def index():
    """Lexical index commands."""


@index.command("build")
@click.option("--nomenclature", "nomenclature_path", default=None)
@click.option("--output", "output_path", default=None,
              help="Snapshot path (default: <output-dir>/index.json).")
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def index_build(config: PipelineConfig, nomenclature_path, output_path, as_json):
    """Index a nomenclature file and persist the snapshot."""
    payload = {
        "nomenclature_path": _require(nomenclature_path or config.nomenclature_path, "nomenclature path"),
        "output_path": output_path or str(Path(config.output_dir) / "index.json"),
    }
    status, body = call_service(config, "POST", "/index/build", payload)
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        click.echo(f"indexed {body['doc_count']} entries -> {body['snapshot_path']}")
    sys.exit(0)


@main.group()
def rag():
    """Retrieval-augmented prompting commands."""


@rag.command("ask")
@click.argument("question")
@click.option("--index", "index_path", default=None,
              help="Index snapshot (default: <output-dir>/index.json).")
@click.option("--k", type=int, default=None, help="Context documents to retrieve.")
@click.option("--reformulate", is_flag=True,
              help="Rewrite the question into the canonical pattern first.")
@click.option("--mock-script", type=click.Path(), default=None,
              help="JSON list of scripted chat responses (offline mock client).")
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def rag_ask(config: PipelineConfig, question, index_path, k, reformulate, mock_script, as_json):
    """Retrieve contexts and print the assembled prompt (and model answer)."""
    mock_responses = None
    if mock_script:
        try:
            mock_responses = json.loads(Path(mock_script).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: cannot read mock script: {exc}", err=True)
            sys.exit(2)
    payload = {
        "index_path": index_path or str(Path(config.output_dir) / "index.json"),
        "question": question,
        "k": k if k is not None else config.retrieval_k,
        "reformulate": reformulate,
        "mock_responses": mock_responses,
    }
    status, body = call_service(config, "POST", "/rag/ask", payload)
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        click.echo(f"question: {body['question']}")
        for rank, doc in enumerate(body["contexts"], start=1):
            click.echo(f"[{rank}] {doc['code']} score={doc['score']:.4f} {doc['text']}")
        click.echo("--- prompt ---")
        click.echo(body["prompt"])
        if body.get("answer") is not None:
            click.echo("--- answer ---")
            click.echo(body["answer"])
    sys.exit(0)


# --- eval -----------------------------------------------------------------------


@main.group(name="eval")
def eval_group():
    """Evaluation commands."""


@eval_group.command("run")
@click.option("--items", "items_path", default=None, help="Eval items JSONL file.")
@click.option("--output-dir", default=None)
@click.option("--mock-judge", is_flag=True, help="Use the deterministic offline judge.")
@click.option("--concurrency", type=int, default=None)
@click.option("--json", "as_json", is_flag=True, help="Print the raw response JSON.")
@click.pass_obj
def eval_run(config: PipelineConfig, items_path, output_dir, mock_judge, concurrency, as_json):
    """Judge every item and write JSON + text-table reports.

    Exits 0 only with full coverage; 1 on partial coverage; 2 when nothing
    could be judged.
    """
    payload = {
        "items_path": _require(items_path, "eval items path"),
        "output_dir": output_dir or config.output_dir,
        "mock_judge": mock_judge,
        "concurrency": concurrency,
    }
    status, body = call_service(config, "POST", "/eval/run", payload)
    if status != 200:
        _fail(status, body)
    if as_json:
        click.echo(json.dumps(body, ensure_ascii=False))
    else:
        click.echo(body["table"])
        coverage = body["coverage"]
        click.echo(f"coverage: {coverage['judged']}/{coverage['total']}")
        click.echo(f"report: {body['report_json_path']}")
    sys.exit(0 if body["coverage"]["judged"] == body["coverage"]["total"] else 1)


if __name__ == "__main__":
    main()
