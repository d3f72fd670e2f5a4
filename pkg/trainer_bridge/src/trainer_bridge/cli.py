"""Command line for the trainer bridge: init-base, train, infer.

Flags mirror the pipeline CLI conventions: an optional flat JSON config
file, with command-line flags winning over config values.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path

import click

from .inference import infer
from .toy_model import init_base_model
from .training import TrainRunConfig, train


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: cannot read config: {exc}", err=True)
        sys.exit(2)
    if not isinstance(raw, dict):
        click.echo("error: config must hold a JSON object", err=True)
        sys.exit(2)
    return raw


@click.group()
def main():
    """Toy-scale fine-tuning bridge for chat corpora."""
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


@main.command("init-base")
@click.option("--corpus", "corpus_path", required=True, help="Corpus JSONL for tokenizer training.")
@click.option("--output", "output_dir", required=True)
@click.option("--vocab-size", type=int, default=512, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def init_base(corpus_path, output_dir, vocab_size, seed):
    """Create a small random-weight base model (offline stand-in)."""
    parameter_count = init_base_model(corpus_path, output_dir, vocab_size=vocab_size, seed=seed)
    click.echo(f"base model: {parameter_count} parameters -> {output_dir}")


@main.command("train")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Flat JSON config; flags win over config values.")
@click.option("--corpus", "corpus_path", default=None)
@click.option("--base-model", default=None)
@click.option("--output-dir", default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--max-seq-len", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
def train_command(config_path, **flags):
    """Full-parameter fine-tune; writes a checkpoint and a loss log."""
    merged = _load_config(config_path)
    merged.update({key: value for key, value in flags.items() if value is not None})
    known = {field.name for field in dataclasses.fields(TrainRunConfig)}
    unknown = set(merged) - known
    if unknown:
        click.echo(f"error: unknown config keys: {', '.join(sorted(unknown))}", err=True)
        sys.exit(2)
    for required in ("corpus_path", "base_model", "output_dir"):
        if required not in merged:
            click.echo(f"error: {required} not given", err=True)
            sys.exit(2)
    try:
        result = train(TrainRunConfig(**merged))
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"steps={result.steps} first_loss={result.first_loss:.4f} "
        f"final_loss={result.final_loss:.4f}"
    )
    click.echo(f"checkpoint: {result.checkpoint_dir}")
    click.echo(f"loss log: {result.loss_log_path}")


@main.command("infer")
@click.option("--checkpoint", required=True)
@click.option("--questions", "questions_path", required=True)
@click.option("--output", "output_path", required=True)
@click.option("--model-tag", default="trainer-bridge", show_default=True)
@click.option("--index", "index_snapshot", default=None,
              help="Pipeline index snapshot for retrieval-formatted prompts.")
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--max-new-tokens", type=int, default=48, show_default=True)
def infer_command(checkpoint, questions_path, output_path, model_tag, index_snapshot, k,
                  max_new_tokens):
    """Generate answers compatible with the eval-items schema."""
    try:
        written = infer(
            checkpoint,
            questions_path,
            output_path,
            model_tag=model_tag,
            index_snapshot=index_snapshot,
            k=k,
            max_new_tokens=max_new_tokens,
        )
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{written} answers -> {output_path}")


if __name__ == "__main__":
    main()
