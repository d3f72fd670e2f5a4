"""Full-parameter fine-tuning of a small causal LM on a chat corpus.

No adapter layers: every model parameter is updated. Each optimization step
appends one line to a JSONL loss log so runs can be inspected and compared;
seeding makes runs repeatable to the extent the torch stack allows.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .corpus_io import linearize, load_corpus

logger = logging.getLogger(__name__)


@dataclass
class TrainRunConfig:
    corpus_path: str
    base_model: str
    output_dir: str
    epochs: int = 1
    learning_rate: float = 5e-4
    max_seq_len: int = 256
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not Path(self.corpus_path).exists():
            raise FileNotFoundError(f"corpus file {self.corpus_path} does not exist")


@dataclass
class TrainResult:
    checkpoint_dir: str
    loss_log_path: str
    steps: int
    first_loss: float
    final_loss: float


def _batches(sequences: list[list[int]], batch_size: int):
    for start in range(0, len(sequences), batch_size):
        yield sequences[start : start + batch_size]


def train(config: TrainRunConfig) -> TrainResult:
    """Fine-tune the base model on the corpus and save a checkpoint."""
    random.seed(config.seed)
    torch.manual_seed(config.seed)

    records = load_corpus(config.corpus_path)
    if not records:
        raise ValueError(f"corpus {config.corpus_path} has no records")
    tokenizer = AutoTokenizer.from_pretrained(config.base_model)
    model = AutoModelForCausalLM.from_pretrained(config.base_model)
    if tokenizer.pad_token_id is None:
        tokenizer.pad_token = tokenizer.eos_token
    pad_id = tokenizer.pad_token_id
    eos_id = tokenizer.eos_token_id

    sequences = []
    for record in records:
        ids = tokenizer(linearize(record), truncation=True, max_length=config.max_seq_len - 1)[
            "input_ids"
        ]
        sequences.append(ids + [eos_id])

    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    loss_log_path = output_dir / "loss_log.jsonl"
    first_loss = final_loss = float("nan")
    step = 0
    with loss_log_path.open("w", encoding="utf-8") as log:
        for epoch in range(config.epochs):
            for batch in _batches(sequences, config.batch_size):
                longest = max(len(ids) for ids in batch)
                input_ids = torch.full((len(batch), longest), pad_id, dtype=torch.long)
                attention_mask = torch.zeros((len(batch), longest), dtype=torch.long)
                for row, ids in enumerate(batch):
                    input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                    attention_mask[row, : len(ids)] = 1
                labels = input_ids.masked_fill(attention_mask == 0, -100)

                optimizer.zero_grad()
                outputs = model(input_ids=input_ids, attention_mask=attention_mask, labels=labels)
                outputs.loss.backward()
                optimizer.step()

                step += 1
                loss_value = float(outputs.loss.detach())
                if step == 1:
                    first_loss = loss_value
                final_loss = loss_value
                log.write(json.dumps({"step": step, "epoch": epoch + 1, "loss": loss_value}) + "\n")
    logger.info("trained %d steps; loss %.4f -> %.4f", step, first_loss, final_loss)

    checkpoint_dir = output_dir / "checkpoint"
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(checkpoint_dir)
    tokenizer.save_pretrained(checkpoint_dir)
    return TrainResult(
        checkpoint_dir=str(checkpoint_dir),
        loss_log_path=str(loss_log_path),
        steps=step,
        first_loss=first_loss,
        final_loss=final_loss,
    )
