"""Answer generation from a fine-tuned checkpoint.

Questions come from a JSONL file of `{"id": ..., "question": ...}` lines.
With an index snapshot, each prompt is assembled through the pipeline's own
`rag ask` command so the inference-time layout is byte-identical to the
training records; otherwise the bare question is the prompt. Answers are
written in the eval-items schema with `expected_answer` left blank for
later joining.
"""

from __future__ import annotations

import json
import logging
import subprocess
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

logger = logging.getLogger(__name__)

DEFAULT_MAX_NEW_TOKENS = 48


def rag_prompt(question: str, index_snapshot: str, k: int, pipeline_cli: str = "slimraft") -> str:
    """Assemble the retrieval prompt by calling the pipeline CLI."""
    completed = subprocess.run(
        [pipeline_cli, "rag", "ask", question, "--index", index_snapshot, "--k", str(k), "--json"],
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(completed.stdout)["prompt"]


def infer(
    checkpoint: str | Path,
    questions_path: str | Path,
    output_path: str | Path,
    model_tag: str,
    index_snapshot: str | None = None,
    k: int = 3,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    pipeline_cli: str = "slimraft",
) -> int:
    """Generate one answer per question; returns the number written."""
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    model = AutoModelForCausalLM.from_pretrained(checkpoint)
    model.eval()
    pad_id = tokenizer.pad_token_id if tokenizer.pad_token_id is not None else tokenizer.eos_token_id
    max_positions = int(getattr(model.config, "n_positions", 1024))
    prompt_budget = max(8, max_positions - max_new_tokens)

    questions = []
    with Path(questions_path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            questions.append((str(raw["id"]), raw["question"]))

    written = 0
    with Path(output_path).open("w", encoding="utf-8") as out:
        for item_id, question in questions:
            if index_snapshot:
                prompt = rag_prompt(question, index_snapshot, k, pipeline_cli)
            else:
                prompt = question
            ids = tokenizer(prompt + "\n")["input_ids"][-prompt_budget:]
            input_ids = torch.tensor([ids], dtype=torch.long)
            with torch.no_grad():
                generated = model.generate(
                    input_ids=input_ids,
                    attention_mask=torch.ones_like(input_ids),
                    max_new_tokens=max_new_tokens,
                    do_sample=False,
                    pad_token_id=pad_id,
                )
            answer = tokenizer.decode(
                generated[0][input_ids.shape[1]:], skip_special_tokens=True
            ).strip()
            out.write(
                json.dumps(
                    {
                        "id": item_id,
                        "question": question,
                        "expected_answer": "",
                        "model_answer": answer,
                        "model_tag": model_tag,
                        "prompt": prompt,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            written += 1
    logger.info("wrote %d answers to %s", written, output_path)
    return written
