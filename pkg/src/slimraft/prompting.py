"""Canonical user-message layout shared by corpus rendering and RAG prompts.

Training-time records and inference-time prompts must be byte-identical in
shape, so both paths go through this module: each context line is wrapped as
``[...],`` on its own line, a blank line separates the context block from the
instruction, and the instruction is joined to the question with one space.
"""

from __future__ import annotations

import re
from typing import Sequence

# Portuguese connective used in the original training records.
DEFAULT_INSTRUCTION = (
    "responda a seguinte pergunta usando informações do contexto anterior:"
)

_WHITESPACE_RUNS = re.compile(r"\s+")


def canonicalize(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WHITESPACE_RUNS.sub(" ", text).strip()


def render_user_message(contexts: Sequence[str], instruction: str, question: str) -> str:
    """Compose the user message from context lines, instruction and question.

    With no contexts the message is just ``instruction question``.
    """
    tail = " ".join(part for part in (instruction, question) if part)
    if not contexts:
        return tail
    block = "".join(f"[{context}],\n" for context in contexts)
    return f"{block}\n{tail}"
