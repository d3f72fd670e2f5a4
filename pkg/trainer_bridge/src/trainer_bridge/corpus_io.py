"""Reading and linearizing the chat-corpus JSONL format.

Each line must hold exactly two messages, user first, assistant second:
``{"messages": [{"content": ..., "role": "user"}, {"content": ..., "role":
"assistant"}]}``. Records are linearized for causal-LM training as the user
content, a newline, and the assistant content, with an end-of-text id
appended at tokenization time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class SchemaError(Exception):
    """A corpus line does not match the two-message chat schema."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class ChatRecord:
    user: str
    assistant: str


def load_corpus(source: str | Path) -> list[ChatRecord]:
    """Parse a corpus file, pointing at the offending line on any mismatch."""
    path = Path(source)
    records = []
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_number, f"not valid JSON: {exc}") from exc
            messages = raw.get("messages") if isinstance(raw, dict) else None
            if not isinstance(messages, list) or len(messages) != 2:
                raise SchemaError(line_number, "expected exactly two messages")
            roles = [m.get("role") for m in messages if isinstance(m, dict)]
            if roles != ["user", "assistant"]:
                raise SchemaError(line_number, f"expected roles [user, assistant], got {roles}")
            contents = [m.get("content") for m in messages]
            if not all(isinstance(c, str) and c for c in contents):
                raise SchemaError(line_number, "message contents must be non-empty strings")
            records.append(ChatRecord(user=contents[0], assistant=contents[1]))
    return records


def linearize(record: ChatRecord) -> str:
    return f"{record.user}\n{record.assistant}"
