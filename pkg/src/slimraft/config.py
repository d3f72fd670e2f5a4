"""Pipeline configuration: a flat JSON file, every key overridable by flags.

The config path itself can come from the SLIMRAFT_CONFIG environment
variable; API keys never live in the config (SLIMRAFT_API_KEY only).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .evaluation import DEFAULT_CANONICAL_PATTERN, DEFAULT_CONCURRENCY
from .prompting import DEFAULT_INSTRUCTION
from .retrieval import DEFAULT_K

CONFIG_ENV = "SLIMRAFT_CONFIG"


@dataclass
class PipelineConfig:
    """Flat, documented pipeline settings."""

    nomenclature_path: str | None = None
    templates_path: str | None = None
    variations_path: str | None = None
    records_path: str | None = None
    output_dir: str = "out"
    corpus_seed: int = 0
    holdout_count: int = 100
    retrieval_k: int = DEFAULT_K
    instruction: str = DEFAULT_INSTRUCTION
    canonical_pattern: str = DEFAULT_CANONICAL_PATTERN
    judge_rubric_path: str | None = None
    fewshot_prompt_path: str | None = None
    eval_concurrency: int = DEFAULT_CONCURRENCY
    client_endpoint: str | None = None
    client_model: str | None = None
    client_timeout: float = 60.0
    client_max_retries: int = 3
    client_requests_per_second: float = 0.0
    server_url: str | None = None

    def override(self, **overrides) -> "PipelineConfig":
        """Return a copy with the non-None overrides applied (flag wins)."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load the config file (argument, else $SLIMRAFT_CONFIG, else defaults).

    Unknown keys are rejected so typos do not silently fall back to
    defaults.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return PipelineConfig()
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"config file {file_path} does not exist")
    try:
        raw = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {file_path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {file_path} must hold a JSON object")
    known = {field.name for field in dataclasses.fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return PipelineConfig(**raw)
