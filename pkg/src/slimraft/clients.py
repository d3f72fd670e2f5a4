"""Chat-completion clients: HTTP endpoint wrapper, plus mocks for offline use.

The HTTP client speaks the common `/chat/completions` wire shape, retries
with exponential backoff up to its budget, and honors a token-bucket rate
limit. Mock implementations are substitutable anywhere a client is accepted.
"""

from __future__ import annotations

import abc
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import httpx

from .errors import ClientError

logger = logging.getLogger(__name__)

API_KEY_ENV = "SLIMRAFT_API_KEY"

Messages = Sequence[dict[str, str]]


@dataclass
class ClientConfig:
    """Connection settings for a chat-completion endpoint."""

    endpoint: str
    model: str
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    requests_per_second: float = 0.0  # 0 disables rate limiting
    burst: int = 1


class ChatClient(abc.ABC):
    """Minimal chat interface; implementations must be thread-safe."""

    @abc.abstractmethod
    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        """Return the assistant text for a list of chat messages."""


class TokenBucket:
    """Blocking token bucket; thread-safe, monotonic-clock based."""

    def __init__(self, rate: float, burst: int = 1):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = max(1, burst)
        self._tokens = float(self.capacity)
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._updated) * self.rate
                )
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


class HttpChatClient(ChatClient):
    """Chat client for an OpenAI-style HTTP chat-completion endpoint.

    Reads the API key from the SLIMRAFT_API_KEY environment variable at call
    time. Retries transport errors, HTTP 429 and 5xx responses with
    exponential backoff until the retry budget is exhausted.
    """

    def __init__(
        self,
        config: ClientConfig,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(timeout=config.timeout, transport=transport)
        self._bucket = (
            TokenBucket(config.requests_per_second, config.burst)
            if config.requests_per_second > 0
            else None
        )

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        payload = {
            "model": self.config.model,
            "messages": list(messages),
            "temperature": temperature,
        }
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._client.post(
                    self.config.endpoint,
                    json=payload,
                    headers=headers,
                )
                if response.status_code == 429 or response.status_code >= 500:
                    raise ClientError(f"HTTP {response.status_code} from endpoint")
                response.raise_for_status()
                return self._extract_text(response.json())
            except (httpx.HTTPError, ClientError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.config.max_retries:
                    delay = self.config.backoff_base * (2**attempt)
                    logger.warning(
                        "chat request failed (%s); retry %d/%d in %.1fs",
                        exc,
                        attempt + 1,
                        self.config.max_retries,
                        delay,
                    )
                    self._sleep(delay)
        raise ClientError(
            f"chat completion failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _extract_text(body: dict) -> str:
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"malformed completion response: {body!r}") from exc


class MockChatClient(ChatClient):
    """Scripted client for tests and offline runs.

    Responds with the scripted texts in order (repeating the last one when
    the script runs out) or by calling a responder function. Every request
    payload is recorded for inspection.
    """

    def __init__(
        self,
        responses: Sequence[str] | None = None,
        responder: Callable[[Messages], str] | None = None,
    ):
        if responses is None and responder is None:
            raise ValueError("provide scripted responses or a responder")
        self._responses = list(responses or [])
        self._responder = responder
        self._lock = threading.Lock()
        self.requests: list[list[dict[str, str]]] = []

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        with self._lock:
            self.requests.append([dict(message) for message in messages])
            if self._responder is not None:
                return self._responder(messages)
            index = min(len(self.requests) - 1, len(self._responses) - 1)
            if index < 0:
                raise ClientError("mock client has no scripted responses left")
            return self._responses[index]
