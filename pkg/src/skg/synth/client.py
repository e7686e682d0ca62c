"""Model service client: chat-completions wire shape, retries, rate caps.

The loop only depends on the small ``complete(messages, ...)`` surface,
so tests and offline runs swap in scripted clients. The HTTP client
retries transport faults, 5xx, and 429 with exponential backoff and
enforces a concurrent-request cap plus a token-rate budget shared by
all workers.
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field

import requests

from ..errors import SkgError

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class TransportError(SkgError):
    """The service was unreachable or kept failing after retries."""

    def __init__(self, message: str, status: int | None = None, retries: int = 0):
        super().__init__(message)
        self.status = status
        self.retries = retries


class AuthError(SkgError):
    """401/403 or a missing token; never retried."""


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint_url: str
    model_name: str
    auth_token_env_name: str = "SKG_MODEL_TOKEN"
    temperature: float = 0.7
    max_output_tokens: int = 4096
    request_timeout: float = 60.0
    max_retries: int = 4
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    backoff_jitter: float = 0.2
    max_concurrent_requests: int = 4
    tokens_per_minute: int = 200_000

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    retries: int = 0
    latency_ms: int = 0


class _RateBudget:
    """Token bucket over a rolling minute; callers block until room exists."""

    def __init__(self, tokens_per_minute: int):
        self.capacity = tokens_per_minute
        self._spent: list[tuple[float, int]] = []
        self._lock = threading.Lock()

    def acquire(self, tokens: int, clock=time.monotonic, sleep=time.sleep):
        while True:
            with self._lock:
                now = clock()
                self._spent = [(t, n) for t, n in self._spent if now - t < 60.0]
                used = sum(n for _, n in self._spent)
                if used + tokens <= self.capacity or not self._spent:
                    self._spent.append((now, tokens))
                    return
                wait = 60.0 - (now - self._spent[0][0]) + 0.01
            sleep(max(wait, 0.01))


class HttpLlmClient:
    """Synchronous client for a chat-completions-compatible endpoint."""

    def __init__(self, config: LlmClientConfig, session=None, sleep=time.sleep, rng=None):
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._semaphore = threading.BoundedSemaphore(config.max_concurrent_requests)
        self._budget = _RateBudget(config.tokens_per_minute)

    def _token(self) -> str:
        token = os.environ.get(self.config.auth_token_env_name, "")
        if not token:
            raise AuthError(
                f"environment variable {self.config.auth_token_env_name} is not set"
            )
        return token

    def _backoff(self, attempt: int) -> float:
        base = self.config.backoff_base * (self.config.backoff_factor**attempt)
        jitter = 1.0 + self._rng.uniform(-self.config.backoff_jitter, self.config.backoff_jitter)
        return base * jitter

    def complete(
        self,
        messages: list[dict],
        *,
        temperature: float | None = None,
        max_tokens: int | None = None,
    ) -> CompletionResult:
        token = self._token()
        payload = {
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature if temperature is None else temperature,
            "max_tokens": max_tokens or self.config.max_output_tokens,
        }
        # rough budget: a token per ~4 prompt chars plus the response allowance
        estimate = sum(len(m.get("content", "")) for m in messages) // 4
        estimate += payload["max_tokens"]

        started = time.monotonic()
        last_error: str = ""
        last_status: int | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self._backoff(attempt - 1))
            with self._semaphore:
                self._budget.acquire(estimate, sleep=self._sleep)
                try:
                    response = self._session.post(
                        self.config.endpoint_url,
                        json=payload,
                        headers={"Authorization": f"Bearer {token}"},
                        timeout=self.config.request_timeout,
                    )
                except requests.RequestException as exc:
                    last_error, last_status = str(exc), None
                    logger.warning("model request failed (attempt %d): %s", attempt, exc)
                    continue
            if response.status_code in (401, 403):
                raise AuthError(f"service rejected the token (HTTP {response.status_code})")
            if response.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                last_status = response.status_code
                logger.warning("model returned %s (attempt %d)", response.status_code, attempt)
                continue
            if response.status_code != 200:
                raise TransportError(
                    f"service returned HTTP {response.status_code}",
                    status=response.status_code,
                    retries=attempt,
                )
            text = self._extract_text(response)
            latency = int((time.monotonic() - started) * 1000)
            return CompletionResult(text=text, retries=attempt, latency_ms=latency)
        raise TransportError(
            f"service still failing after {self.config.max_retries} retries: {last_error}",
            status=last_status,
            retries=self.config.max_retries,
        )

    @staticmethod
    def _extract_text(response) -> str:
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"response body lacks assistant text: {exc}") from exc


@dataclass
class ScriptedLlmClient:
    """Deterministic stand-in: returns queued responses in order."""

    responses: list[str]
    calls: list[list[dict]] = field(default_factory=list)

    def complete(self, messages, *, temperature=None, max_tokens=None) -> CompletionResult:
        self.calls.append(messages)
        if not self.responses:
            raise TransportError("scripted client ran out of responses")
        return CompletionResult(text=self.responses.pop(0))
