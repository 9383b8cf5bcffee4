"""Chat-completion client used by distillation, test synthesis and evaluation.

The wire shape is the OpenAI-compatible ``/chat/completions`` endpoint, which
most hosted and self-served models accept. Tests and offline runs use the
stub clients at the bottom of this module.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)


class ModelClientError(RuntimeError):
    """Base class for model transport failures."""


class AuthError(ModelClientError):
    pass


class TransportTimeoutError(ModelClientError):
    """Retries exhausted on timeouts, connection failures or 5xx/429."""


class MalformedResponseError(ModelClientError):
    pass


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str
    model_name: str
    api_key_env_var: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    max_response_tokens: int = 16384
    request_timeout: float = 600.0
    max_retries: int = 3
    backoff_initial: float = 1.0
    backoff_max: float = 60.0
    max_in_flight: int = 8
    paper_faithful: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.paper_faithful and self.temperature != 0:
            raise ValueError("evaluation in paper-faithful mode uses greedy decoding (temperature 0)")


class ModelClient(Protocol):
    def complete(self, system_prompt: str, user_prompt: str) -> str: ...


class HttpChatClient:
    """Provider-agnostic chat-completions client with bounded retries.

    The API key is read from the configured environment variable on each
    call and only ever sent in the Authorization header. A semaphore caps
    concurrent in-flight requests when the client is shared across workers.
    """

    RETRY_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})

    def __init__(
        self,
        config: ModelEndpointConfig,
        transport: httpx.BaseTransport | None = None,
        transcript_path: str | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._http = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.request_timeout,
            transport=transport,
        )
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._transcript_path = transcript_path
        self._transcript_lock = threading.Lock()
        self._sleep = sleep

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "HttpChatClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env_var, "")
        if not key:
            raise AuthError(f"environment variable {self.config.api_key_env_var} is not set")
        return key

    def _payload(self, system_prompt: str, user_prompt: str) -> dict[str, Any]:
        return {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_response_tokens,
        }

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        key = self._api_key()
        payload = self._payload(system_prompt, user_prompt)
        headers = {"Authorization": f"Bearer {key}"}
        delay = self.config.backoff_initial
        last_error = ""
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(delay)
                delay = min(delay * 2, self.config.backoff_max)
            try:
                with self._slots:
                    resp = self._http.post("/chat/completions", json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                last_error = f"timeout: {exc}"
                log.warning("model request timed out (attempt %d)", attempt + 1)
                continue
            except httpx.TransportError as exc:
                last_error = f"transport: {exc}"
                log.warning("model transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code in self.RETRY_STATUS:
                last_error = f"HTTP {resp.status_code}"
                log.warning("model endpoint returned HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise MalformedResponseError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            text = _extract_text(resp)
            self._record(payload, text)
            return text
        raise TransportTimeoutError(
            f"giving up after {self.config.max_retries + 1} requests ({last_error})"
        )

    def _record(self, payload: dict[str, Any], text: str) -> None:
        if not self._transcript_path:
            return
        row = {"model": payload["model"], "messages": payload["messages"], "response": text}
        with self._transcript_lock, open(self._transcript_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _extract_text(resp: httpx.Response) -> str:
    try:
        body = resp.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected response body: {resp.text[:500]}") from exc
    if isinstance(content, list):
        # some providers return content parts
        content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
    if not isinstance(content, str):
        raise MalformedResponseError("response content is not text")
    return content


@dataclass(frozen=True)
class RecordedCall:
    system_prompt: str
    user_prompt: str


class StubModelClient:
    """Deterministic stand-in for a model endpoint.

    ``responder`` maps (user_prompt, call_number_for_that_prompt) to a
    response; call numbers start at 1. Every call is recorded.
    """

    def __init__(self, responder: Callable[[str, int], str] | str):
        if isinstance(responder, str):
            text = responder
            responder = lambda _prompt, _n: text  # noqa: E731
        self._responder = responder
        self._lock = threading.Lock()
        self.calls: list[RecordedCall] = []
        self._per_prompt: dict[str, int] = {}

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        with self._lock:
            self.calls.append(RecordedCall(system_prompt, user_prompt))
            n = self._per_prompt.get(user_prompt, 0) + 1
            self._per_prompt[user_prompt] = n
        return self._responder(user_prompt, n)

    def calls_for(self, user_prompt: str) -> int:
        with self._lock:
            return self._per_prompt.get(user_prompt, 0)


class ScriptedModelClient(StubModelClient):
    """Replays a fixed response list per prompt key.

    ``script`` maps a key to the responses for successive calls; ``key_of``
    extracts that key from the user prompt. Running past the end of a
    script repeats its last entry.
    """

    def __init__(self, script: dict[str, Sequence[str]], key_of: Callable[[str], str]):
        self.script = {k: list(v) for k, v in script.items()}

        def respond(prompt: str, n: int) -> str:
            replies = self.script[key_of(prompt)]
            return replies[min(n, len(replies)) - 1]

        super().__init__(respond)
