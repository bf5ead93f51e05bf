"""Generation backends: the scripted mock, a generic HTTP chat client, and
the registry that ``generate`` resolves backend ids against.

Two response disciplines exist. In agent mode the backend is handed the
canonical graph JSON schema as a structured-output contract and its reply
must be exactly one JSON object. In baseline mode the reply is free text and
only the first balanced-brace JSON object is considered; anything else is a
parse error by design, because lenient repair would hide how fragile
prompt-only output actually is.

Transport failures (connection, timeout, rate limiting) are retried twice
with exponential backoff and then surfaced; retries never consume
correction rounds, which are reserved for semantic feedback.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

from .errors import (
    BackendTimeout,
    BackendUnavailable,
    ConfigError,
    RateLimited,
    TransportError,
)
from .model import KnowledgeGraph, parse_graph_payload
from .prompts import PromptMessage, load_graph_schema

__all__ = [
    "Mode",
    "GenerationConfig",
    "BackendResponse",
    "GenerationBackend",
    "ScriptedBackend",
    "HTTPChatBackend",
    "register_backend",
    "unregister_backend",
    "get_backend",
    "registered_backends",
    "extract_first_json_object",
    "generate",
]

MAX_TRANSPORT_RETRIES = 2
RETRY_BASE_DELAY_S = 0.25


class Mode(enum.Enum):
    ONTOLOGX = "ontologx"
    BASELINE = "baseline"


@dataclass(frozen=True)
class GenerationConfig:
    backend_id: str = "scripted"
    temperature: float = 0.7
    max_correction_rounds: int = 3
    mode: Mode = Mode.ONTOLOGX

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_correction_rounds < 0:
            raise ValueError("max_correction_rounds must be non-negative")


@dataclass(frozen=True)
class BackendResponse:
    raw_text: str
    parsed: Optional[KnowledgeGraph]
    parse_errors: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.parsed is None) == (not self.parse_errors):
            raise ValueError("parsed must be present exactly when parse_errors is empty")


class GenerationBackend(Protocol):
    def complete(
        self,
        messages: Sequence[PromptMessage],
        temperature: float,
        response_schema: Optional[dict] = None,
    ) -> str: ...


@dataclass
class ScriptedBackend:
    """Deterministic mock: answers from a queue of canned response strings
    and records every call for assertions."""

    responses: list[str] = field(default_factory=list)
    calls: list[dict] = field(default_factory=list)

    @classmethod
    def from_graphs(cls, graphs) -> "ScriptedBackend":
        from .model import graph_to_json

        return cls(responses=[graph_to_json(g) for g in graphs])

    def complete(self, messages, temperature, response_schema=None) -> str:
        self.calls.append(
            {
                "messages": tuple(messages),
                "temperature": temperature,
                "response_schema": response_schema,
            }
        )
        if not self.responses:
            raise RuntimeError("scripted backend ran out of responses")
        return self.responses.pop(0)


class HTTPChatBackend:
    """Chat-completions style HTTP client.

    Speaks ``POST <endpoint>`` with ``{"model", "messages", "temperature"}``
    plus a ``response_format`` json-schema block when a structured-output
    contract is given, and reads the reply from
    ``choices[0].message.content``. Credentials come from the environment,
    never from flags or config files.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        session=None,
    ):
        import requests

        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self._api_key = api_key
        self._session = session if session is not None else requests.Session()

    def complete(self, messages, temperature, response_schema=None) -> str:
        import requests

        payload = {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": temperature,
        }
        if response_schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": "knowledge_graph", "schema": response_schema},
            }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._session.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise BackendTimeout(f"backend timed out: {exc}") from exc
        except requests.RequestException as exc:
            raise BackendUnavailable(f"backend unreachable: {exc}") from exc
        if response.status_code == 429:
            raise RateLimited("backend rate limited the request")
        if response.status_code >= 500:
            raise BackendUnavailable(f"backend error {response.status_code}")
        if response.status_code != 200:
            raise ConfigError(
                f"backend rejected the request with status {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed backend response: {exc}") from exc


_REGISTRY: dict[str, GenerationBackend] = {}


def register_backend(backend_id: str, backend: GenerationBackend) -> None:
    _REGISTRY[backend_id] = backend


def unregister_backend(backend_id: str) -> None:
    _REGISTRY.pop(backend_id, None)


def registered_backends() -> list[str]:
    return sorted(_REGISTRY)


def get_backend(backend_id: str) -> GenerationBackend:
    try:
        return _REGISTRY[backend_id]
    except KeyError:
        raise ConfigError(f"no backend registered under id {backend_id!r}") from None


def extract_first_json_object(text: str) -> Optional[str]:
    """The first balanced-brace JSON object in ``text``, or None.

    Balance tracking is string-aware so braces inside JSON strings do not
    count. The extent is taken from the first ``{``; if that extent is not
    valid JSON the whole extraction fails (no further scanning).
    """
    start = text.find("{")
    if start == -1:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _parse_structured(raw: str) -> BackendResponse:
    try:
        payload = json.loads(raw.strip())
    except json.JSONDecodeError as exc:
        return BackendResponse(raw, None, (f"response is not valid JSON: {exc}",))
    graph, errors = parse_graph_payload(payload)
    if graph is None:
        return BackendResponse(raw, None, tuple(errors))
    return BackendResponse(raw, graph, ())


def _parse_freetext(raw: str) -> BackendResponse:
    blob = extract_first_json_object(raw)
    if blob is None:
        return BackendResponse(raw, None, ("no JSON object found in response",))
    try:
        payload = json.loads(blob)
    except json.JSONDecodeError as exc:
        return BackendResponse(raw, None, (f"extracted JSON object is invalid: {exc}",))
    graph, errors = parse_graph_payload(payload)
    if graph is None:
        return BackendResponse(raw, None, tuple(errors))
    return BackendResponse(raw, graph, ())


def generate(
    messages: Sequence[PromptMessage],
    cfg: GenerationConfig,
    sleep: Callable[[float], None] = time.sleep,
) -> BackendResponse:
    """Invoke the configured backend once and parse its reply into a
    candidate graph. Transport errors are retried up to
    ``MAX_TRANSPORT_RETRIES`` times, then raised."""
    backend = get_backend(cfg.backend_id)
    schema = load_graph_schema() if cfg.mode is Mode.ONTOLOGX else None
    attempt = 0
    while True:
        try:
            raw = backend.complete(messages, cfg.temperature, response_schema=schema)
            break
        except TransportError:
            if attempt >= MAX_TRANSPORT_RETRIES:
                raise
            sleep(RETRY_BASE_DELAY_S * (2**attempt))
            attempt += 1
    if cfg.mode is Mode.ONTOLOGX:
        return _parse_structured(raw)
    return _parse_freetext(raw)
