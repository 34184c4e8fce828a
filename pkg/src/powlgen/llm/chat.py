"""Chat transport layer: message types, provider configs, and adapters.

Every provider exposes a single ``complete(messages) -> str`` method. HTTP
providers resolve the API key from an environment variable at request time;
the key value is never written to disk and never appears in any prompt.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

VALID_ROLES = ("system", "user", "assistant")

# Vendors with a built-in request adapter, plus the scripted mock.
VENDORS = ("openai", "anthropic", "google", "mock")

DEFAULT_ENDPOINTS = {
    "openai": "https://api.openai.com/v1",
    "anthropic": "https://api.anthropic.com",
    "google": "https://generativelanguage.googleapis.com",
}

RETRYABLE_STATUS = (408, 429, 500, 502, 503, 504)


class TransportError(RuntimeError):
    """Raised when a provider cannot deliver a completion."""


@dataclass(frozen=True)
class ChatMessage:
    """One turn of a conversation."""

    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in VALID_ROLES:
            raise ValueError(f"invalid role: {self.role!r}")
        if not self.content.strip():
            raise ValueError("message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ProviderConfig:
    """Where and how to reach a chat model.

    ``api_key_env`` names the environment variable holding the key; the key
    itself is read per request and never stored. ``script_path`` is only used
    by the mock vendor.
    """

    vendor: str
    model_name: str
    endpoint: str = ""
    api_key_env: str = "POWLGEN_API_KEY"
    timeout: float = 120.0
    max_retries: int = 2
    script_path: str | None = None
    extra_headers: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.vendor not in VENDORS:
            raise ValueError(f"unknown vendor: {self.vendor!r}")
        if self.vendor != "mock" and not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not self.endpoint and self.vendor in DEFAULT_ENDPOINTS:
            object.__setattr__(self, "endpoint", DEFAULT_ENDPOINTS[self.vendor])


class ChatProvider:
    """Interface for chat completion backends."""

    def complete(self, messages: list[ChatMessage]) -> str:
        raise NotImplementedError


class HttpChatProvider(ChatProvider):
    """Chat provider speaking one of the common vendor wire formats."""

    def __init__(self, config: ProviderConfig, api_key: str | None = None):
        if config.vendor == "mock":
            raise ValueError("use MockChatProvider for the mock vendor")
        self.config = config
        self._api_key_override = api_key

    def _resolve_key(self) -> str:
        if self._api_key_override:
            return self._api_key_override
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise TransportError(
                f"API key environment variable {self.config.api_key_env!r} is not set"
            )
        return key

    def _build_request(self, messages: list[ChatMessage], key: str) -> tuple[str, dict, dict]:
        cfg = self.config
        base = cfg.endpoint.rstrip("/")
        if cfg.vendor == "openai":
            url = f"{base}/chat/completions"
            headers = {"Authorization": f"Bearer {key}"}
            payload = {
                "model": cfg.model_name,
                "messages": [m.to_dict() for m in messages],
            }
        elif cfg.vendor == "anthropic":
            url = f"{base}/v1/messages"
            headers = {"x-api-key": key, "anthropic-version": "2023-06-01"}
            system = "\n\n".join(m.content for m in messages if m.role == "system")
            payload = {
                "model": cfg.model_name,
                "max_tokens": 8192,
                "messages": [m.to_dict() for m in messages if m.role != "system"],
            }
            if system:
                payload["system"] = system
        else:
            url = f"{base}/v1beta/models/{cfg.model_name}:generateContent"
            headers = {"x-goog-api-key": key}
            contents = []
            system_parts = []
            for m in messages:
                if m.role == "system":
                    system_parts.append(m.content)
                    continue
                role = "model" if m.role == "assistant" else "user"
                contents.append({"role": role, "parts": [{"text": m.content}]})
            payload = {"contents": contents}
            if system_parts:
                payload["systemInstruction"] = {
                    "parts": [{"text": "\n\n".join(system_parts)}]
                }
        headers.update(cfg.extra_headers)
        return url, headers, payload

    def _extract_text(self, body: dict) -> str:
        vendor = self.config.vendor
        try:
            if vendor == "openai":
                return body["choices"][0]["message"]["content"]
            if vendor == "anthropic":
                return "".join(
                    block.get("text", "")
                    for block in body["content"]
                    if block.get("type", "text") == "text"
                )
            parts = body["candidates"][0]["content"]["parts"]
            return "".join(part.get("text", "") for part in parts)
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed {vendor} response: {exc}") from exc

    def complete(self, messages: list[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        key = self._resolve_key()
        url, headers, payload = self._build_request(messages, key)
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(min(2.0 ** attempt * 0.2, 5.0))
            try:
                response = httpx.post(
                    url, headers=headers, json=payload, timeout=self.config.timeout
                )
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code in RETRYABLE_STATUS:
                last_error = TransportError(
                    f"{self.config.vendor} returned HTTP {response.status_code}"
                )
                continue
            if response.status_code != 200:
                raise TransportError(
                    f"{self.config.vendor} returned HTTP {response.status_code}: "
                    f"{response.text[:200]}"
                )
            return self._extract_text(response.json())
        raise TransportError(
            f"{self.config.vendor} request failed after {attempts} attempts: {last_error}"
        )


class MockChatProvider(ChatProvider):
    """Replays canned responses from a JSON array of strings, in order.

    Each ``complete`` call consumes the next entry. Requests are recorded so
    tests can assert on the exact prompts that were sent. Running past the end
    of the script raises ``TransportError``.
    """

    def __init__(self, script: list[str] | str | Path):
        if isinstance(script, (str, Path)):
            data = json.loads(Path(script).read_text(encoding="utf-8"))
        else:
            data = list(script)
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ValueError("mock script must be a JSON array of strings")
        self.responses = data
        self.cursor = 0
        self.requests: list[list[ChatMessage]] = []

    def complete(self, messages: list[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        self.requests.append(list(messages))
        if self.cursor >= len(self.responses):
            raise TransportError(
                f"mock script exhausted after {len(self.responses)} responses"
            )
        response = self.responses[self.cursor]
        self.cursor += 1
        return response


def make_provider(config: ProviderConfig, api_key: str | None = None) -> ChatProvider:
    """Builds the provider matching ``config.vendor``."""
    if config.vendor == "mock":
        if not config.script_path:
            raise ValueError("mock vendor requires script_path")
        return MockChatProvider(config.script_path)
    return HttpChatProvider(config, api_key=api_key)
