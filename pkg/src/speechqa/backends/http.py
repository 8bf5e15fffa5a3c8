"""HTTP clients for the three inference services.

The chat endpoint speaks the de-facto open chat-completions JSON schema
(``model``, ``messages``, ``temperature``, ``top_p``, ``max_tokens``;
reply in ``choices[0].message.content``). TTS and ASR use a minimal
JSON-in/JSON-out shape with base64 audio, documented in the README.
Authentication is a bearer token read from an environment variable named
in the config; tokens never live on disk.
"""

from __future__ import annotations

import base64
import os
from typing import Any, Sequence

import requests

from .base import (
    AsrRequest,
    AsrResponse,
    ChatRequest,
    ChatResponse,
    FinishReason,
    NonRetryableError,
    ProtocolError,
    RetryingClient,
    RetryPolicy,
    TransientBackendError,
    TtsRequest,
    TtsResponse,
    UnknownSpeaker,
)
from ..records import ValidationError

_DEFAULT_TIMEOUT = 60.0


class _HttpClient(RetryingClient):
    def __init__(
        self,
        base_url: str,
        api_key_env: str | None = None,
        policy: RetryPolicy | None = None,
        timeout: float = _DEFAULT_TIMEOUT,
    ):
        super().__init__(policy)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        if api_key_env:
            token = os.environ.get(api_key_env)
            if token:
                self._session.headers["Authorization"] = f"Bearer {token}"

    def _post_json(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        url = f"{self.base_url}{path}"
        try:
            response = self._session.post(url, json=payload, timeout=self.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise TransientBackendError(f"{url}: {exc}") from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(f"{url}: HTTP {response.status_code}")
        if response.status_code >= 400:
            raise NonRetryableError(
                f"{url}: HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"{url}: response body is not JSON") from exc
        if not isinstance(body, dict):
            raise ProtocolError(f"{url}: expected a JSON object body")
        return body


class ChatHttpClient(_HttpClient):
    """OpenAI-compatible chat completions client."""

    def __init__(
        self,
        base_url: str,
        model: str | None = None,
        api_key_env: str | None = None,
        policy: RetryPolicy | None = None,
        timeout: float = _DEFAULT_TIMEOUT,
    ):
        super().__init__(base_url, api_key_env, policy, timeout)
        self.model = model

    def chat_complete(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model_name or self.model,
            "messages": [
                {"role": m.role.value, "content": m.content} for m in request.messages
            ],
            "temperature": request.sampling.temperature,
            "top_p": request.sampling.top_p,
            "max_tokens": request.sampling.max_tokens,
        }

        def attempt() -> ChatResponse:
            body = self._post_json("/chat/completions", payload)
            try:
                choice = body["choices"][0]
                text = choice["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise ProtocolError(f"malformed chat completion body: {exc}") from exc
            finish = choice.get("finish_reason", "stop")
            try:
                reason = FinishReason(finish)
            except ValueError:
                reason = FinishReason.ERROR
            usage = body.get("usage") or {}
            try:
                return ChatResponse(
                    text=text or "",
                    finish_reason=reason,
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
            except ValidationError as exc:
                raise ProtocolError(str(exc)) from exc

        return self._call_with_retries(attempt)


class TtsHttpClient(_HttpClient):
    """JSON TTS client; audio is returned base64-encoded in the body."""

    def __init__(
        self,
        base_url: str,
        speakers: Sequence[str] | None = None,
        api_key_env: str | None = None,
        policy: RetryPolicy | None = None,
        timeout: float = _DEFAULT_TIMEOUT,
    ):
        super().__init__(base_url, api_key_env, policy, timeout)
        self.speakers = tuple(speakers) if speakers is not None else None

    def synthesize(self, request: TtsRequest) -> TtsResponse:
        if not request.text:
            raise NonRetryableError("cannot synthesize empty text")
        if self.speakers is not None and request.speaker_id not in self.speakers:
            raise UnknownSpeaker(f"speaker {request.speaker_id!r} is not configured")
        payload = {"text": request.text, "speaker_id": request.speaker_id}

        def attempt() -> TtsResponse:
            body = self._post_json("/synthesize", payload)
            try:
                audio = base64.b64decode(body["audio_b64"])
                duration = float(body["duration"])
                sample_rate = int(body["sample_rate"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"malformed synthesis body: {exc}") from exc
            try:
                return TtsResponse(audio=audio, duration=duration, sample_rate=sample_rate)
            except ValidationError as exc:
                raise ProtocolError(str(exc)) from exc

        return self._call_with_retries(attempt)


class AsrHttpClient(_HttpClient):
    """JSON ASR client; sends audio base64-encoded, receives a transcript."""

    def transcribe(self, request: AsrRequest) -> AsrResponse:
        payload_bytes = request.audio_payload
        if payload_bytes is None:
            assert request.audio_path is not None
            try:
                with open(request.audio_path, "rb") as f:
                    payload_bytes = f.read()
            except OSError as exc:
                raise NonRetryableError(f"unreadable audio path: {exc}") from exc
        payload = {"audio_b64": base64.b64encode(payload_bytes).decode("ascii")}

        def attempt() -> AsrResponse:
            body = self._post_json("/transcribe", payload)
            if "text" not in body or not isinstance(body["text"], str):
                raise ProtocolError("malformed transcription body: missing 'text'")
            return AsrResponse(transcript=body["text"])

        return self._call_with_retries(attempt)
