"""Backend clients plus a URL factory: ``mock:`` selects the in-process fakes.

Mock URLs, for hermetic runs:

- ``mock:chat`` -- scripted LLM (QA generator + grounding judge)
- ``mock:tts?chars_per_sec=15&sample_rate=16000`` -- silence synthesizer
- ``mock:asr?references=ref.jsonl&drop_rate=0.0&seed=0`` -- replays the
  transcripts of the given manifest, keyed by audio_filepath

Anything ``http(s)://`` gets a real HTTP client.
"""

from __future__ import annotations

from typing import Sequence
from urllib.parse import parse_qs, urlparse

from .base import (
    AsrClient,
    AsrRequest,
    AsrResponse,
    BackendError,
    ChatClient,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    ExhaustedRetries,
    FinishReason,
    NonRetryableError,
    ProtocolError,
    RetryPolicy,
    Role,
    TransientBackendError,
    TtsClient,
    TtsRequest,
    TtsResponse,
    UnknownSpeaker,
    make_silence_wav,
    wav_frame_count,
)
from .http import AsrHttpClient, ChatHttpClient, TtsHttpClient
from .mock import (
    PROSE_MARKER,
    MockAsrClient,
    MockChatClient,
    MockTtsClient,
    default_chat_responder,
    grounded_judge_completion,
    qa_generation_completion,
)

__all__ = [
    "AsrClient",
    "AsrHttpClient",
    "AsrRequest",
    "AsrResponse",
    "BackendError",
    "ChatClient",
    "ChatHttpClient",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "ExhaustedRetries",
    "FinishReason",
    "MockAsrClient",
    "MockChatClient",
    "MockTtsClient",
    "NonRetryableError",
    "PROSE_MARKER",
    "ProtocolError",
    "RetryPolicy",
    "Role",
    "TransientBackendError",
    "TtsClient",
    "TtsHttpClient",
    "TtsRequest",
    "TtsResponse",
    "UnknownSpeaker",
    "default_chat_responder",
    "grounded_judge_completion",
    "make_asr_client",
    "make_chat_client",
    "make_silence_wav",
    "make_tts_client",
    "qa_generation_completion",
    "wav_frame_count",
]


def _mock_params(url: str) -> tuple[str, dict[str, str]]:
    parsed = urlparse(url)
    params = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
    return parsed.path, params


def make_chat_client(
    url: str,
    model: str = "",
    api_key_env: str | None = None,
    policy: RetryPolicy | None = None,
) -> ChatClient:
    scheme = urlparse(url).scheme
    if scheme == "mock":
        return MockChatClient(policy=policy)
    if scheme in ("http", "https"):
        return ChatHttpClient(url, model=model, api_key_env=api_key_env, policy=policy)
    raise ValueError(f"unsupported chat backend URL: {url}")


def make_tts_client(
    url: str,
    speakers: Sequence[str] | None = None,
    api_key_env: str | None = None,
    policy: RetryPolicy | None = None,
) -> TtsClient:
    scheme = urlparse(url).scheme
    if scheme == "mock":
        _, params = _mock_params(url)
        return MockTtsClient(
            chars_per_sec=float(params.get("chars_per_sec", 15.0)),
            sample_rate=int(params.get("sample_rate", 16000)),
            speakers=speakers,
            policy=policy,
        )
    if scheme in ("http", "https"):
        return TtsHttpClient(url, speakers=speakers, api_key_env=api_key_env, policy=policy)
    raise ValueError(f"unsupported TTS backend URL: {url}")


def make_asr_client(
    url: str,
    api_key_env: str | None = None,
    policy: RetryPolicy | None = None,
) -> AsrClient:
    scheme = urlparse(url).scheme
    if scheme == "mock":
        _, params = _mock_params(url)
        references: dict[str, str] = {}
        if "references" in params:
            from ..manifest import read_manifest

            references = {
                record.audio_filepath: record.text for record in read_manifest(params["references"])
            }
        return MockAsrClient(
            references=references,
            drop_rate=float(params.get("drop_rate", 0.0)),
            seed=int(params.get("seed", 0)),
            policy=policy,
        )
    if scheme in ("http", "https"):
        return AsrHttpClient(url, api_key_env=api_key_env, policy=policy)
    raise ValueError(f"unsupported ASR backend URL: {url}")
