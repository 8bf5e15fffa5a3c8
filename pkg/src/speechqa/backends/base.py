"""Shared backend types: requests, responses, errors, retry policy.

Every client (HTTP or mock) enforces the same contract: transient failures
(timeouts, 429, 5xx) are retried with exponential backoff and full jitter
up to ``max_attempts``; anything else fails on the first attempt. A
per-client semaphore caps in-flight requests at ``max_concurrency``.
"""

from __future__ import annotations

import io
import random
import threading
import time
import wave
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol, Sequence, TypeVar

from ..records import SamplingParams, ValidationError

T = TypeVar("T")


class BackendError(Exception):
    """Base class for all backend failures."""


class TransientBackendError(BackendError):
    """Retryable failure: timeout, connection reset, 429, or 5xx."""


class NonRetryableError(BackendError):
    """Permanent failure (4xx other than 429, bad input); never retried."""


class ProtocolError(BackendError):
    """The service answered with a body the client cannot interpret."""


class ExhaustedRetries(BackendError):
    """All retry attempts failed with transient errors."""


class UnknownSpeaker(NonRetryableError):
    """TTS request named a speaker outside the configured speaker set."""


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    messages: tuple[ChatMessage, ...]
    sampling: SamplingParams = field(default_factory=SamplingParams)

    def __post_init__(self) -> None:
        if isinstance(self.messages, list):
            object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValidationError("chat request needs at least one message")
        if self.messages[-1].role is not Role.USER:
            raise ValidationError("last chat message must have role 'user'")

    @classmethod
    def single_turn(
        cls, model_name: str, prompt: str, sampling: SamplingParams | None = None
    ) -> "ChatRequest":
        return cls(
            model_name=model_name,
            messages=(ChatMessage(Role.USER, prompt),),
            sampling=sampling or SamplingParams(),
        )


class FinishReason(str, Enum):
    STOP = "stop"
    LENGTH = "length"
    ERROR = "error"


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: FinishReason = FinishReason.STOP
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.finish_reason is FinishReason.STOP and not self.text:
            raise ValidationError("finish_reason 'stop' requires non-empty text")


@dataclass(frozen=True)
class TtsRequest:
    text: str
    speaker_id: str


@dataclass(frozen=True)
class TtsResponse:
    audio: bytes  # RIFF/WAVE container
    duration: float
    sample_rate: int

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValidationError("successful synthesis must report duration > 0")
        frames, rate = wav_frame_count(self.audio)
        if rate != self.sample_rate:
            raise ValidationError(
                f"payload sample rate {rate} disagrees with reported {self.sample_rate}"
            )
        if abs(frames - self.duration * self.sample_rate) > 1:
            raise ValidationError(
                f"payload holds {frames} frames but duration says "
                f"{self.duration * self.sample_rate:.1f}"
            )


@dataclass(frozen=True)
class AsrRequest:
    audio_path: str | None = None
    audio_payload: bytes | None = None

    def __post_init__(self) -> None:
        if self.audio_path is None and self.audio_payload is None:
            raise ValidationError("ASR request needs an audio path or payload")


@dataclass(frozen=True)
class AsrResponse:
    transcript: str  # may be empty (silence), but present on every success


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff_ms: float = 500.0
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be >= 1")
        if self.max_concurrency < 1:
            raise ValidationError("max_concurrency must be >= 1")
        if self.base_backoff_ms < 0:
            raise ValidationError("base_backoff_ms must be >= 0")


def wav_frame_count(payload: bytes) -> tuple[int, int]:
    """Return (frames, sample_rate) of a RIFF/WAVE payload."""
    try:
        with wave.open(io.BytesIO(payload), "rb") as wav:
            return wav.getnframes(), wav.getframerate()
    except (wave.Error, EOFError) as exc:
        raise ValidationError(f"payload is not a valid RIFF/WAVE container: {exc}") from exc


def make_silence_wav(frames: int, sample_rate: int) -> bytes:
    """Build a 16-bit mono PCM WAV of silence with exactly ``frames`` frames."""
    buffer = io.BytesIO()
    with wave.open(buffer, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(b"\x00\x00" * frames)
    return buffer.getvalue()


class _Limiter:
    """Semaphore guard shared by all calls through one client."""

    def __init__(self, max_concurrency: int):
        self._semaphore = threading.Semaphore(max_concurrency)

    def __enter__(self) -> "_Limiter":
        self._semaphore.acquire()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self._semaphore.release()


class RetryingClient:
    """Base for clients: holds the policy, limiter, and retry loop."""

    def __init__(self, policy: RetryPolicy | None = None):
        self.policy = policy or RetryPolicy()
        self._limiter = _Limiter(self.policy.max_concurrency)
        self._rng = random.Random()

    def _call_with_retries(self, attempt_fn: Callable[[], T]) -> T:
        last_error: TransientBackendError | None = None
        with self._limiter:
            for attempt in range(self.policy.max_attempts):
                try:
                    return attempt_fn()
                except TransientBackendError as exc:
                    last_error = exc
                    if attempt + 1 < self.policy.max_attempts:
                        self._sleep_before_retry(attempt)
        raise ExhaustedRetries(
            f"gave up after {self.policy.max_attempts} attempts: {last_error}"
        ) from last_error

    def _sleep_before_retry(self, attempt: int) -> None:
        # Exponential backoff with full jitter; kind to rate-limited servers.
        ceiling = (self.policy.base_backoff_ms / 1000.0) * (2**attempt)
        delay = self._rng.uniform(0, ceiling)
        if delay > 0:
            time.sleep(delay)


class ChatClient(Protocol):
    policy: RetryPolicy

    def chat_complete(self, request: ChatRequest) -> ChatResponse: ...


class TtsClient(Protocol):
    policy: RetryPolicy
    speakers: Sequence[str] | None

    def synthesize(self, request: TtsRequest) -> TtsResponse: ...


class AsrClient(Protocol):
    policy: RetryPolicy

    def transcribe(self, request: AsrRequest) -> AsrResponse: ...
