"""Deterministic in-process backends for hermetic tests and dry runs.

Selected by the ``mock:`` URL scheme. Responses are pure functions of the
request (plus the mock's fixed configuration), so identical runs produce
identical outputs regardless of scheduling. Each mock also instruments its
in-flight request count so tests can assert the concurrency cap.
"""

from __future__ import annotations

import random
import re
import threading
from typing import Callable, Mapping, Sequence

from .base import (
    AsrRequest,
    AsrResponse,
    ChatRequest,
    ChatResponse,
    FinishReason,
    NonRetryableError,
    RetryingClient,
    RetryPolicy,
    TtsRequest,
    TtsResponse,
    UnknownSpeaker,
    make_silence_wav,
)

# A transcript carrying this marker makes the mock LLM reply with free
# prose instead of the numbered grammar, to exercise failed-generation
# handling end to end.
PROSE_MARKER = "<<prose>>"

_PAIR_COUNT_RE = re.compile(r"List of (\d+) questions")
_TRANSCRIPT_SECTION_RE = re.compile(
    r"#Given Transcript#\n(.*?)\n\nList of ", re.DOTALL
)


class _InstrumentedClient(RetryingClient):
    """Tracks the peak number of concurrent calls for assertions."""

    def __init__(self, policy: RetryPolicy | None = None):
        super().__init__(policy)
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight = 0
        self.calls = 0

    def _track(self) -> "_Tracker":
        return _Tracker(self)


class _Tracker:
    def __init__(self, client: _InstrumentedClient):
        self._client = client

    def __enter__(self) -> "_Tracker":
        with self._client._lock:
            self._client._in_flight += 1
            self._client.calls += 1
            if self._client._in_flight > self._client.max_in_flight:
                self._client.max_in_flight = self._client._in_flight
        return self

    def __exit__(self, *exc_info: object) -> None:
        with self._client._lock:
            self._client._in_flight -= 1


def _extract_last_section(prompt: str, header: str) -> str:
    """Content of the last ``#Header#`` block (the judged triplet, not the examples)."""
    marker = f"#{header}#\n"
    start = prompt.rfind(marker)
    if start < 0:
        return ""
    body = prompt[start + len(marker) :]
    end = body.find("\n\n#")
    return body[: end if end >= 0 else len(body)].strip()


def qa_generation_completion(prompt: str) -> str:
    """Default scripted reply to a generation prompt.

    Emits exactly the requested number of grammar-conformant pairs, derived
    deterministically from the transcript; answers quote transcript words
    so a grounding judge accepts them.
    """
    count_match = _PAIR_COUNT_RE.search(prompt)
    n_pairs = int(count_match.group(1)) if count_match else 1
    section = _TRANSCRIPT_SECTION_RE.search(prompt)
    transcript = section.group(1).strip() if section else prompt.strip()
    if PROSE_MARKER in transcript:
        return (
            "The passage is an interesting one and raises several themes "
            "worth discussing at length, but I would rather describe them "
            "in my own words than follow a rigid list format."
        )
    words = transcript.split() or ["nothing"]
    lines = []
    for i in range(1, n_pairs + 1):
        # Answers quote a contiguous span so a grounding judge accepts them.
        start = (i - 1) % max(1, len(words) - 2)
        span = " ".join(words[start : start + 3])
        lines.append(f"{i}. Instruction: What does the speaker mention in part {i}?")
        lines.append(f"{i}. Output: {span}")
    return "\n".join(lines)


def grounded_judge_completion(prompt: str) -> str:
    """Default scripted judge: accept iff the answer appears in the context.

    The containment check is case-insensitive, mirroring a judge that
    rejects answers not grounded in the context.
    """
    context = _extract_last_section(prompt, "Context")
    answer = _extract_last_section(prompt, "Answer")
    if answer and answer.lower() in context.lower():
        return "The answer is grounded in the given context.\nACCEPT"
    return "The answer does not appear in the given context.\nREJECT"


def default_chat_responder(request: ChatRequest) -> str:
    """Route a prompt to the generation or judge script by its layout."""
    prompt = request.messages[-1].content
    if "#Given Transcript#" in prompt:
        return qa_generation_completion(prompt)
    if "#Evaluation#" in prompt:
        return grounded_judge_completion(prompt)
    return f"echo: {prompt[:200]}"


class MockChatClient(_InstrumentedClient):
    """Chat backend driven by a responder callable.

    The responder maps a ChatRequest to completion text; it may raise
    backend errors to exercise retry handling.
    """

    def __init__(
        self,
        responder: Callable[[ChatRequest], str] | None = None,
        policy: RetryPolicy | None = None,
    ):
        super().__init__(policy)
        self._responder = responder or default_chat_responder

    def chat_complete(self, request: ChatRequest) -> ChatResponse:
        def attempt() -> ChatResponse:
            with self._track():
                text = self._responder(request)
            return ChatResponse(text=text, finish_reason=FinishReason.STOP)

        return self._call_with_retries(attempt)


class MockTtsClient(_InstrumentedClient):
    """Synthesizes silence with duration proportional to text length."""

    def __init__(
        self,
        chars_per_sec: float = 15.0,
        sample_rate: int = 16000,
        speakers: Sequence[str] | None = None,
        policy: RetryPolicy | None = None,
    ):
        super().__init__(policy)
        if chars_per_sec <= 0:
            raise ValueError("chars_per_sec must be positive")
        self.chars_per_sec = chars_per_sec
        self.sample_rate = sample_rate
        self.speakers = tuple(speakers) if speakers is not None else None

    def synthesize(self, request: TtsRequest) -> TtsResponse:
        def attempt() -> TtsResponse:
            with self._track():
                if not request.text:
                    raise NonRetryableError("cannot synthesize empty text")
                if self.speakers is not None and request.speaker_id not in self.speakers:
                    raise UnknownSpeaker(f"speaker {request.speaker_id!r} is not configured")
                frames = round(len(request.text) / self.chars_per_sec * self.sample_rate)
                return TtsResponse(
                    audio=make_silence_wav(frames, self.sample_rate),
                    duration=frames / self.sample_rate,
                    sample_rate=self.sample_rate,
                )

        return self._call_with_retries(attempt)


class MockAsrClient(_InstrumentedClient):
    """Returns stored reference transcripts, optionally with word-drop noise.

    ``drop_rate`` removes each reference word independently, seeded per
    audio path, so the noise is stable across runs and call orderings.
    """

    def __init__(
        self,
        references: Mapping[str, str] | None = None,
        drop_rate: float = 0.0,
        seed: int = 0,
        policy: RetryPolicy | None = None,
    ):
        super().__init__(policy)
        if not 0 <= drop_rate <= 1:
            raise ValueError("drop_rate must be in [0, 1]")
        self.references = dict(references) if references else {}
        self.drop_rate = drop_rate
        self.seed = seed

    def transcribe(self, request: AsrRequest) -> AsrResponse:
        def attempt() -> AsrResponse:
            with self._track():
                path = request.audio_path
                if path is None:
                    raise NonRetryableError("mock ASR needs an audio path")
                if path not in self.references:
                    raise NonRetryableError(f"unreadable audio path: {path}")
                reference = self.references[path]
                if self.drop_rate == 0:
                    return AsrResponse(transcript=reference)
                if self.drop_rate == 1:
                    return AsrResponse(transcript="")
                rng = random.Random(f"{self.seed}|{path}")
                kept = [w for w in reference.split() if rng.random() >= self.drop_rate]
                return AsrResponse(transcript=" ".join(kept))

        return self._call_with_retries(attempt)
