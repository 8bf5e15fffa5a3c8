"""Core value types shared by every pipeline stage."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping


class ValidationError(ValueError):
    """A record violates one of its declared invariants."""


class LabelSource(str, Enum):
    """Where an utterance transcript came from."""

    REAL = "real"
    PSEUDO = "pseudo"
    NONE = "none"


class Provenance(str, Enum):
    """Which synthesis strategy produced a triplet."""

    TTS_SYNTHESIZED = "tts_synthesized"
    REAL_LABEL = "real_label"
    PSEUDO_LABEL = "pseudo_label"


class FilterStatus(str, Enum):
    UNFILTERED = "unfiltered"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class UtteranceRecord:
    """One audio file plus its (real or pseudo) transcript; one manifest row.

    ``extra`` holds unknown manifest keys verbatim so richer manifests
    round-trip losslessly. Treat it as read-only.
    """

    audio_filepath: str
    duration: float
    text: str = ""
    label_source: LabelSource = LabelSource.REAL
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.audio_filepath:
            raise ValidationError("audio_filepath must be non-empty")
        if self.duration < 0:
            raise ValidationError(f"duration must be >= 0, got {self.duration}")
        if self.label_source is LabelSource.NONE and self.text:
            raise ValidationError("label_source 'none' requires empty text")

    def with_transcript(self, text: str, label_source: LabelSource) -> "UtteranceRecord":
        return replace(self, text=text, label_source=label_source)

    def to_json_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "audio_filepath": self.audio_filepath,
            "duration": self.duration,
            "text": self.text,
            "label_source": self.label_source.value,
        }
        row.update(self.extra)
        return row


@dataclass(frozen=True)
class QATriplet:
    """A question/context/answer sample, optionally tied to context audio.

    ``context_audio``/``context_duration`` stay ``None`` until speech is
    attached (by synthesis, or because the context came from real audio).
    """

    id: str
    question: str
    context_text: str
    answer: str
    provenance: Provenance
    context_audio: str | None = None
    context_duration: float | None = None
    filter_status: FilterStatus = FilterStatus.UNFILTERED
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("triplet id must be non-empty")
        for name in ("question", "context_text", "answer"):
            if not getattr(self, name):
                raise ValidationError(f"triplet {self.id}: {name} must be non-empty")
        if self.context_duration is not None and self.context_duration < 0:
            raise ValidationError(f"triplet {self.id}: context_duration must be >= 0")

    def with_status(self, status: FilterStatus) -> "QATriplet":
        """Return a copy with the filter decision applied.

        Only the unfiltered -> accepted/rejected transitions are legal.
        """
        if self.filter_status is not FilterStatus.UNFILTERED:
            raise ValidationError(
                f"triplet {self.id}: filter_status already {self.filter_status.value}"
            )
        if status is FilterStatus.UNFILTERED:
            raise ValidationError("cannot transition back to unfiltered")
        return replace(self, filter_status=status)

    def with_audio(self, path: str, duration: float) -> "QATriplet":
        return replace(self, context_audio=path, context_duration=duration)

    def to_json_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "id": self.id,
            "question": self.question,
            "context_text": self.context_text,
            "answer": self.answer,
            "provenance": self.provenance.value,
            "filter_status": self.filter_status.value,
        }
        if self.context_audio is not None:
            row["context_audio"] = self.context_audio
        if self.context_duration is not None:
            row["context_duration"] = self.context_duration
        row.update(self.extra)
        return row


@dataclass(frozen=True)
class SamplingParams:
    """Decoding parameters sent with every chat completion request."""

    temperature: float = 1.0
    top_p: float = 0.95
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ValidationError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.max_tokens < 1:
            raise ValidationError(f"max_tokens must be positive, got {self.max_tokens}")


_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs shared by the synthesis pipelines."""

    qa_pairs_per_generation: int = 20
    max_synth_duration: float = 20.0
    upsample_factor: int = 3
    rng_seed: int = 0
    speaker_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.qa_pairs_per_generation < 1:
            raise ValidationError("qa_pairs_per_generation must be >= 1")
        if self.upsample_factor < 1:
            raise ValidationError("upsample_factor must be >= 1")
        if self.max_synth_duration <= 0:
            raise ValidationError("max_synth_duration must be > 0")
        if not 0 <= self.rng_seed <= _MAX_SEED:
            raise ValidationError("rng_seed must fit in an unsigned 64-bit integer")
        if isinstance(self.speaker_ids, list):
            object.__setattr__(self, "speaker_ids", tuple(self.speaker_ids))


def make_triplet_id(*parts: object) -> str:
    """Derive a stable opaque id from the identifying parts of a triplet.

    The same parts always map to the same id, so re-running a pipeline on
    identical inputs reproduces identical manifests.
    """
    digest = hashlib.sha1("\x1e".join(str(p) for p in parts).encode("utf-8"))
    return digest.hexdigest()[:16]
