from __future__ import annotations

import pytest

from speechqa.prompts import PromptLibrary, load_prompt_library
from speechqa.records import (
    FilterStatus,
    LabelSource,
    Provenance,
    QATriplet,
    UtteranceRecord,
)


@pytest.fixture(scope="session")
def prompt_library() -> PromptLibrary:
    return load_prompt_library()


def make_utterance(
    index: int = 0,
    text: str = "the quick brown fox jumps over the lazy dog",
    duration: float = 3.0,
    label_source: LabelSource = LabelSource.REAL,
) -> UtteranceRecord:
    return UtteranceRecord(
        audio_filepath=f"audio/utt_{index:04d}.wav",
        duration=duration,
        text=text,
        label_source=label_source,
    )


def make_triplet(
    index: int = 0,
    question: str = "what does the fox do?",
    context: str = "the quick brown fox jumps over the lazy dog",
    answer: str = "jumps over the lazy dog",
    provenance: Provenance = Provenance.REAL_LABEL,
    status: FilterStatus = FilterStatus.UNFILTERED,
    context_audio: str | None = None,
    context_duration: float | None = None,
) -> QATriplet:
    return QATriplet(
        id=f"t{index:06d}",
        question=question,
        context_text=context,
        answer=answer,
        provenance=provenance,
        filter_status=status,
        context_audio=context_audio,
        context_duration=context_duration,
    )
