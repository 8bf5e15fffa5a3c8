"""Build question/context/answer triplets from a reading-comprehension corpus.

Input rows are MS-MARCO-shaped: a question, several candidate passages
(one or more possibly flagged as selected), and a list of answer strings.
Each usable row becomes exactly one triplet whose context is the passage
that carries the answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .manifest import ManifestError, _iter_rows
from .records import FilterStatus, Provenance, QATriplet, make_triplet_id


@dataclass(frozen=True)
class RawQARecord:
    """One source corpus row: question, candidate contexts, answers."""

    question: str
    contexts: tuple[tuple[str, bool], ...]  # (passage_text, is_selected)
    answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.contexts:
            raise ValueError("RawQARecord requires at least one context")
        if isinstance(self.contexts, list):
            object.__setattr__(self, "contexts", tuple(tuple(c) for c in self.contexts))
        if isinstance(self.answers, list):
            object.__setattr__(self, "answers", tuple(self.answers))


@dataclass(frozen=True)
class BuildSummary:
    inputs: int
    emitted: int
    skipped_no_answer: int
    skipped_no_context: int

    @property
    def skipped(self) -> int:
        return self.skipped_no_answer + self.skipped_no_context


def _qualifying_context(record: RawQARecord, answer: str) -> str | None:
    """Pick the context that carries the answer.

    The is_selected flag is the corpus ground truth; when no context is
    flagged, fall back to case-insensitive containment of any answer.
    Ties go to the first match in corpus order.
    """
    for passage, is_selected in record.contexts:
        if is_selected and passage:
            return passage
    lowered_answers = [a.lower() for a in record.answers if a]
    for passage, _ in record.contexts:
        if not passage:
            continue
        haystack = passage.lower()
        if any(a in haystack for a in lowered_answers):
            return passage
    return None


def build_triplets(records: Sequence[RawQARecord]) -> tuple[list[QATriplet], BuildSummary]:
    """Convert corpus rows into triplets destined for TTS synthesis.

    Emits one triplet per row that has a non-empty answer and a qualifying
    context; everything else is skipped and tallied in the summary, never
    raised. Emitted triplets have no audio yet (that is the TTS stage's
    job) and are unfiltered.
    """
    triplets: list[QATriplet] = []
    no_answer = 0
    no_context = 0
    for index, record in enumerate(records):
        answer = next((a for a in record.answers if a.strip()), None)
        if answer is None or not record.question.strip():
            no_answer += 1
            continue
        context = _qualifying_context(record, answer)
        if context is None:
            no_context += 1
            continue
        triplets.append(
            QATriplet(
                id=make_triplet_id(index, record.question, context, answer),
                question=record.question,
                context_text=context,
                answer=answer,
                provenance=Provenance.TTS_SYNTHESIZED,
                filter_status=FilterStatus.UNFILTERED,
            )
        )
    summary = BuildSummary(
        inputs=len(records),
        emitted=len(triplets),
        skipped_no_answer=no_answer,
        skipped_no_context=no_context,
    )
    return triplets, summary


def filter_by_duration(triplets: Iterable[QATriplet], cap: float) -> list[QATriplet]:
    """Keep triplets whose synthesized context is strictly under ``cap`` seconds.

    Order is preserved. Every triplet must already carry a context_duration.
    """
    kept: list[QATriplet] = []
    for triplet in triplets:
        if triplet.context_duration is None:
            raise ValueError(f"triplet {triplet.id} has no context_duration; run TTS first")
        if triplet.context_duration < cap:
            kept.append(triplet)
    return kept


def read_raw_qa_corpus(path: str | Path) -> list[RawQARecord]:
    """Read a JSONL corpus of question/answers/passages rows.

    Each line needs ``question`` (string), ``answers`` (array of strings),
    and ``passages`` (array of ``{passage_text, is_selected}`` objects,
    is_selected accepted as bool or 0/1).
    """
    records: list[RawQARecord] = []
    for line_no, row in _iter_rows(path):
        for key in ("question", "answers", "passages"):
            if key not in row:
                raise ManifestError(f"missing required field '{key}'", path, line_no)
        passages = row["passages"]
        if not isinstance(passages, list) or not passages:
            raise ManifestError("'passages' must be a non-empty array", path, line_no)
        contexts: list[tuple[str, bool]] = []
        for entry in passages:
            if not isinstance(entry, dict) or "passage_text" not in entry:
                raise ManifestError("each passage needs 'passage_text'", path, line_no)
            contexts.append((str(entry["passage_text"]), bool(entry.get("is_selected", False))))
        answers = row["answers"]
        if not isinstance(answers, list):
            raise ManifestError("'answers' must be an array", path, line_no)
        records.append(
            RawQARecord(
                question=str(row["question"]),
                contexts=tuple(contexts),
                answers=tuple(str(a) for a in answers),
            )
        )
    return records


def summary_json(summary: BuildSummary) -> dict[str, Any]:
    return {
        "inputs": summary.inputs,
        "emitted": summary.emitted,
        "skipped": summary.skipped,
        "skipped_no_answer": summary.skipped_no_answer,
        "skipped_no_context": summary.skipped_no_context,
    }


def dump_summary(summary: BuildSummary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary_json(summary), indent=2) + "\n", encoding="utf-8")
