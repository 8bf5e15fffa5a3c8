"""Lossless JSONL manifest reading and writing, plus dataset splitting.

Manifests are UTF-8, one JSON object per line, LF line endings. Utterance
rows carry ``audio_filepath``/``duration``/``text`` (NeMo-style keys);
triplet rows carry ``id``/``question``/``context_text``/``answer`` plus
provenance and filter status. Unknown keys are kept verbatim on the record
and re-emitted on write.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence, TypeVar, Union

from .records import (
    FilterStatus,
    LabelSource,
    Provenance,
    QATriplet,
    UtteranceRecord,
    ValidationError,
)

Record = Union[UtteranceRecord, QATriplet]
T = TypeVar("T")

_UTTERANCE_KEYS = ("audio_filepath", "duration", "text")
_TRIPLET_KEYS = ("id", "question", "context_text", "answer", "provenance")
_TRIPLET_OPTIONAL = ("context_audio", "context_duration", "filter_status")


class ManifestError(Exception):
    """A manifest could not be read or a row violates the schema.

    Carries the offending path and, when applicable, the 1-based line
    number.
    """

    def __init__(self, message: str, path: str | Path, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def _parse_line(raw: str, path: str | Path, line_no: int) -> dict[str, Any]:
    try:
        row = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON ({exc.msg})", path, line_no) from exc
    if not isinstance(row, dict):
        raise ManifestError("line is not a JSON object", path, line_no)
    return row


def _utterance_from_row(row: dict[str, Any], path: str | Path, line_no: int) -> UtteranceRecord:
    for key in ("audio_filepath", "duration"):
        if key not in row:
            raise ManifestError(f"missing required field '{key}'", path, line_no)
    text = row.get("text", "")
    if "label_source" in row:
        try:
            label = LabelSource(row["label_source"])
        except ValueError:
            raise ManifestError(
                f"unknown label_source {row['label_source']!r}", path, line_no
            ) from None
    else:
        # Plain NeMo rows carry no label_source; a transcript means a real
        # label, an empty one means the utterance is unlabeled.
        label = LabelSource.REAL if text else LabelSource.NONE
    extra = {
        k: v for k, v in row.items() if k not in ("audio_filepath", "duration", "text", "label_source")
    }
    try:
        return UtteranceRecord(
            audio_filepath=row["audio_filepath"],
            duration=row["duration"],
            text=text,
            label_source=label,
            extra=extra,
        )
    except ValidationError as exc:
        raise ManifestError(str(exc), path, line_no) from exc


def _triplet_from_row(row: dict[str, Any], path: str | Path, line_no: int) -> QATriplet:
    for key in _TRIPLET_KEYS:
        if key not in row:
            raise ManifestError(f"missing required field '{key}'", path, line_no)
    try:
        provenance = Provenance(row["provenance"])
        status = FilterStatus(row.get("filter_status", "unfiltered"))
    except ValueError as exc:
        raise ManifestError(str(exc), path, line_no) from exc
    known = set(_TRIPLET_KEYS) | set(_TRIPLET_OPTIONAL)
    extra = {k: v for k, v in row.items() if k not in known}
    try:
        return QATriplet(
            id=row["id"],
            question=row["question"],
            context_text=row["context_text"],
            answer=row["answer"],
            provenance=provenance,
            context_audio=row.get("context_audio"),
            context_duration=row.get("context_duration"),
            filter_status=status,
            extra=extra,
        )
    except ValidationError as exc:
        raise ManifestError(str(exc), path, line_no) from exc


def _iter_rows(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot open manifest: {exc}", path) from exc
    with handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            yield line_no, _parse_line(raw, path, line_no)


def iter_manifest(path: str | Path) -> Iterator[UtteranceRecord]:
    """Stream utterance records from a manifest in file order."""
    for line_no, row in _iter_rows(path):
        yield _utterance_from_row(row, path, line_no)


def read_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Read a whole utterance manifest into memory, preserving order."""
    return list(iter_manifest(path))


def iter_triplet_manifest(path: str | Path) -> Iterator[QATriplet]:
    for line_no, row in _iter_rows(path):
        yield _triplet_from_row(row, path, line_no)


def read_triplet_manifest(path: str | Path) -> list[QATriplet]:
    """Read a QA-triplet manifest into memory, preserving order."""
    return list(iter_triplet_manifest(path))


def write_manifest(records: Iterable[Record], path: str | Path) -> None:
    """Write records as JSONL, one object per line.

    Round-trip contract: reading the written file yields records equal
    field-for-field to the input. Durations keep full float precision.
    """
    try:
        handle = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ManifestError(f"cannot write manifest: {exc}", path) from exc
    with handle:
        for record in records:
            handle.write(json.dumps(record.to_json_dict(), ensure_ascii=False))
            handle.write("\n")


def read_rows(path: str | Path) -> list[dict[str, Any]]:
    """Read manifest rows as raw JSON objects, no schema applied.

    For order/multiset operations (mixing, splitting) that must handle
    manifests whose rows are of mixed kinds.
    """
    return [row for _, row in _iter_rows(path)]


def write_rows(rows: Iterable[dict[str, Any]], path: str | Path) -> None:
    """Write raw JSON rows as JSONL, preserving each row's key order."""
    try:
        handle = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ManifestError(f"cannot write manifest: {exc}", path) from exc
    with handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False))
            handle.write("\n")


def read_predictions(path: str | Path) -> list[tuple[str, str]]:
    """Read a predictions file of ``{"id": ..., "text": ...}`` rows."""
    out: list[tuple[str, str]] = []
    for line_no, row in _iter_rows(path):
        for key in ("id", "text"):
            if key not in row:
                raise ManifestError(f"missing required field '{key}'", path, line_no)
        out.append((str(row["id"]), str(row["text"])))
    return out


def sniff_manifest_kind(path: str | Path) -> str:
    """Return ``"triplet"``, ``"utterance"``, or ``"empty"`` for a manifest."""
    for _, row in _iter_rows(path):
        return "triplet" if "question" in row else "utterance"
    return "empty"


def split_dataset(
    records: Sequence[T], seed: int, dev_size: int, test_size: int
) -> tuple[list[T], list[T], list[T]]:
    """Partition records into (train, dev, test) with a seeded shuffle.

    The shuffled order is sliced as test first, then dev, then train, so a
    fixed seed always reproduces the same byte-identical partition.
    """
    if dev_size < 0 or test_size < 0:
        raise ValueError("split sizes must be non-negative")
    if dev_size + test_size > len(records):
        raise ValueError(
            f"dev_size + test_size = {dev_size + test_size} exceeds corpus size {len(records)}"
        )
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    test = shuffled[:test_size]
    dev = shuffled[test_size : test_size + dev_size]
    train = shuffled[test_size + dev_size :]
    return train, dev, test
