"""Orchestration of the three synthesis strategies, judging, and mixing.

Work fans out to a bounded thread pool sized by the backend's concurrency
cap; results are buffered and emitted in input order so manifests are
reproducible. Per-item backend failures are counted, never fatal. Ctrl-C
drains in-flight work and returns the completed prefix with the report
marked interrupted.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from concurrent.futures import CancelledError, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence, TypeVar

from .backends.base import (
    AsrClient,
    AsrRequest,
    BackendError,
    ChatClient,
    ChatRequest,
    TtsClient,
    TtsRequest,
)
from .manifest import write_manifest
from .parsing import FailedGeneration, JudgeDecision, VerdictMissing, parse_filter_verdict, parse_qa_list
from .prompts import PromptLibrary
from .records import (
    FilterStatus,
    LabelSource,
    PipelineConfig,
    Provenance,
    QATriplet,
    SamplingParams,
    UtteranceRecord,
    make_triplet_id,
)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class RunReport:
    """Bookkeeping for one pipeline run; serialized beside the output."""

    inputs_seen: int = 0
    generations_attempted: int = 0
    failed_generations: int = 0
    pairs_emitted: int = 0
    accepted: int = 0
    rejected: int = 0
    skipped: int = 0
    malformed_pairs: int = 0
    wall_time: float = 0.0
    interrupted: bool = False

    def __post_init__(self) -> None:
        if self.accepted + self.rejected > self.pairs_emitted:
            raise ValueError("accepted + rejected cannot exceed pairs_emitted")
        if self.failed_generations > self.generations_attempted:
            raise ValueError("failed_generations cannot exceed generations_attempted")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "inputs_seen": self.inputs_seen,
            "generations_attempted": self.generations_attempted,
            "failed_generations": self.failed_generations,
            "pairs_emitted": self.pairs_emitted,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "skipped": self.skipped,
            "malformed_pairs": self.malformed_pairs,
            "wall_time": self.wall_time,
            "interrupted": self.interrupted,
        }


def write_report(report: RunReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )


@contextmanager
def run_lock(target: str | Path) -> Iterator[None]:
    """Guard an output target against concurrent runs via a lock file."""
    lock_path = Path(str(target) + ".lock")
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"lock file {lock_path} exists; another run may be writing here "
            "(remove the stale lock to proceed)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        try:
            lock_path.unlink()
        except OSError:
            pass


@dataclass
class _Outcome:
    index: int
    value: Any = None
    error: BaseException | None = None


def _map_ordered(
    items: Sequence[T],
    fn: Callable[[int, T], R],
    max_workers: int,
) -> tuple[list[_Outcome], bool]:
    """Run ``fn`` over items concurrently, collecting outcomes in input order.

    Backend errors are captured per item. On KeyboardInterrupt the queue is
    drained gracefully: in-flight items finish, queued ones are cancelled,
    and only completed outcomes are returned, flagged as interrupted.
    """
    outcomes: list[_Outcome] = []
    interrupted = False
    executor = ThreadPoolExecutor(max_workers=max(1, max_workers))
    futures = [executor.submit(fn, i, item) for i, item in enumerate(items)]
    try:
        for i, future in enumerate(futures):
            try:
                outcomes.append(_Outcome(index=i, value=future.result()))
            except BackendError as exc:
                outcomes.append(_Outcome(index=i, error=exc))
    except (KeyboardInterrupt, CancelledError):
        interrupted = True
        executor.shutdown(wait=True, cancel_futures=True)
        # Keep whatever finished beyond the point we had already collected.
        for i in range(len(outcomes), len(futures)):
            future = futures[i]
            if future.done() and not future.cancelled():
                try:
                    outcomes.append(_Outcome(index=i, value=future.result()))
                except BackendError as exc:
                    outcomes.append(_Outcome(index=i, error=exc))
                except (KeyboardInterrupt, CancelledError):
                    continue
            else:
                break
    finally:
        executor.shutdown(wait=True, cancel_futures=True)
    return outcomes, interrupted


def run_tts_pipeline(
    triplets: Sequence[QATriplet],
    config: PipelineConfig,
    tts: TtsClient,
    output_dir: str | Path,
) -> tuple[list[QATriplet], RunReport]:
    """Attach synthesized context audio to text-only triplets.

    Each triplet gets a speaker drawn uniformly from the configured set,
    seeded by rng_seed, so assignments are reproducible. Synthesized audio
    lands in ``output_dir/<triplet id>.wav``. Triplets whose synthesized
    duration reaches max_synth_duration are dropped (strictly-under cap),
    as are triplets whose synthesis exhausts its retries.
    """
    if not config.speaker_ids:
        raise ValueError("run_tts_pipeline requires a non-empty speaker_ids set")
    started = time.perf_counter()
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = random.Random(config.rng_seed)
    speakers = [config.speaker_ids[rng.randrange(len(config.speaker_ids))] for _ in triplets]

    def synthesize_one(index: int, triplet: QATriplet) -> QATriplet | None:
        response = tts.synthesize(TtsRequest(text=triplet.context_text, speaker_id=speakers[index]))
        if not response.duration < config.max_synth_duration:
            return None  # over the cap; do not keep audio for dropped samples
        audio_path = out_dir / f"{triplet.id}.wav"
        audio_path.write_bytes(response.audio)
        return triplet.with_audio(str(audio_path), response.duration)

    outcomes, interrupted = _map_ordered(triplets, synthesize_one, tts.policy.max_concurrency)

    survivors: list[QATriplet] = []
    failed = 0
    over_cap = 0
    for outcome in outcomes:
        if outcome.error is not None:
            failed += 1
        elif outcome.value is None:
            over_cap += 1
        else:
            survivors.append(outcome.value)
    report = RunReport(
        inputs_seen=len(triplets),
        generations_attempted=len(outcomes),
        failed_generations=failed,
        pairs_emitted=len(survivors),
        skipped=over_cap,
        wall_time=time.perf_counter() - started,
        interrupted=interrupted,
    )
    return survivors, report


def _provenance_for(label: LabelSource) -> Provenance:
    return Provenance.REAL_LABEL if label is LabelSource.REAL else Provenance.PSEUDO_LABEL


def run_qa_generation(
    utterances: Sequence[UtteranceRecord],
    config: PipelineConfig,
    llm: ChatClient,
    prompts: PromptLibrary,
    model_name: str = "",
    sampling: SamplingParams | None = None,
    strict_parse: bool = False,
) -> tuple[list[QATriplet], RunReport]:
    """Generate QA triplets for transcribed utterances via the LLM.

    One chat call per utterance requests all qa_pairs_per_generation pairs
    at once. Completions that defy the output grammar are counted as
    failed generations and dropped; the run itself keeps going.
    """
    for utt in utterances:
        if not utt.text.strip():
            raise ValueError(f"utterance {utt.audio_filepath} has no transcript")
    started = time.perf_counter()
    sampling = sampling or SamplingParams()
    n_pairs = config.qa_pairs_per_generation

    def generate_one(index: int, utt: UtteranceRecord) -> tuple[list, int] | None:
        prompt = prompts.render_generation(utt.text, n_pairs)
        response = llm.chat_complete(ChatRequest.single_turn(model_name, prompt, sampling))
        try:
            return parse_qa_list(response.text, expected_pairs=n_pairs, strict=strict_parse)
        except FailedGeneration:
            return None

    outcomes, interrupted = _map_ordered(utterances, generate_one, llm.policy.max_concurrency)

    triplets: list[QATriplet] = []
    failed = 0
    malformed_total = 0
    for outcome in outcomes:
        utt = utterances[outcome.index]
        if outcome.error is not None or outcome.value is None:
            failed += 1
            continue
        pairs, malformed = outcome.value
        malformed_total += malformed
        for pair in pairs:
            triplets.append(
                QATriplet(
                    id=make_triplet_id(
                        utt.audio_filepath, outcome.index, pair.index, pair.question, pair.answer
                    ),
                    question=pair.question,
                    context_text=utt.text,
                    answer=pair.answer,
                    provenance=_provenance_for(utt.label_source),
                    context_audio=utt.audio_filepath,
                    context_duration=utt.duration,
                )
            )
    report = RunReport(
        inputs_seen=len(utterances),
        generations_attempted=len(outcomes),
        failed_generations=failed,
        pairs_emitted=len(triplets),
        malformed_pairs=malformed_total,
        wall_time=time.perf_counter() - started,
        interrupted=interrupted,
    )
    return triplets, report


def transcribe_utterances(
    unlabeled: Sequence[UtteranceRecord],
    asr: AsrClient,
) -> tuple[list[UtteranceRecord], RunReport]:
    """Pseudo-label unlabeled utterances with the ASR backend.

    Every input row is returned (in order): successes carry the pseudo
    transcript, while failures and empty transcriptions stay unlabeled and
    count as skipped.
    """
    for utt in unlabeled:
        if utt.label_source is not LabelSource.NONE:
            raise ValueError(f"utterance {utt.audio_filepath} is already labeled")
    started = time.perf_counter()

    def transcribe_one(index: int, utt: UtteranceRecord) -> str:
        return asr.transcribe(AsrRequest(audio_path=utt.audio_filepath)).transcript

    outcomes, interrupted = _map_ordered(unlabeled, transcribe_one, asr.policy.max_concurrency)

    labeled: list[UtteranceRecord] = []
    skipped = 0
    for outcome in outcomes:
        utt = unlabeled[outcome.index]
        transcript = outcome.value if outcome.error is None else ""
        if transcript and transcript.strip():
            labeled.append(utt.with_transcript(transcript, LabelSource.PSEUDO))
        else:
            skipped += 1
            labeled.append(utt)
    report = RunReport(
        inputs_seen=len(unlabeled),
        generations_attempted=len(outcomes),
        failed_generations=sum(1 for o in outcomes if o.error is not None),
        pairs_emitted=len(labeled) - skipped,
        skipped=skipped,
        wall_time=time.perf_counter() - started,
        interrupted=interrupted,
    )
    return labeled, report


def run_pseudo_label_pipeline(
    unlabeled: Sequence[UtteranceRecord],
    config: PipelineConfig,
    asr: AsrClient,
    llm: ChatClient,
    prompts: PromptLibrary,
    pseudo_manifest_path: str | Path,
    model_name: str = "",
    sampling: SamplingParams | None = None,
    strict_parse: bool = False,
) -> tuple[list[QATriplet], RunReport]:
    """Transcribe unlabeled speech, persist the pseudo labels, then generate QA.

    Composition is observable: the intermediate pseudo-labeled manifest is
    written to ``pseudo_manifest_path`` before generation starts, one row
    per input utterance. Utterances whose transcription came back empty are
    skipped before generation and counted.
    """
    started = time.perf_counter()
    labeled, asr_report = transcribe_utterances(unlabeled, asr)
    write_manifest(labeled, pseudo_manifest_path)

    usable = [utt for utt in labeled if utt.label_source is LabelSource.PSEUDO]
    triplets, gen_report = run_qa_generation(
        usable,
        config,
        llm,
        prompts,
        model_name=model_name,
        sampling=sampling,
        strict_parse=strict_parse,
    )
    report = RunReport(
        inputs_seen=len(unlabeled),
        generations_attempted=gen_report.generations_attempted,
        failed_generations=gen_report.failed_generations,
        pairs_emitted=gen_report.pairs_emitted,
        skipped=asr_report.skipped,
        malformed_pairs=gen_report.malformed_pairs,
        wall_time=time.perf_counter() - started,
        interrupted=asr_report.interrupted or gen_report.interrupted,
    )
    return triplets, report


def run_filter(
    triplets: Sequence[QATriplet],
    judge: ChatClient,
    prompts: PromptLibrary,
    model_name: str = "",
    sampling: SamplingParams | None = None,
    audit_path: str | Path | None = None,
) -> tuple[list[QATriplet], RunReport]:
    """Judge every triplet with the filtering prompt; keep the accepted ones.

    A completion without a parseable final verdict is retried once, then
    the triplet is rejected (conservative default for data quality). The
    full judged list, with statuses and judge reasoning, is persisted to
    ``audit_path`` when given. Triplet content is never modified, only the
    filter status.
    """
    for triplet in triplets:
        if triplet.filter_status is not FilterStatus.UNFILTERED:
            raise ValueError(f"triplet {triplet.id} has already been filtered")
    started = time.perf_counter()
    sampling = sampling or SamplingParams()
    attempts = 0
    attempts_lock = threading.Lock()

    def judge_one(index: int, triplet: QATriplet) -> tuple[JudgeDecision, str]:
        nonlocal attempts
        prompt = prompts.render_filter(triplet)
        request = ChatRequest.single_turn(model_name, prompt, sampling)
        last_reason = ""
        for _ in range(2):  # one retry for an unparseable verdict
            with attempts_lock:
                attempts += 1
            response = judge.chat_complete(request)
            try:
                verdict = parse_filter_verdict(response.text)
                return verdict.decision, verdict.reasoning
            except VerdictMissing as exc:
                last_reason = str(exc)
        return JudgeDecision.REJECT, f"verdict unparseable after retry: {last_reason}"

    outcomes, interrupted = _map_ordered(triplets, judge_one, judge.policy.max_concurrency)

    accepted: list[QATriplet] = []
    judged: list[QATriplet] = []
    rejected = 0
    for outcome in outcomes:
        triplet = triplets[outcome.index]
        if outcome.error is not None:
            decision, reasoning = JudgeDecision.REJECT, f"backend failure: {outcome.error}"
        else:
            decision, reasoning = outcome.value
        status = (
            FilterStatus.ACCEPTED if decision is JudgeDecision.ACCEPT else FilterStatus.REJECTED
        )
        updated = triplet.with_status(status)
        judged.append(replace(updated, extra={**updated.extra, "judge_reasoning": reasoning}))
        if status is FilterStatus.ACCEPTED:
            accepted.append(updated)
        else:
            rejected += 1
    if audit_path is not None:
        write_manifest(judged, audit_path)

    report = RunReport(
        inputs_seen=len(triplets),
        generations_attempted=attempts,
        pairs_emitted=len(judged),
        accepted=len(accepted),
        rejected=rejected,
        wall_time=time.perf_counter() - started,
        interrupted=interrupted,
    )
    return accepted, report


def mix_datasets(
    original: Sequence[T],
    synthetic_sets: Sequence[tuple[Sequence[T], int]],
    shuffle_seed: int | None = None,
) -> list[T]:
    """Concatenate original data with upsampled synthetic sets.

    Output order: original first, then each synthetic set in the given
    order with its repetitions contiguous. Passing a shuffle seed applies
    one final deterministic shuffle over the combined list.
    """
    mixed: list[T] = list(original)
    for records, factor in synthetic_sets:
        if factor < 1:
            raise ValueError(f"upsample factor must be >= 1, got {factor}")
        mixed.extend(list(records) * factor)
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(mixed)
    return mixed
