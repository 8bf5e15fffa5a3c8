"""speechqa: every pipeline stage as a subcommand of one executable.

Exit codes: 0 on success, 1 on runtime failure (including an interrupted
run), 2 on usage or configuration errors. With --json, stdout carries only
machine-readable output; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from . import manifest, metrics, pipelines, triplets
from .config import ConfigError, RunConfig, load_config
from .parsing import FailedGeneration, VerdictMissing, parse_filter_verdict, parse_qa_list
from .prompts import TemplateError, load_prompt_library
from .records import FilterStatus

PROG = "speechqa"


def _err(message: str) -> None:
    print(f"{PROG}: {message}", file=sys.stderr)


def _emit(args: argparse.Namespace, human: str, payload: dict[str, Any]) -> None:
    if args.json:
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(human)


def _require_input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {p}")
    return p


def _prepare_output(args: argparse.Namespace, output: str) -> Path:
    p = Path(output)
    if p.exists() and not args.overwrite:
        raise ConfigError(f"output {p} exists; pass --overwrite to replace it")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _report_path(output: Path) -> Path:
    return output.with_suffix(".report.json")


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "n_pairs": getattr(args, "n_pairs", None),
        "max_duration": getattr(args, "max_duration", None),
        "upsample": getattr(args, "upsample", None),
        "strict_parse": getattr(args, "strict_parse", False),
    }
    return load_config(getattr(args, "config", None), overrides)


def _finish(
    args: argparse.Namespace,
    output: Path,
    report: pipelines.RunReport,
    stage: str,
    extra: dict[str, Any] | None = None,
) -> int:
    pipelines.write_report(report, _report_path(output))
    payload = {"stage": stage, "output": str(output), **report.to_json_dict()}
    if extra:
        payload.update(extra)
    human = (
        f"{stage}: wrote {output} (inputs {report.inputs_seen}, "
        f"emitted {report.pairs_emitted}, failed {report.failed_generations}, "
        f"skipped {report.skipped})"
    )
    _emit(args, human, payload)
    if report.interrupted:
        _err(f"{stage} interrupted; partial results written")
        return 1
    return 0


def cmd_build_triplets(args: argparse.Namespace) -> int:
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    records = triplets.read_raw_qa_corpus(input_path)
    built, summary = triplets.build_triplets(records)
    with pipelines.run_lock(output):
        manifest.write_manifest(built, output)
        triplets.dump_summary(summary, _report_path(output))
    payload = {"stage": "build-triplets", "output": str(output), **triplets.summary_json(summary)}
    _emit(
        args,
        f"build-triplets: {summary.emitted} triplets -> {output} "
        f"(inputs {summary.inputs}, skipped {summary.skipped})",
        payload,
    )
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    tts = config.tts_client()
    pending = manifest.read_triplet_manifest(input_path)
    audio_dir = output.parent / (output.stem + "_audio")
    with pipelines.run_lock(output):
        synthesized, report = pipelines.run_tts_pipeline(
            pending, config.pipeline, tts, audio_dir
        )
        manifest.write_manifest(synthesized, output)
    return _finish(args, output, report, "synthesize", {"audio_dir": str(audio_dir)})


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    prompts = load_prompt_library(args.templates or config.templates_dir)
    llm = config.chat_client("llm")
    records = manifest.read_manifest(input_path)
    usable = [r for r in records if r.text.strip()]
    skipped_unlabeled = len(records) - len(usable)
    if skipped_unlabeled:
        _err(f"skipping {skipped_unlabeled} utterances without transcripts")
    with pipelines.run_lock(output):
        generated, report = pipelines.run_qa_generation(
            usable,
            config.pipeline,
            llm,
            prompts,
            model_name=config.backend("llm").model,
            sampling=config.sampling,
            strict_parse=config.strict_parse,
        )
        report = replace(
            report,
            inputs_seen=len(records),
            skipped=report.skipped + skipped_unlabeled,
        )
        manifest.write_manifest(generated, output)
    return _finish(args, output, report, "generate")


def cmd_transcribe(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    asr = config.asr_client()
    records = manifest.read_manifest(input_path)
    with pipelines.run_lock(output):
        labeled, report = pipelines.transcribe_utterances(records, asr)
        manifest.write_manifest(labeled, output)
    return _finish(args, output, report, "transcribe")


def cmd_filter(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    prompts = load_prompt_library(args.templates or config.templates_dir)
    judge = config.chat_client("judge")
    pending = manifest.read_triplet_manifest(input_path)
    audit = output.with_suffix(".audit.jsonl")
    with pipelines.run_lock(output):
        accepted, report = pipelines.run_filter(
            pending,
            judge,
            prompts,
            model_name=config.backend("judge").model,
            sampling=config.sampling,
            audit_path=audit,
        )
        manifest.write_manifest(accepted, output)
    return _finish(args, output, report, "filter", {"audit": str(audit)})


def _parse_synthetic_spec(spec: str, default_factor: int) -> tuple[str, int]:
    path, sep, factor = spec.rpartition(":")
    if sep and factor.isdigit():
        return path, int(factor)
    return spec, default_factor


def cmd_mix(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    output = _prepare_output(args, args.output)
    original = manifest.read_rows(input_path)
    synthetic_sets = []
    for spec in args.synthetic or []:
        path, factor = _parse_synthetic_spec(spec, config.pipeline.upsample_factor)
        synthetic_sets.append((manifest.read_rows(_require_input(path)), factor))
    shuffle_seed = config.pipeline.rng_seed if args.shuffle else None
    mixed = pipelines.mix_datasets(original, synthetic_sets, shuffle_seed=shuffle_seed)
    with pipelines.run_lock(output):
        manifest.write_rows(mixed, output)
    payload = {
        "stage": "mix",
        "output": str(output),
        "original": len(original),
        "synthetic_sets": [
            {"records": len(records), "factor": factor} for records, factor in synthetic_sets
        ],
        "total": len(mixed),
    }
    _emit(args, f"mix: {len(mixed)} records -> {output}", payload)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    input_path = _require_input(args.input)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    targets = {name: out_dir / f"{name}.jsonl" for name in ("train", "dev", "test")}
    for target in targets.values():
        if target.exists() and not args.overwrite:
            raise ConfigError(f"output {target} exists; pass --overwrite to replace it")
    records = manifest.read_rows(input_path)
    try:
        train, dev, test = manifest.split_dataset(
            records, config.pipeline.rng_seed, args.dev_size, args.test_size
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    with pipelines.run_lock(out_dir / "split"):
        manifest.write_rows(train, targets["train"])
        manifest.write_rows(dev, targets["dev"])
        manifest.write_rows(test, targets["test"])
    payload = {
        "stage": "split",
        "output": str(out_dir),
        "train": len(train),
        "dev": len(dev),
        "test": len(test),
        "seed": config.pipeline.rng_seed,
    }
    _emit(
        args,
        f"split: train {len(train)} / dev {len(dev)} / test {len(test)} -> {out_dir}",
        payload,
    )
    return 0


def _reference_pairs(path: Path) -> list[tuple[str, str]]:
    kind = manifest.sniff_manifest_kind(path)
    if kind == "triplet":
        return [(t.id, t.answer) for t in manifest.read_triplet_manifest(path)]
    return [(r.audio_filepath, r.text) for r in manifest.read_manifest(path)]


def cmd_evaluate(args: argparse.Namespace) -> int:
    input_path = _require_input(args.input)
    references_path = _require_input(args.references)
    output = _prepare_output(args, args.output) if args.output else None
    predictions = manifest.read_predictions(input_path)
    references = _reference_pairs(references_path)
    try:
        report = metrics.evaluate_corpus(predictions, references, args.task)
    except ValueError as exc:
        _err(str(exc))
        return 1
    if output is not None:
        metrics.write_report(report, output)
    payload = {"stage": "evaluate", **report.to_json_dict()}
    label = "ROUGE-L" if args.task == metrics.QA_ROUGE else "WER"
    _emit(
        args,
        f"evaluate: {label} {report.score:.4f} over {report.matched} samples "
        f"({report.missing} references without predictions)",
        payload,
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    input_path = _require_input(args.input)
    kind = manifest.sniff_manifest_kind(input_path)
    payload: dict[str, Any] = {"stage": "stats", "input": str(input_path), "kind": kind}
    lines: list[str] = []
    if kind == "utterance":
        records = manifest.read_manifest(input_path)
        by_label: dict[str, int] = {}
        for r in records:
            by_label[r.label_source.value] = by_label.get(r.label_source.value, 0) + 1
        payload.update(
            records=len(records),
            total_duration=sum(r.duration for r in records),
            label_sources=by_label,
        )
        lines.append(f"records: {len(records)}")
        lines.append(f"total audio duration: {payload['total_duration']:.1f}s")
        lines.append(f"label sources: {by_label}")
    elif kind == "triplet":
        rows = manifest.read_triplet_manifest(input_path)
        by_provenance: dict[str, int] = {}
        by_status: dict[str, int] = {}
        for t in rows:
            by_provenance[t.provenance.value] = by_provenance.get(t.provenance.value, 0) + 1
            by_status[t.filter_status.value] = by_status.get(t.filter_status.value, 0) + 1
        accepted = by_status.get(FilterStatus.ACCEPTED.value, 0)
        rejected = by_status.get(FilterStatus.REJECTED.value, 0)
        judged = accepted + rejected
        payload.update(
            records=len(rows),
            total_duration=sum(t.context_duration or 0.0 for t in rows),
            provenance=by_provenance,
            filter_status=by_status,
            acceptance_rate=(accepted / judged) if judged else None,
        )
        lines.append(f"records: {len(rows)}")
        lines.append(f"total audio duration: {payload['total_duration']:.1f}s")
        lines.append(f"provenance: {by_provenance}")
        lines.append(f"filter status: {by_status}")
        if judged:
            lines.append(f"acceptance rate: {accepted}/{judged} = {accepted / judged:.4f}")
    else:
        payload.update(records=0)
        lines.append("records: 0 (empty manifest)")
    _emit(args, "\n".join(lines), payload)
    return 0


def cmd_debug_parse(args: argparse.Namespace) -> int:
    text = sys.stdin.read()
    if args.kind == "qa":
        try:
            pairs, malformed = parse_qa_list(
                text, expected_pairs=args.n_pairs or 1, strict=args.strict_parse
            )
        except FailedGeneration as exc:
            print(json.dumps({"error": "failed_generation", "detail": str(exc)}))
            return 1
        print(
            json.dumps(
                {
                    "pairs": [
                        {"index": p.index, "question": p.question, "answer": p.answer}
                        for p in pairs
                    ],
                    "malformed": malformed,
                },
                ensure_ascii=False,
            )
        )
        return 0
    try:
        verdict = parse_filter_verdict(text)
    except VerdictMissing as exc:
        print(json.dumps({"error": "verdict_missing", "detail": str(exc)}))
        return 1
    print(
        json.dumps(
            {"decision": verdict.decision.value, "reasoning": verdict.reasoning},
            ensure_ascii=False,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Build, filter, mix, and score speech-text QA instruction datasets.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration file")
    common.add_argument("--seed", type=int, help="override the pipeline RNG seed")
    common.add_argument("--json", action="store_true", help="machine-readable stdout")
    common.add_argument(
        "--overwrite", action="store_true", help="replace existing outputs"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text, **kwargs)
        p.set_defaults(func=func)
        return p

    p = add("build-triplets", cmd_build_triplets, "corpus rows -> QA triplets")
    p.add_argument("--input", required=True, help="raw QA corpus JSONL")
    p.add_argument("--output", required=True, help="triplet manifest to write")

    p = add("synthesize", cmd_synthesize, "attach TTS audio to triplets")
    p.add_argument("--input", required=True, help="text-only triplet manifest")
    p.add_argument("--output", required=True, help="triplet manifest with audio")
    p.add_argument("--max-duration", type=float, help="keep strictly-under cap, seconds")

    p = add("generate", cmd_generate, "LLM QA generation from transcripts")
    p.add_argument("--input", required=True, help="utterance manifest with transcripts")
    p.add_argument("--output", required=True, help="triplet manifest to write")
    p.add_argument("--n-pairs", type=int, help="QA pairs requested per utterance")
    p.add_argument("--templates", help="directory of prompt templates and example banks")
    p.add_argument("--strict-parse", action="store_true", help="reject partially malformed completions")

    p = add("transcribe", cmd_transcribe, "ASR pseudo-labeling of unlabeled audio")
    p.add_argument("--input", required=True, help="unlabeled utterance manifest")
    p.add_argument("--output", required=True, help="pseudo-labeled manifest to write")

    p = add("filter", cmd_filter, "LLM-judge filtering of triplets")
    p.add_argument("--input", required=True, help="unfiltered triplet manifest")
    p.add_argument("--output", required=True, help="accepted-triplet manifest to write")
    p.add_argument("--templates", help="directory of prompt templates and example banks")

    p = add("mix", cmd_mix, "combine original data with upsampled synthetic sets")
    p.add_argument("--input", required=True, help="original training manifest")
    p.add_argument(
        "--synthetic",
        action="append",
        metavar="PATH[:FACTOR]",
        help="synthetic manifest with optional per-set upsample factor (repeatable)",
    )
    p.add_argument("--upsample", type=int, help="default upsample factor for synthetic sets")
    p.add_argument("--shuffle", action="store_true", help="final seeded shuffle of the mixture")
    p.add_argument("--output", required=True)

    p = add("split", cmd_split, "seeded train/dev/test partition")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="directory for train/dev/test.jsonl")
    p.add_argument("--dev-size", type=int, required=True)
    p.add_argument("--test-size", type=int, required=True)

    p = add("evaluate", cmd_evaluate, "score predictions against references")
    p.add_argument("--input", required=True, help="predictions JSONL of {id, text}")
    p.add_argument("--references", required=True, help="triplet or utterance manifest")
    p.add_argument("--task", required=True, choices=[metrics.QA_ROUGE, metrics.ASR_WER])
    p.add_argument("--output", help="write the metric report JSON here")

    p = add("stats", cmd_stats, "record counts, durations, and acceptance rate")
    p.add_argument("--input", required=True)

    p = add("debug-parse", cmd_debug_parse, "run a completion parser on stdin")
    p.add_argument("--kind", required=True, choices=["qa", "verdict"])
    p.add_argument("--n-pairs", type=int, help="expected pair count for qa parsing")
    p.add_argument("--strict-parse", action="store_true")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return 2
    except TemplateError as exc:
        _err(f"template error: {exc}")
        return 2
    except manifest.ManifestError as exc:
        _err(str(exc))
        return 1
    except FailedGeneration as exc:
        _err(str(exc))
        return 1
    except RuntimeError as exc:
        _err(str(exc))
        return 1
    except KeyboardInterrupt:
        _err("interrupted")
        return 1
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
