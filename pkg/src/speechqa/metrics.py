"""Corpus evaluation: ROUGE-L over answers and word error rate over transcripts.

Both metrics are implemented from scratch on token lists. The same
normalization (lowercase, punctuation to spaces, whitespace split) is
applied to hypothesis and reference alike before either metric runs.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

QA_ROUGE = "qa_rouge"
ASR_WER = "asr_wer"

_NON_WORD_RE = re.compile(r"[^\w\s]|_")
_WS_RE = re.compile(r"\s+")


def normalize_text(s: str) -> list[str]:
    """Lowercase, strip punctuation to spaces, collapse whitespace, split.

    Contractions split at the apostrophe ("it's" -> ["it", "s"]); that is a
    deliberate normalization choice applied uniformly to both sides.
    """
    lowered = _NON_WORD_RE.sub(" ", s.lower())
    return [tok for tok in _WS_RE.split(lowered) if tok]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f_measure: float
    beta: float


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    reference_words: int
    wer: float

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Rolling single-row DP; only the length is needed.
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return 0
    prev = [0] * (n + 1)
    for i in range(m):
        cur = [0] * (n + 1)
        ai = a[i]
        for j in range(n):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                left = cur[j]
                up = prev[j + 1]
                cur[j + 1] = left if left >= up else up
        prev = cur
    return prev[n]


def rouge_l(candidate: Sequence[str], reference: Sequence[str], beta: float = 1.0) -> RougeScore:
    """LCS-based precision/recall/F over two token sequences.

    P = LCS/|candidate| and R = LCS/|reference| (zero when the respective
    denominator is empty); F = (1 + beta^2) P R / (R + beta^2 P), zero when
    P + R is zero.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate) if candidate else 0.0
    recall = lcs / len(reference) if reference else 0.0
    if precision + recall > 0:
        f = (1 + beta * beta) * precision * recall / (recall + beta * beta * precision)
    else:
        f = 0.0
    return RougeScore(precision=precision, recall=recall, f_measure=f, beta=beta)


def wer(hypothesis: Sequence[str], reference: Sequence[str]) -> WerBreakdown:
    """Minimal-edit word error rate with a substitution/deletion/insertion split.

    The alignment is the standard unit-cost dynamic program; among equally
    cheap backtrace steps, substitution is preferred over deletion over
    insertion (this affects only the S/D/I split, never the total). An
    empty reference against a non-empty hypothesis yields wer = +inf.
    """
    n_ref, n_hyp = len(reference), len(hypothesis)
    # dist[i][j] = edits to turn reference[:i] into hypothesis[:j]
    dist = [[0] * (n_hyp + 1) for _ in range(n_ref + 1)]
    for i in range(1, n_ref + 1):
        dist[i][0] = i
    for j in range(1, n_hyp + 1):
        dist[0][j] = j
    for i in range(1, n_ref + 1):
        ref_tok = reference[i - 1]
        row = dist[i]
        prev_row = dist[i - 1]
        for j in range(1, n_hyp + 1):
            sub = prev_row[j - 1] + (ref_tok != hypothesis[j - 1])
            dele = prev_row[j] + 1
            ins = row[j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            row[j] = best

    subs = dels = inss = 0
    i, j = n_ref, n_hyp
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1]):
            if reference[i - 1] != hypothesis[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            inss += 1
            j -= 1

    errors = subs + dels + inss
    if n_ref > 0:
        rate = errors / n_ref
    else:
        rate = 0.0 if errors == 0 else math.inf
    return WerBreakdown(
        substitutions=subs,
        deletions=dels,
        insertions=inss,
        reference_words=n_ref,
        wer=rate,
    )


@dataclass(frozen=True)
class MetricReport:
    """Corpus-level result of one evaluation run, one Table-style cell."""

    task: str
    score: float
    matched: int
    missing: int
    details: dict[str, float]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "score": self.score if math.isfinite(self.score) else "inf",
            "matched": self.matched,
            "missing": self.missing,
            "details": dict(self.details),
        }


def evaluate_corpus(
    predictions: Iterable[tuple[str, str]],
    references: Iterable[tuple[str, str]],
    task: str,
    beta: float = 1.0,
) -> MetricReport:
    """Score id-matched predictions against references.

    qa_rouge averages per-sample ROUGE-L F over the matched ids; asr_wer
    pools error counts over the whole corpus (sum of edits over sum of
    reference words) as is standard for ASR reporting.
    """
    if task not in (QA_ROUGE, ASR_WER):
        raise ValueError(f"unknown task {task!r}")

    pred_map: dict[str, str] = {}
    for pid, text in predictions:
        if pid in pred_map:
            raise ValueError(f"duplicate prediction id {pid!r}")
        pred_map[pid] = text
    ref_map: dict[str, str] = {}
    ref_order: list[str] = []
    for rid, text in references:
        if rid in ref_map:
            raise ValueError(f"duplicate reference id {rid!r}")
        ref_map[rid] = text
        ref_order.append(rid)

    unknown = set(pred_map) - set(ref_map)
    if unknown:
        raise ValueError(f"predictions carry ids with no reference: {sorted(unknown)[:5]}")
    matched_ids = [rid for rid in ref_order if rid in pred_map]
    if not matched_ids:
        raise ValueError("no prediction id matches any reference id")
    missing = len(ref_map) - len(matched_ids)

    if task == QA_ROUGE:
        p_sum = r_sum = f_sum = 0.0
        for rid in matched_ids:
            score = rouge_l(normalize_text(pred_map[rid]), normalize_text(ref_map[rid]), beta)
            p_sum += score.precision
            r_sum += score.recall
            f_sum += score.f_measure
        n = len(matched_ids)
        return MetricReport(
            task=task,
            score=f_sum / n,
            matched=n,
            missing=missing,
            details={
                "mean_precision": p_sum / n,
                "mean_recall": r_sum / n,
                "mean_f_measure": f_sum / n,
                "beta": beta,
            },
        )

    total_s = total_d = total_i = total_n = 0
    for rid in matched_ids:
        breakdown = wer(normalize_text(pred_map[rid]), normalize_text(ref_map[rid]))
        total_s += breakdown.substitutions
        total_d += breakdown.deletions
        total_i += breakdown.insertions
        total_n += breakdown.reference_words
    errors = total_s + total_d + total_i
    if total_n > 0:
        pooled = errors / total_n
    else:
        pooled = 0.0 if errors == 0 else math.inf
    return MetricReport(
        task=task,
        score=pooled,
        matched=len(matched_ids),
        missing=missing,
        details={
            "substitutions": total_s,
            "deletions": total_d,
            "insertions": total_i,
            "reference_words": total_n,
        },
    )


def write_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )


def format_report_table(rows: list[tuple[str, list[MetricReport]]]) -> str:
    """Render labelled reports as an aligned text table, one row per label."""
    headers = ["dataset"]
    seen: list[str] = []
    for _, reports in rows:
        for report in reports:
            key = "WER%" if report.task == ASR_WER else "ROUGE-L"
            if key not in seen:
                seen.append(key)
    headers.extend(seen)

    def cell(report: MetricReport) -> str:
        if report.task == ASR_WER:
            return "inf" if math.isinf(report.score) else f"{report.score * 100:.1f}"
        return f"{report.score:.2f}"

    table_rows = [headers]
    for label, reports in rows:
        by_key = {("WER%" if r.task == ASR_WER else "ROUGE-L"): cell(r) for r in reports}
        table_rows.append([label] + [by_key.get(k, "-") for k in seen])

    widths = [max(len(row[c]) for row in table_rows) for c in range(len(headers))]
    lines = []
    for row in table_rows:
        lines.append("  ".join(val.ljust(widths[c]) for c, val in enumerate(row)).rstrip())
    return "\n".join(lines)
