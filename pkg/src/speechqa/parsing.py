"""Parse LLM completions into QA pairs or filter verdicts.

Completions that do not follow the prescribed output format are rejected
as failed generations rather than patched up; the judge verdict check is
deliberately exact, because a loose match silently corrupts filtering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class FailedGeneration(Exception):
    """The completion contained no well-formed QA pair at all."""


class VerdictMissing(Exception):
    """The completion's final non-empty line is neither ACCEPT nor REJECT."""


@dataclass(frozen=True)
class ParsedQAPair:
    index: int
    question: str
    answer: str

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("pair index is 1-based")
        if not self.question.strip() or not self.answer.strip():
            raise ValueError("question and answer must be non-empty")


class JudgeDecision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class FilterVerdict:
    decision: JudgeDecision
    reasoning: str


# Numbered lines with literal keywords. Keyword matching is exact and
# case-sensitive; the numbering itself is tolerated loosely because models
# frequently miscount, and pairs are reindexed sequentially after parsing.
_INSTRUCTION_RE = re.compile(r"^\s*\d+\.\s*Instruction:\s*(.*)$")
_TRANSCRIPT_RE = re.compile(r"^\s*\d+\.\s*Corresponding Transcript:\s*(.*)$")
_OUTPUT_RE = re.compile(r"^\s*\d+\.\s*Output:\s*(.*)$")


def parse_qa_list(
    completion: str, expected_pairs: int, strict: bool = False
) -> tuple[list[ParsedQAPair], int]:
    """Extract ``N. Instruction:`` / ``N. Output:`` pairs from a completion.

    An optional ``N. Corresponding Transcript:`` line between a pair's
    instruction and output is skipped. Lines without any keyword continue
    the field they follow (models wrap long answers); anything before the
    first instruction is ignored. Individually malformed pairs (missing or
    empty question/answer) are dropped and counted, not fatal.

    Returns the pairs in completion order, reindexed from 1, plus the count
    of malformed pairs that were dropped.

    Raises FailedGeneration when not a single well-formed pair is found,
    or, with ``strict=True``, when anything at all was dropped or fewer
    than ``expected_pairs`` pairs survived.
    """
    if expected_pairs < 1:
        raise ValueError("expected_pairs must be >= 1")

    pairs: list[ParsedQAPair] = []
    malformed = 0
    question_lines: list[str] | None = None
    answer_lines: list[str] | None = None
    current: list[str] | None = None  # continuation target

    def flush() -> None:
        nonlocal question_lines, answer_lines, malformed
        if question_lines is None:
            return
        question = "\n".join(question_lines).strip()
        answer = "\n".join(answer_lines).strip() if answer_lines is not None else ""
        if question and answer:
            pairs.append(ParsedQAPair(index=len(pairs) + 1, question=question, answer=answer))
        else:
            malformed += 1
        question_lines = None
        answer_lines = None

    for line in completion.splitlines():
        instruction = _INSTRUCTION_RE.match(line)
        if instruction:
            flush()
            question_lines = [instruction.group(1)]
            current = question_lines
            continue
        transcript = _TRANSCRIPT_RE.match(line)
        if transcript:
            current = None  # echoed transcript content is not part of the pair
            continue
        output = _OUTPUT_RE.match(line)
        if output:
            if question_lines is not None and answer_lines is None:
                answer_lines = [output.group(1)]
                current = answer_lines
            else:
                flush()  # second output for one pair: keep the pair, orphan the line
                malformed += 1
                current = None
            continue
        if current is not None and line.strip():
            current.append(line)
    flush()

    if not pairs:
        raise FailedGeneration(
            f"no well-formed QA pair found ({malformed} malformed entries)"
        )
    if strict and (malformed or len(pairs) < expected_pairs):
        raise FailedGeneration(
            f"strict mode: expected {expected_pairs} clean pairs, "
            f"got {len(pairs)} with {malformed} malformed"
        )
    return pairs, malformed


def render_qa_list(pairs: Iterable[tuple[str, str]] | Sequence[ParsedQAPair]) -> str:
    """Render pairs into the canonical numbered grammar.

    Inverse of :func:`parse_qa_list` for single-line questions and answers
    that contain no grammar keywords.
    """
    lines: list[str] = []
    for i, pair in enumerate(pairs, start=1):
        if isinstance(pair, ParsedQAPair):
            question, answer = pair.question, pair.answer
        else:
            question, answer = pair
        lines.append(f"{i}. Instruction: {question}")
        lines.append(f"{i}. Output: {answer}")
    return "\n".join(lines)


def parse_filter_verdict(completion: str) -> FilterVerdict:
    """Split a judge completion into reasoning and final decision.

    The final non-empty line, trimmed, must be exactly ``ACCEPT`` or
    ``REJECT`` (case-sensitive, no trailing punctuation); everything above
    it is the reasoning.
    """
    lines = completion.splitlines()
    for i in range(len(lines) - 1, -1, -1):
        token = lines[i].strip()
        if not token:
            continue
        if token == "ACCEPT":
            decision = JudgeDecision.ACCEPT
        elif token == "REJECT":
            decision = JudgeDecision.REJECT
        else:
            raise VerdictMissing(f"final line is not a verdict token: {token[:80]!r}")
        return FilterVerdict(decision=decision, reasoning="\n".join(lines[:i]).rstrip())
    raise VerdictMissing("completion is empty")
