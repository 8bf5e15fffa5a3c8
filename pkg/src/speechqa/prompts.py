"""Render the QA-generation and triplet-filtering prompts.

Templates are plain text files with ``{name}`` placeholders and live next
to a JSONL bank of few-shot examples. Rendering is a single literal pass:
placeholder-looking text inside substituted payloads is never expanded, so
rendering stays injective over payload content.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .manifest import ManifestError, _iter_rows
from .records import QATriplet

GENERATION_TEMPLATE_ID = "generation"
FILTER_TEMPLATE_ID = "filter"

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class TemplateError(ValueError):
    """A template or example bank is malformed."""


@dataclass(frozen=True)
class GenerationExample:
    """Few-shot exemplar for QA generation: one numbered block in the prompt."""

    instruction: str
    transcript: str
    output: str

    def __post_init__(self) -> None:
        for name in ("instruction", "transcript", "output"):
            if not getattr(self, name).strip():
                raise TemplateError(f"generation example field '{name}' is empty")


@dataclass(frozen=True)
class FilterExample:
    """Few-shot exemplar for the judge: a triplet plus its worked evaluation."""

    context: str
    question: str
    answer: str
    evaluation: str
    verdict: str

    def __post_init__(self) -> None:
        for name in ("context", "question", "answer", "evaluation", "verdict"):
            if not getattr(self, name).strip():
                raise TemplateError(f"filter example field '{name}' is empty")
        if self.verdict not in ("ACCEPT", "REJECT"):
            raise TemplateError(f"filter example verdict must be ACCEPT or REJECT, got {self.verdict!r}")


@dataclass(frozen=True)
class PromptTemplate:
    """A template body plus the placeholders it must provide.

    Every required placeholder must appear exactly once; placeholders in
    ``repeatable`` (the pair count, which the wording mentions twice) may
    appear any number of times but at least once.
    """

    template_id: str
    body: str
    required_placeholders: frozenset[str]
    repeatable_placeholders: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        found = _PLACEHOLDER_RE.findall(self.body)
        known = self.required_placeholders | self.repeatable_placeholders
        for name in found:
            if name not in known:
                raise TemplateError(
                    f"template {self.template_id}: unknown placeholder {{{name}}}"
                )
        for name in self.required_placeholders:
            count = found.count(name)
            if count != 1:
                raise TemplateError(
                    f"template {self.template_id}: placeholder {{{name}}} "
                    f"must appear exactly once, found {count}"
                )
        for name in self.repeatable_placeholders:
            if name not in found:
                raise TemplateError(
                    f"template {self.template_id}: placeholder {{{name}}} is missing"
                )

    def render(self, values: dict[str, str]) -> str:
        """Substitute all placeholders in one pass over the body."""
        missing = (self.required_placeholders | self.repeatable_placeholders) - set(values)
        if missing:
            raise TemplateError(
                f"template {self.template_id}: no value for {sorted(missing)}"
            )
        out: list[str] = []
        pos = 0
        for match in _PLACEHOLDER_RE.finditer(self.body):
            out.append(self.body[pos : match.start()])
            out.append(values[match.group(1)])
            pos = match.end()
        out.append(self.body[pos:])
        return "".join(out)


def format_generation_examples(examples: list[GenerationExample]) -> str:
    blocks = []
    for i, ex in enumerate(examples, start=1):
        blocks.append(
            f"{i}. Instruction: {ex.instruction}\n"
            f"{i}. Corresponding Transcript: {ex.transcript}\n"
            f"{i}. Output: {ex.output}"
        )
    return "\n".join(blocks)


def format_filter_examples(examples: list[FilterExample]) -> str:
    blocks = []
    for i, ex in enumerate(examples, start=1):
        blocks.append(
            f"Example {i}:\n"
            f"#Context#\n{ex.context}\n\n"
            f"#Question#\n{ex.question}\n\n"
            f"#Answer#\n{ex.answer}\n\n"
            f"#Evaluation#\n{ex.evaluation}\n{ex.verdict}"
        )
    return "\n\n".join(blocks)


def render_generation_prompt(
    template: PromptTemplate,
    examples: list[GenerationExample],
    transcript: str,
    n_pairs: int,
) -> str:
    """Build the QA-generation prompt for one transcript.

    The transcript lands in the prompt verbatim as a contiguous substring,
    and the requested pair count in the instruction text reflects n_pairs.
    """
    if not transcript.strip():
        raise TemplateError("transcript must be non-empty")
    if not examples:
        raise TemplateError("at least one few-shot example is required")
    if n_pairs < 1:
        raise TemplateError("n_pairs must be >= 1")
    return template.render(
        {
            "examples": format_generation_examples(examples),
            "transcript": transcript,
            "n_pairs": str(n_pairs),
        }
    )


def render_filter_prompt(
    template: PromptTemplate,
    examples: list[FilterExample],
    triplet: QATriplet,
) -> str:
    """Build the judge prompt that evaluates one triplet."""
    if not examples:
        raise TemplateError("at least one few-shot example is required")
    return template.render(
        {
            "examples": format_filter_examples(examples),
            "context": triplet.context_text,
            "question": triplet.question,
            "answer": triplet.answer,
        }
    )


@dataclass(frozen=True)
class PromptLibrary:
    """Both loaded templates plus their example banks, ready to render."""

    generation: PromptTemplate
    generation_examples: tuple[GenerationExample, ...]
    filter: PromptTemplate
    filter_examples: tuple[FilterExample, ...]

    def render_generation(self, transcript: str, n_pairs: int) -> str:
        return render_generation_prompt(
            self.generation, list(self.generation_examples), transcript, n_pairs
        )

    def render_filter(self, triplet: QATriplet) -> str:
        return render_filter_prompt(self.filter, list(self.filter_examples), triplet)


def _load_examples(path: Path, kind: str) -> list[GenerationExample] | list[FilterExample]:
    rows = [row for _, row in _iter_rows(path)]
    if not rows:
        raise TemplateError(f"{path}: example bank is empty")
    try:
        if kind == GENERATION_TEMPLATE_ID:
            return [GenerationExample(**row) for row in rows]
        return [FilterExample(**row) for row in rows]
    except TypeError as exc:
        raise TemplateError(f"{path}: bad example row ({exc})") from exc


def load_prompt_library(template_dir: str | Path | None = None) -> PromptLibrary:
    """Load templates and example banks from a directory.

    With no directory, the packaged defaults ship with the library. A
    custom directory must contain ``generation.txt``/``filter.txt`` and the
    matching ``*_examples.jsonl`` banks.
    """
    if template_dir is None:
        root = resources.files("speechqa").joinpath("templates")
        with resources.as_file(root) as concrete:
            return load_prompt_library(concrete)
    base = Path(template_dir)
    paths = {
        name: base / name
        for name in (
            "generation.txt",
            "generation_examples.jsonl",
            "filter.txt",
            "filter_examples.jsonl",
        )
    }
    for path in paths.values():
        if not path.is_file():
            raise TemplateError(f"template directory {base} is missing {path.name}")
    try:
        generation_examples = _load_examples(
            paths["generation_examples.jsonl"], GENERATION_TEMPLATE_ID
        )
        filter_examples = _load_examples(paths["filter_examples.jsonl"], FILTER_TEMPLATE_ID)
    except ManifestError as exc:
        raise TemplateError(str(exc)) from exc
    return PromptLibrary(
        generation=PromptTemplate(
            template_id=GENERATION_TEMPLATE_ID,
            body=paths["generation.txt"].read_text(encoding="utf-8"),
            required_placeholders=frozenset({"examples", "transcript"}),
            repeatable_placeholders=frozenset({"n_pairs"}),
        ),
        generation_examples=tuple(generation_examples),
        filter=PromptTemplate(
            template_id=FILTER_TEMPLATE_ID,
            body=paths["filter.txt"].read_text(encoding="utf-8"),
            required_placeholders=frozenset({"examples", "context", "question", "answer"}),
        ),
        filter_examples=tuple(filter_examples),
    )
