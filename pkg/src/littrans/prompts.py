"""Prompt templates and rendering.

One renderer serves both the decoder (inference prompts) and the stage-3
instruction builder (training prompts), so train and test prompts can
never drift apart.

Template placeholders: the main template takes {system}, {context},
{exemplars}, {source}; entry sub-templates take {src} and {tgt}; section
sub-templates take {entries}. Empty context/exemplar blocks render their
whole section as the empty string, so with no history and no exemplars
the rendered prompt is exactly the plain sentence-level template.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from string import Formatter


class TemplateError(Exception):
    """Raised when a template is missing a required placeholder or names
    an unknown one."""


DEFAULT_SYSTEM = (
    "You are a professional literary translator. Translate faithfully and "
    "keep wording, names, and narrative voice consistent with any context "
    "provided."
)
DEFAULT_MAIN = "{system}{context}{exemplars}Translate this sentence:\n{source}\nTranslation:"
DEFAULT_SYSTEM_SECTION = "{system}\n\n"
DEFAULT_CONTEXT_SECTION = "Previous sentences and their translations:\n{entries}\n"
DEFAULT_CONTEXT_ENTRY = "{src}\n=> {tgt}\n"
DEFAULT_EXEMPLAR_SECTION = "Similarly phrased translations, for style:\n{entries}\n"
DEFAULT_EXEMPLAR_ENTRY = "{src}\n=> {tgt}\n"

_ALLOWED = {
    "main": {"system", "context", "exemplars", "source"},
    "system_section": {"system"},
    "context_section": {"entries"},
    "context_entry": {"src", "tgt"},
    "exemplar_section": {"entries"},
    "exemplar_entry": {"src", "tgt"},
}
_REQUIRED = {
    "main": {"source"},
    "system_section": {"system"},
    "context_section": {"entries"},
    "context_entry": {"tgt"},
    "exemplar_section": {"entries"},
    "exemplar_entry": {"tgt"},
}


def placeholders(template: str) -> set[str]:
    try:
        names = {f for _, f, _, _ in Formatter().parse(template) if f is not None}
    except ValueError as exc:
        raise TemplateError(f"malformed template: {exc}") from exc
    if "" in names:
        raise TemplateError("positional placeholders like {} are not allowed")
    return names


@dataclass(frozen=True)
class PromptTemplate:
    main: str = DEFAULT_MAIN
    system: str = DEFAULT_SYSTEM
    system_section: str = DEFAULT_SYSTEM_SECTION
    context_section: str = DEFAULT_CONTEXT_SECTION
    context_entry: str = DEFAULT_CONTEXT_ENTRY
    exemplar_section: str = DEFAULT_EXEMPLAR_SECTION
    exemplar_entry: str = DEFAULT_EXEMPLAR_ENTRY

    def __post_init__(self):
        for f in fields(self):
            if f.name == "system":
                continue
            found = placeholders(getattr(self, f.name))
            missing = _REQUIRED[f.name] - found
            if missing:
                raise TemplateError(
                    f"{f.name} template is missing required placeholder "
                    f"{{{missing.pop()}}}"
                )
            unknown = found - _ALLOWED[f.name]
            if unknown:
                raise TemplateError(
                    f"{f.name} template uses unknown placeholder {{{unknown.pop()}}}"
                )


@dataclass(frozen=True)
class ContextEntry:
    seg_index: int
    source: str
    translation: str


@dataclass(frozen=True)
class ExemplarEntry:
    exemplar_id: str
    doc_id: str
    seg_index: int
    source: str
    translation: str


@dataclass(frozen=True)
class PromptSpec:
    system_text: str
    context_block: tuple[ContextEntry, ...]
    exemplar_block: tuple[ExemplarEntry, ...]
    current_source: str


def render(spec: PromptSpec, template: PromptTemplate, include_system: bool = True) -> str:
    """Deterministically render a PromptSpec to the prompt text."""
    if include_system and spec.system_text:
        system = template.system_section.format(system=spec.system_text)
    else:
        system = ""
    if spec.context_block:
        entries = "".join(
            template.context_entry.format(src=e.source, tgt=e.translation)
            for e in spec.context_block
        )
        context = template.context_section.format(entries=entries)
    else:
        context = ""
    if spec.exemplar_block:
        entries = "".join(
            template.exemplar_entry.format(src=e.source, tgt=e.translation)
            for e in spec.exemplar_block
        )
        exemplars = template.exemplar_section.format(entries=entries)
    else:
        exemplars = ""
    return template.main.format(
        system=system, context=context, exemplars=exemplars, source=spec.current_source
    )


def prompt_hash(spec: PromptSpec, template: PromptTemplate) -> str:
    return hashlib.sha256(render(spec, template).encode("utf-8")).hexdigest()
