"""Training-data builders for the staged adaptation pipeline.

Stage 1 packs chapter sentences into paragraph units under a token budget
(monolingual pre-training data). Stage 2 packs aligned sentence pairs into
interlinear documents (bilingual pre-training data). Stage 3 renders
context- and exemplar-augmented instruction records with the same renderer
the decoder uses at inference time. A plain sentence-level instruction
builder covers the non-contextual baseline.

No training happens here; everything is emitted as data files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Corpus, Document
from .decoder import DecodingConfig, exclude_at_or_after
from .prompts import (
    ContextEntry,
    ExemplarEntry,
    PromptSpec,
    TemplateError,
    placeholders,
    render,
)
from .retrieval import ExemplarIndex, top_k
from .tokenization import cjk_ratio, count_tokens

Tokenizer = Callable[[str], int]

DEFAULT_BUDGET = 1024


@dataclass(frozen=True)
class ParagraphUnit:
    doc_id: str
    chapter_id: str
    text: str
    token_count: int
    over_budget: bool = False


@dataclass(frozen=True)
class InterlinearDocument:
    doc_id: str
    pairs: tuple[tuple[str, str], ...]
    over_budget: bool = False


@dataclass(frozen=True)
class InstructionRecord:
    instruction: str
    input: str
    output: str


@dataclass(frozen=True)
class InstructionTemplate:
    """Sentence-level instruction; {source} is substituted per pair."""

    instruction: str

    def __post_init__(self):
        found = placeholders(self.instruction)
        if "source" not in found:
            raise TemplateError(
                "instruction template is missing required placeholder {source}"
            )
        if found - {"source"}:
            raise TemplateError(
                f"instruction template uses unknown placeholder "
                f"{{{(found - {'source'}).pop()}}}"
            )


DEFAULT_SENTENCE_INSTRUCTION = InstructionTemplate(
    instruction="Translate this sentence:\n{source}\nTranslation:"
)


def _require_parallel(corpus: Corpus, what: str) -> None:
    if not corpus.is_parallel:
        raise ValueError(f"{what} requires a fully parallel corpus")


def build_stage1_paragraphs(
    corpus: Corpus,
    side: str = "source",
    budget: int = DEFAULT_BUDGET,
    tokenizer: Tokenizer = count_tokens,
    joiner: str | None = None,
) -> list[ParagraphUnit]:
    """Greedy paragraph packing: a chapter's sentences are appended in
    order until the next one would push the unit past the budget.
    Paragraphs never span chapters; a single oversized sentence becomes its
    own unit flagged over_budget.

    joiner=None picks per chapter: no joiner for predominantly CJK text,
    a single space otherwise.
    """
    if side not in ("source", "target"):
        raise ValueError("side must be 'source' or 'target'")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    units: list[ParagraphUnit] = []
    for doc in corpus.documents:
        for chapter in doc.chapters:
            texts = []
            for pair in chapter.pairs:
                text = pair.source if side == "source" else pair.target
                if text is None:
                    raise ValueError(
                        f"{doc.doc_id}#{pair.seg_index} has no target text"
                    )
                texts.append(text)
            if not texts:
                continue
            if joiner is None:
                sep = "" if cjk_ratio("".join(texts)) > 0.5 else " "
            else:
                sep = joiner

            def emit(sentences: list[str]) -> None:
                text = sep.join(sentences)
                count = tokenizer(text)
                units.append(
                    ParagraphUnit(
                        doc_id=doc.doc_id,
                        chapter_id=chapter.chapter_id,
                        text=text,
                        token_count=count,
                        over_budget=count > budget,
                    )
                )

            pending: list[str] = []
            for text in texts:
                if pending and tokenizer(sep.join(pending + [text])) > budget:
                    emit(pending)
                    pending = [text]
                else:
                    pending.append(text)
            if pending:
                emit(pending)
    return units


def format_interlinear(doc: InterlinearDocument) -> str:
    """Bit-exact serialization: per pair a `<src> ` line then a `<tgt> `
    line; the text must be single-line and non-blank."""
    out = []
    for source, target in doc.pairs:
        for tag, text in (("<src>", source), ("<tgt>", target)):
            if "\n" in text or "\r" in text:
                raise ValueError(f"{tag} text must not contain line breaks: {text!r}")
            if not text.strip():
                raise ValueError(f"{tag} text must be non-empty")
            out.append(f"{tag} {text}\n")
    return "".join(out)


def parse_interlinear(text: str, doc_id: str = "") -> InterlinearDocument:
    """Inverse of format_interlinear: parse(format(d), d.doc_id) == d."""
    pairs: list[tuple[str, str]] = []
    pending_source: str | None = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.startswith("<src> "):
            if pending_source is not None:
                raise ValueError(
                    f"line {line_no}: two consecutive <src> lines (missing <tgt>)"
                )
            pending_source = line[len("<src> "):]
        elif line.startswith("<tgt> "):
            if pending_source is None:
                raise ValueError(f"line {line_no}: target line before any source line")
            pairs.append((pending_source, line[len("<tgt> "):]))
            pending_source = None
        elif not line.strip():
            raise ValueError(
                f"line {line_no}: blank line inside a document (document separator?)"
            )
        else:
            raise ValueError(f"line {line_no}: unknown tag in {line!r}")
    if pending_source is not None:
        raise ValueError("trailing <src> line without a <tgt> line")
    return InterlinearDocument(doc_id=doc_id, pairs=tuple(pairs))


def build_stage2_documents(
    corpus: Corpus,
    budget: int = DEFAULT_BUDGET,
    tokenizer: Tokenizer = count_tokens,
) -> list[InterlinearDocument]:
    """Pack consecutive sentence pairs of each document into interlinear
    documents, greedily, under a combined source+target token budget.
    Never packs across source documents."""
    _require_parallel(corpus, "stage 2")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    docs: list[InterlinearDocument] = []
    for doc in corpus.documents:
        part = 0
        pending: list[tuple[str, str]] = []
        pending_tokens = 0

        def emit(pairs: list[tuple[str, str]], tokens: int) -> None:
            nonlocal part
            docs.append(
                InterlinearDocument(
                    doc_id=f"{doc.doc_id}#p{part}",
                    pairs=tuple(pairs),
                    over_budget=tokens > budget,
                )
            )
            part += 1

        for pair in doc.pairs():
            assert pair.target is not None
            cost = tokenizer(pair.source) + tokenizer(pair.target)
            if pending and pending_tokens + cost > budget:
                emit(pending, pending_tokens)
                pending = []
                pending_tokens = 0
            pending.append((pair.source, pair.target))
            pending_tokens += cost
        if pending:
            emit(pending, pending_tokens)
    return docs


def build_sentence_instructions(
    corpus: Corpus,
    template: InstructionTemplate = DEFAULT_SENTENCE_INSTRUCTION,
) -> list[InstructionRecord]:
    """One plain record per pair: no context, no exemplars."""
    _require_parallel(corpus, "sentence instruction data")
    records = []
    for doc in corpus.documents:
        for pair in doc.pairs():
            assert pair.target is not None
            if not pair.target.strip():
                raise ValueError(f"{doc.doc_id}#{pair.seg_index}: empty target")
            records.append(
                InstructionRecord(
                    instruction=template.instruction.format(source=pair.source),
                    input=pair.source,
                    output=pair.target,
                )
            )
    return records


def build_stage3_instructions(
    corpus: Corpus,
    decoding_config: DecodingConfig,
    index: ExemplarIndex,
) -> list[InstructionRecord]:
    """Context- and exemplar-augmented records, one per pair.

    The context block holds the previous history-size pairs (source plus
    reference target, teacher forcing); exemplars come from the index with
    the current pair and everything after it in the same document excluded.
    The instruction is the decoder's rendered prompt, so training and
    inference see identical text.
    """
    _require_parallel(corpus, "stage 3")
    cfg = decoding_config
    records = []
    for doc in corpus.documents:
        pairs = list(doc.pairs())
        for pair in pairs:
            assert pair.target is not None
            if not pair.target.strip():
                raise ValueError(f"{doc.doc_id}#{pair.seg_index}: empty target")
            start = max(0, pair.seg_index - cfg.history_size)
            context = tuple(
                ContextEntry(p.seg_index, p.source, p.target)
                for p in pairs[start:pair.seg_index]
            )
            exemplars: tuple[ExemplarEntry, ...] = ()
            if cfg.exemplar_count > 0:
                hits = top_k(
                    pair.source,
                    index,
                    cfg.exemplar_count,
                    exclude=exclude_at_or_after(doc.doc_id, pair.seg_index),
                    alpha=cfg.similarity_alpha,
                )
                exemplars = tuple(
                    ExemplarEntry(e.exemplar_id, e.doc_id, e.seg_index, e.source, e.target)
                    for e in hits
                )
            spec = PromptSpec(
                system_text=cfg.template.system,
                context_block=context,
                exemplar_block=exemplars,
                current_source=pair.source,
            )
            records.append(
                InstructionRecord(
                    instruction=render(spec, cfg.template),
                    input="",
                    output=pair.target,
                )
            )
    return records


def write_paragraph_units(units: Sequence[ParagraphUnit], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in units:
            fh.write(
                json.dumps(
                    {
                        "doc_id": u.doc_id,
                        "chapter_id": u.chapter_id,
                        "text": u.text,
                        "token_count": u.token_count,
                        "over_budget": u.over_budget,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_interlinear_file(docs: Iterable[InterlinearDocument], path: str | Path) -> None:
    """Documents serialized in order, separated by one blank line."""
    blocks = [format_interlinear(d) for d in docs]
    Path(path).write_text("\n".join(blocks), encoding="utf-8")


def read_interlinear_file(path: str | Path) -> list[InterlinearDocument]:
    content = Path(path).read_text(encoding="utf-8")
    docs = []
    for block in content.split("\n\n"):
        if not block.strip():
            continue
        docs.append(parse_interlinear(block, doc_id=f"doc{len(docs):04d}"))
    return docs


def write_instruction_records(
    records: Sequence[InstructionRecord], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {"instruction": r.instruction, "input": r.input, "output": r.output},
                    ensure_ascii=False,
                )
                + "\n"
            )
