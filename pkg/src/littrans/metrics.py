"""s-BLEU and d-BLEU scoring.

The scorer follows the standard corpus-BLEU recipe: clipped n-gram counts
accumulated over all segments, per-order precisions, exponential-floor
smoothing for zero-match orders, brevity penalty, geometric mean. The
default tokenizer pads Unicode punctuation not adjacent to digits and all
symbol characters after normalizing line breaks, reproducing the
international mteval tokenization; "character" mode scores unsegmented
text one character at a time.

s-BLEU treats every sentence as a segment, d-BLEU joins each document's
sentences with single spaces into one segment. Single reference per
segment.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

SMOOTHING_MODES = ("none", "exp-floor")
TOKENIZATION_MODES = ("intl-13a", "character")

SegmentKey = tuple[str, int]  # (doc_id, seg_index)


class AlignmentError(Exception):
    def __init__(self, missing_in_hyp: list[SegmentKey], missing_in_ref: list[SegmentKey]):
        parts = []
        if missing_in_hyp:
            parts.append(f"missing in hypotheses: {missing_in_hyp}")
        if missing_in_ref:
            parts.append(f"missing in references: {missing_in_ref}")
        super().__init__("; ".join(parts))
        self.missing_in_hyp = missing_in_hyp
        self.missing_in_ref = missing_in_ref


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    smoothing: str = "exp-floor"
    tokenization: str = "intl-13a"
    lowercase: bool = False

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if self.smoothing not in SMOOTHING_MODES:
            raise ValueError(f"smoothing must be one of {SMOOTHING_MODES}")
        if self.tokenization not in TOKENIZATION_MODES:
            raise ValueError(f"tokenization must be one of {TOKENIZATION_MODES}")


@dataclass(frozen=True)
class BleuReport:
    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    segmentation: str

    def format_line(self) -> str:
        precisions = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (
            f"{self.segmentation[0]}-BLEU = {self.score:.2f} {precisions} "
            f"(BP = {self.brevity_penalty:.3f} hyp_len = {self.hyp_length} "
            f"ref_len = {self.ref_length})"
        )


@lru_cache(maxsize=None)
def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


@lru_cache(maxsize=None)
def _is_symbol(ch: str) -> bool:
    return unicodedata.category(ch).startswith("S")


@lru_cache(maxsize=None)
def _is_digit(ch: str) -> bool:
    return unicodedata.category(ch) == "Nd"


def _pad_punct_after_nondigit(s: str) -> str:
    # leftmost non-overlapping (non-digit)(punct) -> "a p "
    out: list[str] = []
    i, n = 0, len(s)
    while i < n:
        if i + 1 < n and not _is_digit(s[i]) and _is_punct(s[i + 1]):
            out += (s[i], " ", s[i + 1], " ")
            i += 2
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


def _pad_punct_before_nondigit(s: str) -> str:
    # leftmost non-overlapping (punct)(non-digit) -> " p a"
    out: list[str] = []
    i, n = 0, len(s)
    while i < n:
        if i + 1 < n and _is_punct(s[i]) and not _is_digit(s[i + 1]):
            out += (" ", s[i], " ", s[i + 1])
            i += 2
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


def tokenize(text: str, mode: str = "intl-13a", lowercase: bool = False) -> list[str]:
    """Tokenize one segment for scoring.

    intl-13a: join end-of-line hyphenation, map control characters to
    spaces, pad punctuation not adjacent to digits and all symbols, split
    on whitespace. character: one token per non-space character.
    """
    if mode not in TOKENIZATION_MODES:
        raise ValueError(f"tokenization must be one of {TOKENIZATION_MODES}")
    if lowercase:
        text = text.lower()
    text = text.rstrip()
    if mode == "character":
        return [c for c in text if not c.isspace()]
    text = text.replace("-\n", "")
    text = "".join(" " if unicodedata.category(c) == "Cc" else c for c in text)
    text = _pad_punct_after_nondigit(text)
    text = _pad_punct_before_nondigit(text)
    text = "".join(f" {c} " if _is_symbol(c) else c for c in text)
    return text.split()


def _ngrams(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: BleuConfig = BleuConfig(),
    segmentation: str = "sentence",
) -> BleuReport:
    """Corpus-level BLEU over aligned (hypothesis, reference) segments."""
    if len(hypotheses) != len(references):
        raise ValueError(
            f"segment count mismatch: {len(hypotheses)} hypotheses vs "
            f"{len(references)} references"
        )
    if not hypotheses:
        raise ValueError("at least one segment is required")

    correct = [0] * config.max_order
    total = [0] * config.max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tokenize(hyp, config.tokenization, config.lowercase)
        ref_tokens = tokenize(ref, config.tokenization, config.lowercase)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for order in range(1, config.max_order + 1):
            if len(hyp_tokens) < order:
                break
            hyp_counts = _ngrams(hyp_tokens, order)
            ref_counts = _ngrams(ref_tokens, order)
            total[order - 1] += sum(hyp_counts.values())
            correct[order - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )

    if hyp_len == 0:
        return BleuReport(
            score=0.0,
            precisions=tuple(0.0 for _ in range(config.max_order)),
            brevity_penalty=0.0,
            hyp_length=0,
            ref_length=ref_len,
            segmentation=segmentation,
        )

    precisions = [0.0] * config.max_order
    floor_scale = 1.0
    for n in range(config.max_order):
        if total[n] == 0:
            continue
        if correct[n] == 0 and config.smoothing == "exp-floor":
            floor_scale *= 2.0
            precisions[n] = 1.0 / (floor_scale * total[n])
        else:
            precisions[n] = correct[n] / total[n]

    brevity_penalty = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)

    # orders the hypothesis corpus is too short to produce are excluded
    # from the geometric mean instead of zeroing the whole score
    effective = [precisions[n] for n in range(config.max_order) if total[n] > 0]
    if not effective or any(p == 0.0 for p in effective):
        score = 0.0
    else:
        score = brevity_penalty * math.exp(
            sum(math.log(p) for p in effective) / len(effective)
        ) * 100.0

    return BleuReport(
        score=score,
        precisions=tuple(precisions),
        brevity_penalty=brevity_penalty,
        hyp_length=hyp_len,
        ref_length=ref_len,
        segmentation=segmentation,
    )


def _check_alignment(
    hypotheses: Mapping[SegmentKey, str], references: Mapping[SegmentKey, str]
) -> list[SegmentKey]:
    missing_in_hyp = sorted(set(references) - set(hypotheses))
    missing_in_ref = sorted(set(hypotheses) - set(references))
    if missing_in_hyp or missing_in_ref:
        raise AlignmentError(missing_in_hyp, missing_in_ref)
    return sorted(hypotheses)


def s_bleu(
    hypotheses: Mapping[SegmentKey, str],
    references: Mapping[SegmentKey, str],
    config: BleuConfig = BleuConfig(),
) -> BleuReport:
    """Sentence-segmented BLEU: every (doc_id, seg_index) is one segment."""
    keys = _check_alignment(hypotheses, references)
    return corpus_bleu(
        [hypotheses[k] for k in keys],
        [references[k] for k in keys],
        config,
        segmentation="sentence",
    )


def d_bleu(
    hypotheses: Mapping[SegmentKey, str],
    references: Mapping[SegmentKey, str],
    config: BleuConfig = BleuConfig(),
) -> BleuReport:
    """Document-segmented BLEU: each document's sentences joined with
    single spaces form one segment."""
    keys = _check_alignment(hypotheses, references)
    doc_ids = sorted({doc_id for doc_id, _ in keys})
    hyp_docs = []
    ref_docs = []
    for doc_id in doc_ids:
        segs = sorted(k for k in keys if k[0] == doc_id)
        hyp_docs.append(" ".join(hypotheses[k] for k in segs))
        ref_docs.append(" ".join(references[k] for k in segs))
    return corpus_bleu(hyp_docs, ref_docs, config, segmentation="document")
