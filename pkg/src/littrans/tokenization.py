"""Script-aware text segmentation shared by data staging and retrieval.

Unsegmented CJK text carries no word boundaries, so CJK characters are
treated as one token each; everything else is split on whitespace. This
keeps token budgets and retrieval terms meaningful for Chinese, English,
and mixed text without an external segmenter.

Not the BLEU tokenizer — scorer-compatible tokenization lives in
``littrans.metrics``.
"""

from __future__ import annotations

from functools import lru_cache

# Han ideographs plus kana; Hangul and most CJK punctuation are excluded
# (Hangul is space-delimited, punctuation falls through to the
# whitespace-run path and still ends up a separate token).
_CJK_RANGES = (
    (0x3040, 0x30FF),    # hiragana, katakana
    (0x3400, 0x4DBF),    # CJK ext A
    (0x4E00, 0x9FFF),    # CJK unified
    (0xF900, 0xFAFF),    # CJK compatibility
    (0x20000, 0x2A6DF),  # CJK ext B
    (0x2F800, 0x2FA1F),  # CJK compatibility supplement
)


@lru_cache(maxsize=None)
def is_cjk_char(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def segment_text(text: str) -> list[str]:
    """Split text into tokens: one per CJK character, whitespace-delimited
    words otherwise."""
    tokens: list[str] = []
    word: list[str] = []
    for ch in text:
        if is_cjk_char(ch):
            if word:
                tokens.append("".join(word))
                word = []
            tokens.append(ch)
        elif ch.isspace():
            if word:
                tokens.append("".join(word))
                word = []
        else:
            word.append(ch)
    if word:
        tokens.append("".join(word))
    return tokens


def count_tokens(text: str) -> int:
    """Default token counter for packing budgets (injectable elsewhere)."""
    return len(segment_text(text))


def terms(text: str) -> list[str]:
    """Lowercased tokens for retrieval term statistics."""
    return [t.lower() for t in segment_text(text)]


def cjk_ratio(text: str) -> float:
    """Fraction of non-space characters that are CJK; 0.0 for empty text."""
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return 0.0
    return sum(1 for c in chars if is_cjk_char(c)) / len(chars)
