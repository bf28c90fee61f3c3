"""Deterministic Unicode text statistics.

Everything downstream (validity checks, diversity scores, language
identification, overlap detection) is built on the small set of rules pinned
here.  The exact definitions matter for reproducibility, so changes to any
of them are breaking:

* tokenize: NFC-normalise, case-fold, then take maximal runs of Unicode
  letters, combining marks and apostrophes; a hyphen joins a run only when
  it sits between two run characters.  Digits and punctuation are dropped.
* segment_sentences: split on ``.``, ``!``, ``?``, ``…`` and newline runs;
  a run of terminators stays attached to its sentence; sentences are
  trimmed and empties dropped.
* trigram_profile: NFC-normalise, case-fold, collapse whitespace runs to a
  single space, strip, pad with one leading and one trailing space, then
  count every overlapping character trigram.
* diacritic counts use NFD decomposition and the combining-diacritics block
  U+0300..U+036F; tone marks are grave, acute, circumflex, caron, macron.
"""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

APOSTROPHES = frozenset({"'", "’", "ʼ"})
HYPHENS = frozenset({"-", "‐"})
SENTENCE_TERMINATORS = frozenset({".", "!", "?", "…"})

# Tone marks relevant to the target orthographies: grave, acute, circumflex,
# caron, macron.
TONE_MARKS = frozenset({"̀", "́", "̂", "̌", "̄"})

# Vowel letters, including the open vowels used by Gbe orthographies.
VOWELS = frozenset("aeiouɛɔ")

_COMBINING_LO = 0x0300
_COMBINING_HI = 0x036F


@dataclass(frozen=True)
class TokenSequence:
    """Tokens extracted from one text plus the original character count."""

    tokens: tuple[str, ...]
    source_char_count: int

    @property
    def total(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DiversityStats:
    total_tokens: int
    vocab_size: int
    ttr: float
    hapax_count: int
    hapax_ratio: float


@dataclass(frozen=True)
class DiacriticStats:
    alphabetic_count: int
    combining_mark_count: int
    diacritic_ratio: float
    has_diacritics: bool
    tonal_vowel_fraction: float


@dataclass
class TrigramProfile:
    """Bag of overlapping character trigrams with the total count."""

    counts: dict[str, int]
    total: int

    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.counts.values()))


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch).startswith("L")


def _is_mark(ch: str) -> bool:
    return unicodedata.category(ch).startswith("M")


def _is_run_char(ch: str) -> bool:
    return _is_letter(ch) or _is_mark(ch) or ch in APOSTROPHES


def tokenize(text: str) -> TokenSequence:
    """Split a text into word tokens.

    The text is NFC-normalised and case-folded first; each token is
    re-normalised so token content is itself NFC.
    """
    normalized = unicodedata.normalize("NFC", text).casefold()
    tokens: list[str] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            tokens.append(unicodedata.normalize("NFC", "".join(current)))
            current.clear()

    n = len(normalized)
    for i, ch in enumerate(normalized):
        if _is_run_char(ch):
            current.append(ch)
        elif ch in HYPHENS and current and i + 1 < n and _is_run_char(normalized[i + 1]):
            current.append(ch)
        else:
            flush()
    flush()
    return TokenSequence(tuple(tokens), len(text))


def segment_sentences(text: str) -> list[str]:
    """Split a text into trimmed sentences, keeping terminator runs attached."""
    sentences: list[str] = []
    buf: list[str] = []

    def flush() -> None:
        sentence = "".join(buf).strip()
        if sentence:
            sentences.append(sentence)
        buf.clear()

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in SENTENCE_TERMINATORS:
            buf.append(ch)
            i += 1
            while i < n and text[i] in SENTENCE_TERMINATORS:
                buf.append(text[i])
                i += 1
            flush()
        elif ch == "\n":
            flush()
            i += 1
        else:
            buf.append(ch)
            i += 1
    flush()
    return sentences


def diversity(tokens: TokenSequence | Sequence[str]) -> DiversityStats:
    """Type-token ratio and hapax statistics for a token sequence.

    Note the hapax ratio is hapax_count / vocab_size (share of the
    vocabulary seen once), not hapax_count / total_tokens.
    """
    toks = list(tokens)
    total = len(toks)
    if total == 0:
        return DiversityStats(0, 0, 0.0, 0, 0.0)
    counts = Counter(toks)
    vocab = len(counts)
    hapax = sum(1 for c in counts.values() if c == 1)
    return DiversityStats(total, vocab, vocab / total, hapax, hapax / vocab)


def ngram_repetition(tokens: TokenSequence | Sequence[str], n: int = 4) -> float:
    """1 - unique/total token n-grams; 0.0 when fewer than n tokens."""
    if n < 1:
        raise ValueError(f"n-gram size must be >= 1, got {n}")
    toks = list(tokens)
    total = len(toks) - n + 1
    if total <= 0:
        return 0.0
    grams = [tuple(toks[i : i + n]) for i in range(total)]
    return 1.0 - len(set(grams)) / total


def sentence_repetition(sentences: Sequence[str]) -> float:
    """1 - unique/total sentences, comparing case-folded and trimmed forms."""
    if not sentences:
        return 0.0
    normalized = [s.strip().casefold() for s in sentences]
    return 1.0 - len(set(normalized)) / len(normalized)


def diacritic_stats(text: str) -> DiacriticStats:
    """Combining-mark counts over the NFD decomposition of a text.

    ``diacritic_ratio`` is marks per base letter; ``tonal_vowel_fraction``
    is the share of vowel letters carrying at least one tone mark.
    """
    decomposed = unicodedata.normalize("NFD", text)
    alphabetic = 0
    marks = 0
    vowel_count = 0
    toned_vowels = 0
    current_is_vowel = False
    current_has_tone = False

    def flush_base() -> None:
        nonlocal vowel_count, toned_vowels, current_is_vowel, current_has_tone
        if current_is_vowel:
            vowel_count += 1
            if current_has_tone:
                toned_vowels += 1
        current_is_vowel = False
        current_has_tone = False

    for ch in decomposed:
        if _is_letter(ch):
            flush_base()
            alphabetic += 1
            current_is_vowel = ch.casefold() in VOWELS
        elif _is_mark(ch):
            if _COMBINING_LO <= ord(ch) <= _COMBINING_HI:
                marks += 1
            if ch in TONE_MARKS and current_is_vowel:
                current_has_tone = True
        else:
            flush_base()
    flush_base()

    ratio = marks / alphabetic if alphabetic else 0.0
    tonal_fraction = toned_vowels / vowel_count if vowel_count else 0.0
    return DiacriticStats(alphabetic, marks, ratio, marks > 0, tonal_fraction)


def trigram_profile(text: str) -> TrigramProfile:
    """Character trigram counts of the normalised, space-padded text."""
    normalized = unicodedata.normalize("NFC", text).casefold()
    collapsed = " ".join(normalized.split())
    if not collapsed:
        return TrigramProfile({}, 0)
    padded = f" {collapsed} "
    counts = Counter(padded[i : i + 3] for i in range(len(padded) - 2))
    return TrigramProfile(dict(counts), sum(counts.values()))


def merge_profiles(profiles: Iterable[TrigramProfile]) -> TrigramProfile:
    """Sum several trigram profiles into one."""
    counts: Counter[str] = Counter()
    for profile in profiles:
        counts.update(profile.counts)
    return TrigramProfile(dict(counts), sum(counts.values()))


def cosine(p: TrigramProfile, q: TrigramProfile) -> float:
    """Cosine similarity of two trigram count vectors; 0.0 if either is empty."""
    if not p.counts or not q.counts:
        return 0.0
    small, large = (p, q) if len(p.counts) <= len(q.counts) else (q, p)
    large_counts = large.counts
    dot = sum(c * large_counts.get(gram, 0) for gram, c in small.counts.items())
    if dot == 0:
        return 0.0
    return dot / (p.norm() * q.norm())
