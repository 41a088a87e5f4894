"""Parallel corpus and bilingual dictionary loading.

Corpora are pairs of aligned UTF-8 text files, one sentence per line.
Dictionaries use the MUSE text layout: one whitespace-separated
"source_word target_word" pair per line.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(line: str) -> list[str]:
    """Split a line into word tokens.

    Splits on whitespace, then peels leading and trailing punctuation
    characters off each chunk into tokens of their own. Interior
    punctuation (hyphens, apostrophes) stays inside the token.
    """
    tokens: list[str] = []
    for chunk in line.split():
        i, j = 0, len(chunk)
        lead = []
        while i < j and _is_punct(chunk[i]):
            lead.append(chunk[i])
            i += 1
        trail = []
        while j > i and _is_punct(chunk[j - 1]):
            trail.append(chunk[j - 1])
            j -= 1
        tokens.extend(lead)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(reversed(trail))
    return tokens


def normalize(word: str) -> str:
    """Case-fold a token into its dictionary lookup form.

    No diacritic stripping: MUSE dictionaries preserve diacritics.
    """
    return word.casefold()


@dataclass(frozen=True)
class SentencePair:
    """A gold-translated sentence pair; ``id`` is the 0-based line index."""

    id: int
    src_lang: str
    tgt_lang: str
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    src_raw: str
    tgt_raw: str


@dataclass(frozen=True)
class BilingualDictionary:
    """Multimap from case-folded source word types to target word types."""

    src_lang: str
    tgt_lang: str
    entries: dict[str, frozenset[str]]

    def translations(self, src_type: str) -> frozenset[str]:
        return self.entries.get(src_type, frozenset())

    def __contains__(self, src_type: str) -> bool:
        return src_type in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def inverted(self) -> "BilingualDictionary":
        """Swap direction: map each target type to its source types."""
        inv: dict[str, set[str]] = {}
        for src, tgts in self.entries.items():
            for tgt in tgts:
                inv.setdefault(tgt, set()).add(src)
        return BilingualDictionary(
            src_lang=self.tgt_lang,
            tgt_lang=self.src_lang,
            entries={k: frozenset(v) for k, v in sorted(inv.items())},
        )


def _read_lines(path) -> list[str]:
    # Decode line by line so an encoding error can name the offending line.
    with open(path, "rb") as fh:
        raw = fh.read().splitlines()
    lines = []
    for num, data in enumerate(raw, start=1):
        try:
            lines.append(data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise ValueError(f"{path}: line {num} is not valid UTF-8 ({exc})") from None
    return lines


def load_parallel_corpus(src_path, tgt_path, src_lang: str, tgt_lang: str) -> list[SentencePair]:
    """Load two aligned one-sentence-per-line files into SentencePairs.

    Lines that tokenize to nothing on either side are dropped on both
    sides together; surviving pairs keep their original line index as id.
    """
    src_lines = _read_lines(src_path)
    tgt_lines = _read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"line count mismatch: {src_path} has {len(src_lines)} lines, "
            f"{tgt_path} has {len(tgt_lines)}"
        )
    corpus = []
    for idx, (src_raw, tgt_raw) in enumerate(zip(src_lines, tgt_lines)):
        src_tokens = tokenize(src_raw)
        tgt_tokens = tokenize(tgt_raw)
        if not src_tokens or not tgt_tokens:
            continue
        corpus.append(
            SentencePair(
                id=idx,
                src_lang=src_lang,
                tgt_lang=tgt_lang,
                src_tokens=tuple(src_tokens),
                tgt_tokens=tuple(tgt_tokens),
                src_raw=src_raw,
                tgt_raw=tgt_raw,
            )
        )
    return corpus


def load_dictionary(path, src_lang: str, tgt_lang: str) -> BilingualDictionary:
    """Load a MUSE-layout dictionary file, aggregating entries per source type."""
    entries: dict[str, set[str]] = {}
    for num, line in enumerate(_read_lines(path), start=1):
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(
                f"{path}: line {num}: expected 'source_word target_word', "
                f"got {len(fields)} fields"
            )
        src, tgt = fields
        entries.setdefault(normalize(src), set()).add(normalize(tgt))
    return BilingualDictionary(
        src_lang=src_lang,
        tgt_lang=tgt_lang,
        entries={k: frozenset(v) for k, v in sorted(entries.items())},
    )
