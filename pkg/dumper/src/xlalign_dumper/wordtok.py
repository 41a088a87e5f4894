"""Word tokenization with character offsets.

Matches the pair-file contract of the evaluation toolkit: split on
whitespace, peel leading and trailing punctuation characters into tokens
of their own, keep interior punctuation inside the token. Offsets refer
to the original line so words can be mapped onto subword spans.
"""

from __future__ import annotations

import unicodedata


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_with_offsets(line: str) -> list[tuple[str, int, int]]:
    """Tokens as (text, start, end) character spans into ``line``."""
    tokens: list[tuple[str, int, int]] = []
    pos = 0
    length = len(line)
    while pos < length:
        if line[pos].isspace():
            pos += 1
            continue
        start = pos
        while pos < length and not line[pos].isspace():
            pos += 1
        chunk = line[start:pos]
        i, j = 0, len(chunk)
        lead = []
        while i < j and _is_punct(chunk[i]):
            lead.append((chunk[i], start + i, start + i + 1))
            i += 1
        trail = []
        while j > i and _is_punct(chunk[j - 1]):
            trail.append((chunk[j - 1], start + j - 1, start + j))
            j -= 1
        tokens.extend(lead)
        if i < j:
            tokens.append((chunk[i:j], start + i, start + j))
        tokens.extend(reversed(trail))
    return tokens
