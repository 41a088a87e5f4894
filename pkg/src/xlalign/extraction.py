"""Extraction of unambiguous translated-in-context word pairs.

A pair is emitted for a source token only when the dictionary and the
target sentence leave no room for ambiguity:

  (a) exactly one dictionary translation of the source type is present
      among the target sentence's normalized tokens,
  (b) that candidate type occurs at exactly one target position, and
  (c) the source type occurs at exactly one source position.

Pair files are JSON Lines, one record per pair with fields
(pair_id, sentence_id, src_pos, tgt_pos, src_word, tgt_word).
"""

from __future__ import annotations

import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field

from .corpus import BilingualDictionary, SentencePair, normalize

SKIP_REASONS = (
    "no_entry",
    "no_candidate",
    "multiple_candidates",
    "repeated_candidate",
    "repeated_source",
)

PAIR_FIELDS = ("pair_id", "sentence_id", "src_pos", "tgt_pos", "src_word", "tgt_word")


@dataclass(frozen=True)
class AnchoredPair:
    """A dictionary-validated word pair anchored to token positions."""

    pair_id: int
    sentence_id: int
    src_pos: int
    tgt_pos: int
    src_word: str
    tgt_word: str
    src_type: str
    tgt_type: str


@dataclass
class ExtractionSummary:
    pair_count: int = 0
    sentence_count: int = 0
    skipped: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "sentence_count": self.sentence_count,
            "skipped": {reason: self.skipped.get(reason, 0) for reason in SKIP_REASONS},
        }


def extract_pairs(
    corpus: list[SentencePair], dictionary: BilingualDictionary
) -> tuple[list[AnchoredPair], ExtractionSummary]:
    """Scan source tokens against the dictionary, emitting certain pairs only.

    Unmatched tokens are skipped silently; the summary counts skips by
    reason. Output is ordered by (sentence_id, src_pos) with dense pair ids.
    """
    pairs: list[AnchoredPair] = []
    summary = ExtractionSummary(sentence_count=len(corpus))
    for sent in corpus:
        src_types = [normalize(tok) for tok in sent.src_tokens]
        tgt_types = [normalize(tok) for tok in sent.tgt_tokens]
        src_counts = Counter(src_types)
        tgt_counts = Counter(tgt_types)
        tgt_first_pos: dict[str, int] = {}
        for pos, t in enumerate(tgt_types):
            tgt_first_pos.setdefault(t, pos)
        for pos, src_type in enumerate(src_types):
            translations = dictionary.translations(src_type)
            if not translations:
                summary.skipped["no_entry"] += 1
                continue
            candidates = translations.intersection(tgt_counts)
            if not candidates:
                summary.skipped["no_candidate"] += 1
                continue
            if len(candidates) > 1:
                summary.skipped["multiple_candidates"] += 1
                continue
            (candidate,) = candidates
            if tgt_counts[candidate] != 1:
                summary.skipped["repeated_candidate"] += 1
                continue
            if src_counts[src_type] != 1:
                summary.skipped["repeated_source"] += 1
                continue
            tgt_pos = tgt_first_pos[candidate]
            pairs.append(
                AnchoredPair(
                    pair_id=len(pairs),
                    sentence_id=sent.id,
                    src_pos=pos,
                    tgt_pos=tgt_pos,
                    src_word=sent.src_tokens[pos],
                    tgt_word=sent.tgt_tokens[tgt_pos],
                    src_type=src_type,
                    tgt_type=candidate,
                )
            )
    summary.pair_count = len(pairs)
    return pairs, summary


@dataclass(frozen=True)
class ExtractionStats:
    pair_count: int
    distinct_type_pairs: int
    pairs_per_sentence: dict[int, int]

    def as_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "distinct_type_pairs": self.distinct_type_pairs,
            "pairs_per_sentence": {str(k): v for k, v in sorted(self.pairs_per_sentence.items())},
        }


def extraction_stats(pairs: list[AnchoredPair]) -> ExtractionStats:
    """Pair count, distinct type-pair count, pairs-per-sentence histogram."""
    per_sentence = Counter(p.sentence_id for p in pairs)
    histogram = Counter(per_sentence.values())
    return ExtractionStats(
        pair_count=len(pairs),
        distinct_type_pairs=len({(p.src_type, p.tgt_type) for p in pairs}),
        pairs_per_sentence=dict(histogram),
    )


def pair_record(pair: AnchoredPair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "sentence_id": pair.sentence_id,
        "src_pos": pair.src_pos,
        "tgt_pos": pair.tgt_pos,
        "src_word": pair.src_word,
        "tgt_word": pair.tgt_word,
    }


def write_pairs(pairs: list[AnchoredPair], path) -> None:
    """Write a pair file atomically (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".pairs-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for pair in pairs:
                fh.write(json.dumps(pair_record(pair), ensure_ascii=False))
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_pairs(path) -> list[AnchoredPair]:
    """Read a pair file; pair ids must be dense and ascending from 0."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {num}: invalid record ({exc})") from None
            missing = [f for f in PAIR_FIELDS if f not in rec]
            if missing:
                raise ValueError(f"{path}: line {num}: missing fields {missing}")
            pairs.append(
                AnchoredPair(
                    pair_id=int(rec["pair_id"]),
                    sentence_id=int(rec["sentence_id"]),
                    src_pos=int(rec["src_pos"]),
                    tgt_pos=int(rec["tgt_pos"]),
                    src_word=str(rec["src_word"]),
                    tgt_word=str(rec["tgt_word"]),
                    src_type=normalize(str(rec["src_word"])),
                    tgt_type=normalize(str(rec["tgt_word"])),
                )
            )
    for idx, pair in enumerate(pairs):
        if pair.pair_id != idx:
            raise ValueError(
                f"{path}: pair ids must be dense and ascending from 0; "
                f"record {idx} has pair_id {pair.pair_id}"
            )
    return pairs
