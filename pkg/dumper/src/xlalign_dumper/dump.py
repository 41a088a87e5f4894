"""Layer-wise embedding extraction from transformer checkpoints.

Whole sentences go through the encoder; hidden states are collected for
every layer, with index 0 holding the input embedding output (so a
12-block encoder yields 13 layers). Word vectors are the mean of the
word's subword vectors, located via character offsets. Sentence vectors
are either the mean over non-special tokens or the first-token vector.

Items that cannot be produced on one side (over-long sentence,
unrecoverable subword span) are dropped on both sides so the pair id
spaces stay aligned; dropped ids are recorded in the manifests.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .models import resolve_checkpoint
from .store_io import write_set
from .wordtok import tokenize_with_offsets

ITEM_KINDS = ("word", "sentence_avg", "sentence_cls")


@dataclass
class DumpJob:
    model: str
    src_path: str
    tgt_path: str
    out_path: str
    src_lang: str = "src"
    tgt_lang: str = "tgt"
    kind: str = "word"
    pairs_path: str | None = None
    masked: bool = False
    batch_size: int = 8
    device: str = "cpu"

    def __post_init__(self):
        if self.kind not in ITEM_KINDS:
            raise ValueError(f"kind must be one of {ITEM_KINDS}, got {self.kind!r}")
        if self.kind == "word" and not self.pairs_path:
            raise ValueError("word dumps need --pairs")
        if self.masked and self.kind != "word":
            raise ValueError("masked dumps only apply to word items")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class _PairRecord:
    pair_id: int
    sentence_id: int
    src_pos: int
    tgt_pos: int
    src_word: str
    tgt_word: str


@dataclass
class _SentEnc:
    ids: list[int]
    offsets: list[tuple[int, int]]
    special: list[int]

    def span_for(self, start: int, end: int) -> list[int]:
        return [
            t
            for t in range(len(self.ids))
            if not self.special[t]
            and self.offsets[t][0] < end
            and self.offsets[t][1] > start
        ]

    def content_positions(self) -> list[int]:
        return [t for t in range(len(self.ids)) if not self.special[t]]


def _read_lines(path) -> list[str]:
    with open(path, "rb") as fh:
        raw = fh.read().splitlines()
    lines = []
    for num, data in enumerate(raw, start=1):
        try:
            lines.append(data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise ValueError(f"{path}: line {num} is not valid UTF-8 ({exc})") from None
    return lines


def _read_pair_file(path) -> list[_PairRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {num}: invalid record ({exc})") from None
            records.append(
                _PairRecord(
                    pair_id=int(rec["pair_id"]),
                    sentence_id=int(rec["sentence_id"]),
                    src_pos=int(rec["src_pos"]),
                    tgt_pos=int(rec["tgt_pos"]),
                    src_word=str(rec["src_word"]),
                    tgt_word=str(rec["tgt_word"]),
                )
            )
    return records


def _load_model(name: str, device: str):
    checkpoint = resolve_checkpoint(name)
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    if not tokenizer.is_fast:
        raise ValueError(f"{checkpoint}: a fast tokenizer with offset mapping is required")
    tokenizer.padding_side = "right"
    model = AutoModel.from_pretrained(checkpoint)
    # For encoder-decoder checkpoints only the encoder side is dumped.
    if getattr(model.config, "is_encoder_decoder", False) and hasattr(model, "get_encoder"):
        model = model.get_encoder()
    model.to(device)
    model.eval()
    return tokenizer, model


def _max_sequence_length(tokenizer, model) -> int:
    limits = []
    max_pos = getattr(model.config, "max_position_embeddings", None)
    if isinstance(max_pos, int) and 0 < max_pos < 1_000_000:
        limits.append(max_pos)
    if isinstance(tokenizer.model_max_length, int) and tokenizer.model_max_length < 1_000_000:
        limits.append(tokenizer.model_max_length)
    return min(limits) if limits else 1_000_000


def _encode_all(tokenizer, raws: list[str]) -> list[_SentEnc]:
    if not raws:
        return []
    enc = tokenizer(raws, return_offsets_mapping=True, return_special_tokens_mask=True)
    return [
        _SentEnc(
            ids=list(enc["input_ids"][b]),
            offsets=[tuple(o) for o in enc["offset_mapping"][b]],
            special=list(enc["special_tokens_mask"][b]),
        )
        for b in range(len(raws))
    ]


def _forward(tokenizer, model, device, sequences: list[list[int]]):
    batch = tokenizer.pad({"input_ids": sequences}, return_tensors="pt").to(device)
    with torch.no_grad():
        out = model(**batch, output_hidden_states=True)
    return [h.cpu() for h in out.hidden_states]


@dataclass
class _SideDump:
    """Row buffers, one (P, d) array per layer; shape comes from the first
    forward pass so architectures that report layer counts differently in
    their configs all work."""

    num_items: int
    rows: list[np.ndarray] = field(default_factory=list)

    def ensure(self, hidden) -> None:
        if not self.rows:
            dim = hidden[0].shape[-1]
            self.rows = [
                np.empty((self.num_items, dim), dtype=np.float32) for _ in range(len(hidden))
            ]


def _chunks(seq, size):
    for start in range(0, len(seq), size):
        yield seq[start : start + size]


def dump_embeddings(job: DumpJob) -> tuple[str, str]:
    """Run the job and write one embedding-set directory per side."""
    src_lines = _read_lines(job.src_path)
    tgt_lines = _read_lines(job.tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"line count mismatch: {job.src_path} has {len(src_lines)} lines, "
            f"{job.tgt_path} has {len(tgt_lines)}"
        )
    src_words = [tokenize_with_offsets(line) for line in src_lines]
    tgt_words = [tokenize_with_offsets(line) for line in tgt_lines]
    kept_sids = [sid for sid in range(len(src_lines)) if src_words[sid] and tgt_words[sid]]

    tokenizer, model = _load_model(job.model, job.device)
    limit = _max_sequence_length(tokenizer, model)
    src_enc = dict(zip(kept_sids, _encode_all(tokenizer, [src_lines[s] for s in kept_sids])))
    tgt_enc = dict(zip(kept_sids, _encode_all(tokenizer, [tgt_lines[s] for s in kept_sids])))

    if job.kind == "word":
        item_ids, dropped, spans = _plan_word_items(
            job, src_words, tgt_words, src_enc, tgt_enc, limit
        )
    else:
        item_ids, dropped = _plan_sentence_items(kept_sids, src_enc, tgt_enc, limit)
        spans = None
    if not item_ids:
        raise ValueError("no items survived encoding; nothing to dump")

    out_dirs = (os.path.join(job.out_path, "src"), os.path.join(job.out_path, "tgt"))
    for side, out_dir in zip(("src", "tgt"), out_dirs):
        enc_map = src_enc if side == "src" else tgt_enc
        if job.kind == "word":
            side_spans = spans[side]
            dump = _pool_word_side(job, tokenizer, model, enc_map, item_ids, side_spans)
        else:
            dump = _pool_sentence_side(job, tokenizer, model, enc_map, item_ids)
        write_set(
            out_dir,
            model=job.model,
            src_lang=job.src_lang,
            tgt_lang=job.tgt_lang,
            side=side,
            kind=job.kind,
            masked=job.masked,
            layers=dump.rows,
            item_ids=item_ids,
            dropped_items=dropped,
        )
    return out_dirs


def _plan_word_items(job, src_words, tgt_words, src_enc, tgt_enc, limit):
    records = _read_pair_file(job.pairs_path)
    item_ids = []
    dropped = []
    spans = {"src": {}, "tgt": {}}
    for rec in records:
        sid = rec.sentence_id
        ok = sid in src_enc and len(src_enc[sid].ids) <= limit and len(tgt_enc[sid].ids) <= limit
        span_src = span_tgt = None
        if ok:
            span_src = _word_span(src_words[sid], rec.src_pos, rec.src_word, src_enc[sid])
            span_tgt = _word_span(tgt_words[sid], rec.tgt_pos, rec.tgt_word, tgt_enc[sid])
            ok = span_src is not None and span_tgt is not None
        if ok:
            spans["src"][rec.pair_id] = (sid, span_src)
            spans["tgt"][rec.pair_id] = (sid, span_tgt)
            item_ids.append(rec.pair_id)
        else:
            dropped.append(rec.pair_id)
    return item_ids, dropped, spans


def _word_span(words, pos, expected_word, enc: _SentEnc):
    if pos < 0 or pos >= len(words):
        return None
    text, start, end = words[pos]
    if text != expected_word:
        return None
    span = enc.span_for(start, end)
    return span or None


def _plan_sentence_items(kept_sids, src_enc, tgt_enc, limit):
    item_ids = []
    dropped = []
    for sid in kept_sids:
        src, tgt = src_enc[sid], tgt_enc[sid]
        ok = (
            len(src.ids) <= limit
            and len(tgt.ids) <= limit
            and src.content_positions()
            and tgt.content_positions()
        )
        (item_ids if ok else dropped).append(sid)
    return item_ids, dropped


def _pool_word_side(job, tokenizer, model, enc_map, item_ids, side_spans) -> _SideDump:
    dump = _SideDump(num_items=len(item_ids))
    row_of = {pair_id: row for row, pair_id in enumerate(item_ids)}

    if job.masked:
        # Each item needs its own sequence with the anchored word's
        # subwords replaced by the mask token.
        mask_id = tokenizer.mask_token_id
        if mask_id is None:
            raise ValueError(f"{job.model}: tokenizer has no mask token; cannot dump masked items")
        tasks = []
        for pair_id in item_ids:
            sid, span = side_spans[pair_id]
            ids = list(enc_map[sid].ids)
            for t in span:
                ids[t] = mask_id
            tasks.append((pair_id, ids, span))
        for batch in _chunks(tasks, job.batch_size):
            hidden = _forward(tokenizer, model, job.device, [ids for _, ids, _ in batch])
            dump.ensure(hidden)
            for b, (pair_id, _, span) in enumerate(batch):
                row = row_of[pair_id]
                for layer, states in enumerate(hidden):
                    dump.rows[layer][row] = states[b, span].mean(dim=0).numpy()
        return dump

    by_sentence: dict[int, list[tuple[int, list[int]]]] = {}
    for pair_id in item_ids:
        sid, span = side_spans[pair_id]
        by_sentence.setdefault(sid, []).append((row_of[pair_id], span))
    sids = sorted(by_sentence)
    for batch in _chunks(sids, job.batch_size):
        hidden = _forward(tokenizer, model, job.device, [enc_map[sid].ids for sid in batch])
        dump.ensure(hidden)
        for b, sid in enumerate(batch):
            for row, span in by_sentence[sid]:
                for layer, states in enumerate(hidden):
                    dump.rows[layer][row] = states[b, span].mean(dim=0).numpy()
    return dump


def _pool_sentence_side(job, tokenizer, model, enc_map, item_ids) -> _SideDump:
    dump = _SideDump(num_items=len(item_ids))
    for batch_start in range(0, len(item_ids), job.batch_size):
        batch = item_ids[batch_start : batch_start + job.batch_size]
        hidden = _forward(tokenizer, model, job.device, [enc_map[sid].ids for sid in batch])
        dump.ensure(hidden)
        for b, sid in enumerate(batch):
            if job.kind == "sentence_cls":
                positions = [0]
            else:
                positions = enc_map[sid].content_positions()
            row = batch_start + b
            for layer, states in enumerate(hidden):
                dump.rows[layer][row] = states[b, positions].mean(dim=0).numpy()
    return dump


def _read_word_vectors(path) -> dict[str, np.ndarray]:
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8", errors="ignore") as fh:
        for num, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if num == 1 and len(parts) == 2:
                continue  # word2vec-style "count dim" header
            if len(parts) < 3:
                continue
            word = parts[0]
            if word in vectors:
                continue
            vectors[word] = np.asarray(parts[1:], dtype=np.float32)
    return vectors


def convert_fasttext(
    src_vectors_path,
    tgt_vectors_path,
    pairs_path,
    out_path,
    src_lang: str = "src",
    tgt_lang: str = "en",
    model_name: str = "fasttext-rcsls",
) -> tuple[str, str]:
    """Convert aligned static word vectors into 1-layer embedding sets
    covering a pair file; pairs missing a vector on either side are
    dropped on both."""
    records = _read_pair_file(pairs_path)
    src_vecs = _read_word_vectors(src_vectors_path)
    tgt_vecs = _read_word_vectors(tgt_vectors_path)

    def lookup(table, word):
        if word in table:
            return table[word]
        return table.get(word.casefold())

    item_ids = []
    dropped = []
    rows_src = []
    rows_tgt = []
    for rec in records:
        u = lookup(src_vecs, rec.src_word)
        v = lookup(tgt_vecs, rec.tgt_word)
        if u is None or v is None or not u.any() or not v.any():
            dropped.append(rec.pair_id)
            continue
        item_ids.append(rec.pair_id)
        rows_src.append(u)
        rows_tgt.append(v)
    if not item_ids:
        raise ValueError("no pairs covered by the word vectors; nothing to convert")

    out_dirs = (os.path.join(out_path, "src"), os.path.join(out_path, "tgt"))
    for side, out_dir, rows in zip(("src", "tgt"), out_dirs, (rows_src, rows_tgt)):
        write_set(
            out_dir,
            model=model_name,
            src_lang=src_lang,
            tgt_lang=tgt_lang,
            side=side,
            kind="word",
            masked=False,
            layers=[np.vstack(rows).astype(np.float32)],
            item_ids=item_ids,
            dropped_items=dropped,
        )
    return out_dirs
