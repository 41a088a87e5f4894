"""Interchange-conformance acceptance: one PASS/FAIL line per criterion
(run with -s to see them on success). Validation is done with the
evaluator package's reader, i.e. through the on-disk contract."""

import json

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from xlalign import read_embedding_set
from xlalign.similarity import paired_cosine, unit_rows

from xlalign_dumper import DumpJob, dump_embeddings


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{status}: {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_word_dump_passes_reader_validation(toy_model_dir, toy_corpus, toy_pairs, tmp_path):
    src_path, tgt_path = toy_corpus
    job = DumpJob(
        model=toy_model_dir, src_path=src_path, tgt_path=tgt_path,
        out_path=str(tmp_path / "dump"), pairs_path=toy_pairs, kind="word",
        batch_size=2,
    )
    src_dir, tgt_dir = dump_embeddings(job)
    src_set = read_embedding_set(src_dir)
    tgt_set = read_embedding_set(tgt_dir)
    ok = src_set.num_items == tgt_set.num_items and src_set.item_ids == tgt_set.item_ids
    _report(
        "Dumper output passes embedding-set validation",
        ok,
        f"{src_set.num_items} items, {src_set.num_layers} layers",
    )


def test_layer_count_is_encoder_depth_plus_one(toy_model_dir, toy_corpus, tmp_path):
    src_path, tgt_path = toy_corpus
    job = DumpJob(
        model=toy_model_dir, src_path=src_path, tgt_path=tgt_path,
        out_path=str(tmp_path / "dump"), kind="sentence_avg",
    )
    src_dir, _ = dump_embeddings(job)
    manifest = json.loads((tmp_path / "dump" / "src" / "manifest.json").read_text("utf-8"))
    blocks = AutoModel.from_pretrained(toy_model_dir).config.num_hidden_layers
    ok = manifest["num_layers"] == blocks + 1 == 13
    _report(
        "Manifest layer count equals encoder depth + 1",
        ok,
        f"{blocks} blocks -> {manifest['num_layers']} layers",
    )


def test_layer0_cls_pairwise_cosine_is_one(toy_model_dir, toy_corpus, tmp_path):
    src_path, tgt_path = toy_corpus
    job = DumpJob(
        model=toy_model_dir, src_path=src_path, tgt_path=tgt_path,
        out_path=str(tmp_path / "cls"), kind="sentence_cls", batch_size=2,
    )
    src_dir, tgt_dir = dump_embeddings(job)
    ok = True
    worst = 1.0
    for out_dir in (src_dir, tgt_dir):
        layer0 = unit_rows(read_embedding_set(out_dir).layer(0))
        n = layer0.shape[0]
        for i in range(n):
            sims = paired_cosine(np.tile(layer0[i], (n, 1)), layer0)
            worst = min(worst, float(sims.min()))
            ok &= bool(np.all(sims == 1.0))
    _report("Layer-0 CLS pairwise cosine is exactly 1.0", ok, f"min {worst}")


def test_single_subword_word_equals_hidden_state(toy_model_dir, tmp_path):
    src = tmp_path / "s.fr"
    tgt = tmp_path / "s.en"
    src.write_text("le chat est lent\n", encoding="utf-8")
    tgt.write_text("the cat is slow\n", encoding="utf-8")
    records = [{"pair_id": 0, "sentence_id": 0, "src_pos": 1, "tgt_pos": 1,
                "src_word": "chat", "tgt_word": "cat"}]
    pair_path = tmp_path / "pairs.jsonl"
    pair_path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    job = DumpJob(
        model=toy_model_dir, src_path=str(src), tgt_path=str(tgt),
        out_path=str(tmp_path / "dump"), pairs_path=str(pair_path), kind="word",
    )
    _, tgt_dir = dump_embeddings(job)
    tgt_set = read_embedding_set(tgt_dir)

    tokenizer = AutoTokenizer.from_pretrained(toy_model_dir)
    model = AutoModel.from_pretrained(toy_model_dir)
    model.eval()
    enc = tokenizer("the cat is slow", return_tensors="pt")
    assert tokenizer.tokenize("the cat is slow")[1] == "cat"  # single subword
    with torch.no_grad():
        out = model(**enc, output_hidden_states=True)
    ok = True
    for layer in range(tgt_set.num_layers):
        expected = out.hidden_states[layer][0, 2].numpy()  # [CLS] the cat ...
        ok &= bool(np.array_equal(tgt_set.layer(layer)[0], expected))
    _report("Single-subword word vector equals its hidden state exactly", ok)
