import json

import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

WORDS = [
    "the", "car", "is", "fast", ".", "!", ",", "la", "voit", "##ure", "est",
    "rapide", "le", "chat", "cat", "slow", "lent", "dog", "chien", "voi",
    "##t", "##u", "##re", "big", "grand", "tree", "arbre", "sun", "soleil",
    "moon", "lune", "a", "un", "une",
]


@pytest.fixture(scope="session")
def toy_model_dir(tmp_path_factory):
    """A 12-block BERT with random weights and a local wordpiece tokenizer:
    no downloads, deterministic on CPU."""
    path = tmp_path_factory.mktemp("toybert")
    vocab = {t: i for i, t in enumerate(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS)}
    tokenizer = Tokenizer(models.WordPiece(vocab=vocab, unk_token="[UNK]"))
    tokenizer.normalizer = normalizers.BertNormalizer(lowercase=True)
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=12,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=48,
    )
    torch.manual_seed(1234)
    BertModel(config).save_pretrained(path)
    fast.save_pretrained(path)
    return str(path)


@pytest.fixture()
def toy_corpus(tmp_path):
    src = tmp_path / "corpus.fr"
    tgt = tmp_path / "corpus.en"
    src.write_text(
        "La voiture est rapide.\n"
        "Le chat est lent.\n"
        "Un grand arbre.\n"
        "La lune est grand.\n",
        encoding="utf-8",
    )
    tgt.write_text(
        "The car is fast.\n"
        "The cat is slow.\n"
        "A big tree.\n"
        "The moon is big.\n",
        encoding="utf-8",
    )
    return str(src), str(tgt)


@pytest.fixture()
def toy_pairs(tmp_path):
    records = [
        {"pair_id": 0, "sentence_id": 0, "src_pos": 1, "tgt_pos": 1,
         "src_word": "voiture", "tgt_word": "car"},
        {"pair_id": 1, "sentence_id": 0, "src_pos": 3, "tgt_pos": 3,
         "src_word": "rapide", "tgt_word": "fast"},
        {"pair_id": 2, "sentence_id": 1, "src_pos": 1, "tgt_pos": 1,
         "src_word": "chat", "tgt_word": "cat"},
        {"pair_id": 3, "sentence_id": 1, "src_pos": 3, "tgt_pos": 3,
         "src_word": "lent", "tgt_word": "slow"},
        {"pair_id": 4, "sentence_id": 2, "src_pos": 1, "tgt_pos": 1,
         "src_word": "grand", "tgt_word": "big"},
        {"pair_id": 5, "sentence_id": 2, "src_pos": 2, "tgt_pos": 2,
         "src_word": "arbre", "tgt_word": "tree"},
        {"pair_id": 6, "sentence_id": 3, "src_pos": 1, "tgt_pos": 1,
         "src_word": "lune", "tgt_word": "moon"},
    ]
    path = tmp_path / "pairs.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return str(path)
