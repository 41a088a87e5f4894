"""Embedding dumper: turns multilingual transformer checkpoints into
layer-wise embedding-set files for anchored word pairs and sentences."""

__version__ = "0.1.0"

from .dump import DumpJob, convert_fasttext, dump_embeddings
from .models import ModelInfo, list_supported_models, resolve_checkpoint
from .wordtok import tokenize_with_offsets

__all__ = [
    "DumpJob",
    "ModelInfo",
    "convert_fasttext",
    "dump_embeddings",
    "list_supported_models",
    "resolve_checkpoint",
    "tokenize_with_offsets",
]
