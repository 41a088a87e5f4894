"""Registry of the multilingual checkpoints this dumper targets."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelInfo:
    name: str
    checkpoint: str
    notes: str
    uses_parallel_data: bool = False
    language_in_input: bool = False
    encoder_only: bool = False


SUPPORTED_MODELS = (
    ModelInfo(
        name="mbert",
        checkpoint="bert-base-multilingual-cased",
        notes="12-block encoder; MLM + next-sentence prediction on 104 Wikipedias",
    ),
    ModelInfo(
        name="xlm-r-base",
        checkpoint="xlm-roberta-base",
        notes="12-block encoder; MLM on CommonCrawl in 100 languages",
    ),
    ModelInfo(
        name="xlm-r-large",
        checkpoint="xlm-roberta-large",
        notes="24-block encoder; MLM on CommonCrawl in 100 languages",
    ),
    ModelInfo(
        name="xlm-100",
        checkpoint="xlm-mlm-100-1280",
        notes="MLM only, 100 languages; encodes the language in input",
        language_in_input=True,
    ),
    ModelInfo(
        name="xlm-15",
        checkpoint="xlm-mlm-tlm-xnli15-1024",
        notes="MLM + translated-language-modeling on parallel text; "
        "encodes the language in input",
        uses_parallel_data=True,
        language_in_input=True,
    ),
    ModelInfo(
        name="awesome",
        checkpoint="aneuraz/awesome-align-with-co",
        notes="mBERT fine-tuned on parallel text for word alignment",
        uses_parallel_data=True,
    ),
    ModelInfo(
        name="mbart",
        checkpoint="facebook/mbart-large-cc25",
        notes="encoder-decoder model; only the encoder is evaluated",
        language_in_input=True,
        encoder_only=True,
    ),
)


def list_supported_models() -> tuple[ModelInfo, ...]:
    return SUPPORTED_MODELS


def resolve_checkpoint(name: str) -> str:
    """Map a registry name to its checkpoint; unknown names pass through
    so local paths and arbitrary hub ids keep working."""
    for info in SUPPORTED_MODELS:
        if info.name == name:
            return info.checkpoint
    return name
