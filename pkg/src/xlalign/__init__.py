"""Toolkit for measuring word-level multilingual alignment of
contextualized representations: unambiguous pair extraction from
parallel corpora, layer-wise weak/strong nearest-neighbor retrieval
under cosine or CSLS, alignment precision, and similarity-distribution
analysis."""

__version__ = "0.1.0"

from .corpus import (
    BilingualDictionary,
    SentencePair,
    load_dictionary,
    load_parallel_corpus,
    normalize,
    tokenize,
)
from .extraction import (
    AnchoredPair,
    ExtractionStats,
    ExtractionSummary,
    extract_pairs,
    extraction_stats,
    read_pairs,
    write_pairs,
)
from .precision import (
    DistributionSpec,
    DistributionTable,
    GoldAlignment,
    links_to_pairs,
    load_pharaoh,
    precision,
    serialize_pharaoh,
    similarity_distributions,
)
from .retrieval import (
    DegeneracyWarning,
    EvalConfig,
    RetrievalReport,
    evaluate_layers,
    sample_pairs,
    score_strong,
    score_weak,
)
from .sentences import (
    SentenceEvalConfig,
    cls_similarity_curve,
    evaluate_sentences,
)
from .similarity import (
    SimilarityCriterion,
    SimilarityMatrix,
    cosine_matrix,
    csls_matrix,
    neighborhood_mean,
)
from .store import (
    EmbeddingSet,
    make_embedding_set,
    read_embedding_set,
    write_embedding_set,
)

__all__ = [
    "AnchoredPair",
    "BilingualDictionary",
    "DegeneracyWarning",
    "DistributionSpec",
    "DistributionTable",
    "EmbeddingSet",
    "EvalConfig",
    "ExtractionStats",
    "ExtractionSummary",
    "GoldAlignment",
    "RetrievalReport",
    "SentenceEvalConfig",
    "SentencePair",
    "SimilarityCriterion",
    "SimilarityMatrix",
    "cls_similarity_curve",
    "cosine_matrix",
    "csls_matrix",
    "evaluate_layers",
    "evaluate_sentences",
    "extract_pairs",
    "extraction_stats",
    "links_to_pairs",
    "load_dictionary",
    "load_parallel_corpus",
    "load_pharaoh",
    "make_embedding_set",
    "neighborhood_mean",
    "normalize",
    "precision",
    "read_embedding_set",
    "read_pairs",
    "sample_pairs",
    "score_strong",
    "score_weak",
    "serialize_pharaoh",
    "similarity_distributions",
    "tokenize",
    "write_embedding_set",
    "write_pairs",
]
