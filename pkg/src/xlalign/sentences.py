"""Sentence-level alignment analysis.

Sentence representations (first-token or averaged) go through the same
nearest-neighbor retrieval as word representations; no per-language
centering is applied, so the scores reflect the raw alignment quality.
A per-layer similarity curve compares translated sentence pairs against
random sentence pairs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .retrieval import (
    LayerResult,
    RetrievalReport,
    _aggregate,
    _rng_for_run,
    _warn_ties,
    _weak_details,
)
from .similarity import SimilarityCriterion, paired_cosine, unit_rows
from .store import EmbeddingSet

SENTENCE_KINDS = ("sentence_avg", "sentence_cls")


@dataclass(frozen=True)
class SentenceEvalConfig:
    kind: str = "sentence_avg"
    n: int = 5000
    runs: int = 10
    criterion: SimilarityCriterion = field(default_factory=SimilarityCriterion)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SENTENCE_KINDS:
            raise ValueError(f"kind must be one of {SENTENCE_KINDS}, got {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")


def _check_sentence_sets(src_set: EmbeddingSet, tgt_set: EmbeddingSet, kind: str | None) -> None:
    if src_set.item_ids != tgt_set.item_ids:
        raise ValueError("source and target sets cover different sentence id spaces")
    if src_set.num_layers != tgt_set.num_layers:
        raise ValueError(
            f"layer count mismatch: src has {src_set.num_layers}, tgt has {tgt_set.num_layers}"
        )
    if src_set.dim != tgt_set.dim:
        raise ValueError(f"dimension mismatch: src d={src_set.dim}, tgt d={tgt_set.dim}")
    for name, embset in (("src", src_set), ("tgt", tgt_set)):
        if embset.kind not in SENTENCE_KINDS:
            raise ValueError(f"{name} set holds {embset.kind!r} items, not sentence items")
        if kind is not None and embset.kind != kind:
            raise ValueError(f"{name} set holds {embset.kind!r} items but config asks for {kind!r}")


def evaluate_sentences(
    src_set: EmbeddingSet,
    tgt_set: EmbeddingSet,
    config: SentenceEvalConfig,
    workers: int = 1,
) -> RetrievalReport:
    """Weak retrieval score per layer over sampled sentence pairs."""
    _check_sentence_sets(src_set, tgt_set, config.kind)
    num_items = src_set.num_items
    if config.n > num_items:
        raise ValueError(
            f"cannot sample {config.n} of {num_items} sentences: maximum feasible is {num_items}"
        )

    row_samples = []
    for run in range(config.runs):
        rng = _rng_for_run(config.seed, run)
        row_samples.append(rng.choice(num_items, size=config.n, replace=False))

    def eval_unit(layer: int, run: int) -> float:
        rows = row_samples[run]
        Un = unit_rows(src_set.layer(layer)[rows], "U")
        Vn = unit_rows(tgt_set.layer(layer)[rows], "V")
        hits, ties, _ = _weak_details(Un, Vn, config.criterion)
        _warn_ties(ties, f"layer {layer} run {run} weak")
        return float(hits.mean())

    units = [(layer, run) for layer in range(src_set.num_layers) for run in range(config.runs)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {unit: pool.submit(eval_unit, *unit) for unit in units}
        results = {unit: fut.result() for unit, fut in futures.items()}
    else:
        results = {unit: eval_unit(*unit) for unit in units}

    layer_results = []
    for layer in range(src_set.num_layers):
        weak_runs = [results[(layer, run)] for run in range(config.runs)]
        layer_results.append(LayerResult(layer=layer, weak=_aggregate(weak_runs), strong=None))
    return RetrievalReport(layers=tuple(layer_results))


@dataclass(frozen=True)
class CurvePoint:
    layer: int
    population: str
    mean: float
    std: float
    ci95: float
    count: int


def _mean_ci_over_items(values: np.ndarray) -> tuple[float, float, float]:
    mean = float(values.mean())
    if values.size > 1:
        std = float(values.std(ddof=1))
        ci95 = float(stats.t.ppf(0.975, values.size - 1) * std / np.sqrt(values.size))
    else:
        std, ci95 = 0.0, 0.0
    return mean, std, ci95


def _draw_random_sentence_pairs(
    num_items: int, num_random: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """num_random (i, j) index pairs with i drawn without replacement and j != i."""
    if num_items < 2:
        raise ValueError("need at least 2 sentences to draw random pairs")
    if num_random > num_items:
        raise ValueError(
            f"cannot draw {num_random} random sentence pairs without replacement "
            f"from {num_items} sentences"
        )
    rows_i = rng.choice(num_items, size=num_random, replace=False)
    rows_j = rng.integers(num_items - 1, size=num_random)
    rows_j[rows_j >= rows_i] += 1
    return rows_i, rows_j


def _mean_cos_for_index_pairs(src: np.ndarray, tgt: np.ndarray, rows_i, rows_j) -> np.ndarray:
    return paired_cosine(src, tgt, rows_i, rows_j)


def cls_similarity_curve(
    src_set: EmbeddingSet,
    tgt_set: EmbeddingSet,
    num_random: int | None = None,
    seed: int = 0,
) -> list[CurvePoint]:
    """Per-layer mean cosine for translated vs random sentence pairs.

    Random pairs are drawn once (seeded) and reused across layers so the
    two curves are comparable layer to layer.
    """
    _check_sentence_sets(src_set, tgt_set, kind=None)
    num_items = src_set.num_items
    if num_random is None:
        num_random = num_items
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0])
    rows_i, rows_j = _draw_random_sentence_pairs(num_items, num_random, rng)

    points = []
    for layer in range(src_set.num_layers):
        src = unit_rows(src_set.layer(layer), "src layer")
        tgt = unit_rows(tgt_set.layer(layer), "tgt layer")
        translated = paired_cosine(src, tgt)
        mean, std, ci95 = _mean_ci_over_items(translated)
        points.append(CurvePoint(layer, "translated", mean, std, ci95, translated.size))
        random_sims = _mean_cos_for_index_pairs(src, tgt, rows_i, rows_j)
        mean, std, ci95 = _mean_ci_over_items(random_sims)
        points.append(CurvePoint(layer, "random", mean, std, ci95, random_sims.size))
    return points
