"""Weak and strong alignment scores per layer.

Row i of U and row i of V hold the two sides of translated pair i.

The weak score is the fraction of rows whose own translation beats every
other candidate from the opposite set:

    weak  = (1/N) sum_i 1[ s(u_i, v_i) > max_{j != i} s(u_i, v_j) ]

The strong score replaces the rivals with the query's own set, so the
translation must also beat every same-language competitor:

    strong = (1/N) sum_i 1[ s(u_i, v_i) > max_{j != i} s(u_i, u_j) ]

Comparisons are strict: an exact tie counts as a failure and triggers a
DegeneracyWarning (all-identical inputs, e.g. layer-0 CLS vectors, score
0 rather than crashing).

For CSLS the strong score searches the pool {v_i} union U \\ {u_i} for
query u_i: the query-side correction is the mean top-k cosine over that
pool, and the candidate-side correction of any candidate (v_i or a u_j)
is taken over U.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .extraction import AnchoredPair
from .similarity import SimilarityCriterion, topk_row_means, unit_rows
from .store import EmbeddingSet


class DegeneracyWarning(UserWarning):
    """Exact similarity ties made some comparisons undecidable (counted as failures)."""


@dataclass(frozen=True)
class EvalConfig:
    n: int = 5000
    runs: int = 10
    criterion: SimilarityCriterion = field(default_factory=SimilarityCriterion)
    seed: int = 0
    distinct_types: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")


@dataclass(frozen=True)
class ScoreStats:
    mean: float
    std: float
    ci95: float
    runs: tuple[float, ...]


@dataclass(frozen=True)
class FailureRecord:
    layer: int
    run: int
    metric: str
    pair_id: int
    retrieved_id: int


@dataclass(frozen=True)
class LayerResult:
    layer: int
    weak: ScoreStats
    strong: ScoreStats | None


@dataclass(frozen=True)
class RetrievalReport:
    layers: tuple[LayerResult, ...]
    failures: tuple[FailureRecord, ...] = ()


def _rng_for_run(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(run_index)])


def sample_pairs(
    pairs: list[AnchoredPair],
    n: int,
    distinct_types: bool,
    seed: int,
    run_index: int,
) -> list[int]:
    """Sample n pair ids without replacement, deterministic in (seed, run_index).

    With distinct_types, no two sampled pairs share a (src_type, tgt_type)
    combination: a seeded permutation is scanned and the first occurrence
    of each type pair is kept.
    """
    rng = _rng_for_run(seed, run_index)
    if distinct_types:
        feasible = len({(p.src_type, p.tgt_type) for p in pairs})
        if n > feasible:
            raise ValueError(
                f"cannot sample {n} pairs with distinct word types: "
                f"maximum feasible is {feasible}"
            )
        ids = []
        seen = set()
        for idx in rng.permutation(len(pairs)):
            key = (pairs[idx].src_type, pairs[idx].tgt_type)
            if key in seen:
                continue
            seen.add(key)
            ids.append(pairs[idx].pair_id)
            if len(ids) == n:
                break
        return ids
    if n > len(pairs):
        raise ValueError(f"cannot sample {n} of {len(pairs)} pairs: maximum feasible is {len(pairs)}")
    return [pairs[i].pair_id for i in rng.choice(len(pairs), size=n, replace=False)]


def _diag_vs_rivals(diag: np.ndarray, rivals: np.ndarray):
    """Compare each row's own-pair score against its best rival (in place on rivals)."""
    np.fill_diagonal(rivals, -np.inf)
    best = rivals.max(axis=1)
    argbest = rivals.argmax(axis=1)
    hits = diag > best
    ties = diag == best
    return hits, ties, argbest


def _warn_ties(ties: np.ndarray, metric: str) -> None:
    if ties.any():
        warnings.warn(
            f"{metric}: {int(ties.sum())} of {ties.size} comparisons tied exactly "
            f"(degenerate representations?); ties count as failures",
            DegeneracyWarning,
            stacklevel=3,
        )


def _check_matched(U: np.ndarray, V: np.ndarray) -> None:
    if U.shape != V.shape:
        raise ValueError(f"U and V must have matching shapes, got {U.shape} and {V.shape}")
    if U.shape[0] < 2:
        raise ValueError("need at least 2 pairs to rank rivals")


def _weak_details(Un: np.ndarray, Vn: np.ndarray, criterion: SimilarityCriterion):
    cos_uv = Un @ Vn.T
    diag = np.diag(cos_uv).copy()
    if criterion.kind == "cosine":
        return _diag_vs_rivals(diag, cos_uv)
    k = criterion.k
    r_query = topk_row_means(cos_uv, k)
    r_candidate = topk_row_means(np.ascontiguousarray(cos_uv.T), k)
    scores = 2.0 * cos_uv
    scores -= r_query[:, None]
    scores -= r_candidate[None, :]
    sdiag = 2.0 * diag - r_query - r_candidate
    return _diag_vs_rivals(sdiag, scores)


def _strong_details(Un: np.ndarray, Vn: np.ndarray, criterion: SimilarityCriterion):
    n = Un.shape[0]
    diag_uv = np.einsum("ij,ij->i", Un, Vn)
    cos_uu = Un @ Un.T
    if criterion.kind == "cosine":
        return _diag_vs_rivals(diag_uv, cos_uu)
    k = criterion.k
    # Query-side pool for u_i is {v_i} union U \ {u_i}: row i of cos(U, U)
    # with the self-similarity replaced by cos(u_i, v_i).
    pool = cos_uu.copy()
    np.fill_diagonal(pool, diag_uv)
    r_query = topk_row_means(pool, k)
    del pool
    # Candidate-side corrections are always over U.
    r_u_of_u = topk_row_means(cos_uu, k)
    r_u_of_v = topk_row_means(Vn @ Un.T, k)
    sdiag = 2.0 * diag_uv - r_query - r_u_of_v
    scores = 2.0 * cos_uu
    scores -= r_query[:, None]
    scores -= r_u_of_u[None, :]
    return _diag_vs_rivals(sdiag, scores)


def score_weak(U, V, criterion: SimilarityCriterion) -> float:
    """Fraction of pairs whose translation is the nearest opposite-set neighbor."""
    Un = unit_rows(U, "U")
    Vn = unit_rows(V, "V")
    _check_matched(Un, Vn)
    hits, ties, _ = _weak_details(Un, Vn, criterion)
    _warn_ties(ties, "weak")
    return float(hits.mean())


def score_strong(U, V, criterion: SimilarityCriterion) -> float:
    """Fraction of pairs whose translation beats every same-set competitor."""
    Un = unit_rows(U, "U")
    Vn = unit_rows(V, "V")
    _check_matched(Un, Vn)
    hits, ties, _ = _strong_details(Un, Vn, criterion)
    _warn_ties(ties, "strong")
    return float(hits.mean())


def _aggregate(run_scores: list[float]) -> ScoreStats:
    values = np.asarray(run_scores, dtype=np.float64)
    mean = float(values.mean())
    if values.size > 1:
        std = float(values.std(ddof=1))
        ci95 = float(stats.t.ppf(0.975, values.size - 1) * std / np.sqrt(values.size))
    else:
        std = 0.0
        ci95 = 0.0
    return ScoreStats(mean=mean, std=std, ci95=ci95, runs=tuple(float(v) for v in values))


def evaluate_layers(
    src_set: EmbeddingSet,
    tgt_set: EmbeddingSet,
    pairs: list[AnchoredPair],
    config: EvalConfig,
    workers: int = 1,
    record_failures: bool = False,
) -> RetrievalReport:
    """Weak and strong scores for every layer, aggregated over sampled runs.

    One sample of n pair ids is drawn per run (keyed by (seed, run_index))
    and reused across layers. Layer/run units are independent, so the
    result does not depend on the worker count.
    """
    if src_set.item_ids != tgt_set.item_ids:
        raise ValueError("source and target sets cover different item id spaces")
    if src_set.num_layers != tgt_set.num_layers:
        raise ValueError(
            f"layer count mismatch: src has {src_set.num_layers}, tgt has {tgt_set.num_layers}"
        )
    if src_set.dim != tgt_set.dim:
        raise ValueError(f"dimension mismatch: src d={src_set.dim}, tgt d={tgt_set.dim}")
    id_set = set(src_set.item_ids)
    available = [p for p in pairs if p.pair_id in id_set]
    row_of = {item_id: row for row, item_id in enumerate(src_set.item_ids)}

    samples = [
        sample_pairs(available, config.n, config.distinct_types, config.seed, run)
        for run in range(config.runs)
    ]
    row_samples = [np.asarray([row_of[i] for i in ids]) for ids in samples]

    def eval_unit(layer: int, run: int):
        rows = row_samples[run]
        Un = unit_rows(src_set.layer(layer)[rows], "U")
        Vn = unit_rows(tgt_set.layer(layer)[rows], "V")
        weak_hits, weak_ties, weak_arg = _weak_details(Un, Vn, config.criterion)
        strong_hits, strong_ties, strong_arg = _strong_details(Un, Vn, config.criterion)
        _warn_ties(weak_ties, f"layer {layer} run {run} weak")
        _warn_ties(strong_ties, f"layer {layer} run {run} strong")
        failures = []
        if record_failures:
            ids = samples[run]
            for i in np.flatnonzero(~weak_hits):
                failures.append(FailureRecord(layer, run, "weak", ids[i], ids[weak_arg[i]]))
            for i in np.flatnonzero(~strong_hits):
                failures.append(FailureRecord(layer, run, "strong", ids[i], ids[strong_arg[i]]))
        return float(weak_hits.mean()), float(strong_hits.mean()), failures

    units = [(layer, run) for layer in range(src_set.num_layers) for run in range(config.runs)]
    results = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {unit: pool.submit(eval_unit, *unit) for unit in units}
        results = {unit: fut.result() for unit, fut in futures.items()}
    else:
        results = {unit: eval_unit(*unit) for unit in units}

    layer_results = []
    failures: list[FailureRecord] = []
    for layer in range(src_set.num_layers):
        weak_runs = [results[(layer, run)][0] for run in range(config.runs)]
        strong_runs = [results[(layer, run)][1] for run in range(config.runs)]
        for run in range(config.runs):
            failures.extend(results[(layer, run)][2])
        layer_results.append(
            LayerResult(layer=layer, weak=_aggregate(weak_runs), strong=_aggregate(strong_runs))
        )
    return RetrievalReport(layers=tuple(layer_results), failures=tuple(failures))


def report_records(report: RetrievalReport) -> list[dict]:
    """One JSON-ready record per layer with all score fields."""
    records = []
    for layer in report.layers:
        rec = {
            "layer": layer.layer,
            "weak_mean": layer.weak.mean,
            "weak_std": layer.weak.std,
            "weak_ci95": layer.weak.ci95,
            "weak_runs": list(layer.weak.runs),
        }
        if layer.strong is not None:
            rec.update(
                strong_mean=layer.strong.mean,
                strong_std=layer.strong.std,
                strong_ci95=layer.strong.ci95,
                strong_runs=list(layer.strong.runs),
            )
        records.append(rec)
    return records


def report_csv_rows(report: RetrievalReport) -> list[tuple]:
    """Flat (layer, metric, mean, std, ci95) rows for plotting."""
    rows = []
    for layer in report.layers:
        rows.append((layer.layer, "weak", layer.weak.mean, layer.weak.std, layer.weak.ci95))
        if layer.strong is not None:
            rows.append(
                (layer.layer, "strong", layer.strong.mean, layer.strong.std, layer.strong.ci95)
            )
    return rows
