"""Pair-set precision against gold word alignments, and similarity
distributions across pair populations.

Alignment files use the Pharaoh layout: one sentence per line, links as
0-based token index pairs. "i-j" marks a sure link; "i?j" or "ipj" marks
a possible link.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .corpus import SentencePair, normalize
from .extraction import AnchoredPair
from .similarity import paired_cosine, unit_rows
from .store import EmbeddingSet

_LINK_RE = re.compile(r"^(\d+)([-?p])(\d+)$")

POPULATIONS = ("extracted", "external", "random_in_sentence", "random_global")


@dataclass(frozen=True)
class GoldAlignment:
    """Per-sentence link sets; sentence ids are 0-based line indices."""

    num_sentences: int
    sure: dict[int, frozenset[tuple[int, int]]]
    possible: dict[int, frozenset[tuple[int, int]]]

    def links(self, sentence_id: int) -> frozenset[tuple[int, int]]:
        return self.sure.get(sentence_id, frozenset()) | self.possible.get(
            sentence_id, frozenset()
        )

    def all_links(self) -> set[tuple[int, int, int]]:
        triples = set()
        for sid, links in self.sure.items():
            triples.update((sid, i, j) for i, j in links)
        for sid, links in self.possible.items():
            triples.update((sid, i, j) for i, j in links)
        return triples


def load_pharaoh(path) -> GoldAlignment:
    """Parse a Pharaoh alignment file (also used for external aligner output)."""
    sure: dict[int, set] = defaultdict(set)
    possible: dict[int, set] = defaultdict(set)
    num_sentences = 0
    with open(path, "rb") as fh:
        raw = fh.read().splitlines()
    for num, data in enumerate(raw, start=1):
        num_sentences += 1
        try:
            line = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValueError(f"{path}: line {num} is not valid UTF-8 ({exc})") from None
        for token in line.split():
            match = _LINK_RE.match(token)
            if not match:
                raise ValueError(f"{path}: line {num}: malformed link {token!r}")
            i, sep, j = match.groups()
            link = (int(i), int(j))
            if sep == "-":
                sure[num - 1].add(link)
            else:
                possible[num - 1].add(link)
    return GoldAlignment(
        num_sentences=num_sentences,
        sure={sid: frozenset(links) for sid, links in sure.items()},
        possible={sid: frozenset(links) for sid, links in possible.items()},
    )


def serialize_pharaoh(alignment: GoldAlignment) -> str:
    """Canonical text form: links sorted per line, sure as i-j, possible as ipj."""
    lines = []
    for sid in range(alignment.num_sentences):
        tokens = [(i, j, "-") for i, j in alignment.sure.get(sid, frozenset())]
        tokens += [(i, j, "p") for i, j in alignment.possible.get(sid, frozenset())]
        tokens.sort()
        lines.append(" ".join(f"{i}{sep}{j}" for i, j, sep in tokens))
    return "\n".join(lines) + "\n"


def _predicted_links(predicted) -> set[tuple[int, int, int]]:
    if isinstance(predicted, GoldAlignment):
        return predicted.all_links()
    return {(p.sentence_id, p.src_pos, p.tgt_pos) for p in predicted}


def precision(predicted, gold: GoldAlignment) -> float:
    """Fraction of predicted links found among gold sure or possible links.

    ``predicted`` is a list of AnchoredPair or a GoldAlignment of links.
    """
    links = _predicted_links(predicted)
    if not links:
        raise ValueError("precision is undefined for an empty predicted set")
    gold_links = gold.all_links()
    return len(links & gold_links) / len(links)


def links_to_pairs(
    alignment: GoldAlignment,
    corpus: list[SentencePair],
    start_id: int = 0,
) -> list[AnchoredPair]:
    """Convert alignment links into pair records anchored to corpus tokens.

    Enables dumping embeddings for externally aligned pairs through the
    same pair-file interface. Links pointing at sentences missing from
    the corpus or at out-of-range positions are rejected.
    """
    by_id = {sent.id: sent for sent in corpus}
    pairs = []
    next_id = start_id
    for sid in range(alignment.num_sentences):
        links = sorted(alignment.links(sid))
        if not links:
            continue
        sent = by_id.get(sid)
        if sent is None:
            raise ValueError(f"alignment line {sid + 1} has links but sentence {sid} is not in the corpus")
        for i, j in links:
            if i >= len(sent.src_tokens) or j >= len(sent.tgt_tokens):
                raise ValueError(
                    f"alignment line {sid + 1}: link {i}-{j} out of range for "
                    f"sentence with {len(sent.src_tokens)} source and "
                    f"{len(sent.tgt_tokens)} target tokens"
                )
            pairs.append(
                AnchoredPair(
                    pair_id=next_id,
                    sentence_id=sid,
                    src_pos=i,
                    tgt_pos=j,
                    src_word=sent.src_tokens[i],
                    tgt_word=sent.tgt_tokens[j],
                    src_type=normalize(sent.src_tokens[i]),
                    tgt_type=normalize(sent.tgt_tokens[j]),
                )
            )
            next_id += 1
    return pairs


@dataclass(frozen=True)
class DistributionSpec:
    layer: int
    populations: tuple[str, ...] = ("extracted", "random_in_sentence", "random_global")
    bins: int = 50
    samples: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins must be at least 2, got {self.bins}")
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        unknown = [p for p in self.populations if p not in POPULATIONS]
        if unknown:
            raise ValueError(f"unknown populations {unknown}; expected subset of {POPULATIONS}")


@dataclass(frozen=True)
class PopulationStats:
    population: str
    count: int
    mean: float
    std: float
    histogram: tuple[int, ...]


@dataclass(frozen=True)
class DistributionTable:
    bin_edges: tuple[float, ...]
    populations: tuple[PopulationStats, ...]
    skipped_external_links: int = 0

    def overlap(self, pop_a: str, pop_b: str) -> float:
        """Overlap coefficient: sum over bins of min of the normalized histograms."""
        stats = {p.population: p for p in self.populations}
        a = np.asarray(stats[pop_a].histogram, dtype=np.float64)
        b = np.asarray(stats[pop_b].histogram, dtype=np.float64)
        return float(np.minimum(a / a.sum(), b / b.sum()).sum())

    def csv_rows(self) -> list[tuple]:
        rows = []
        for pop in self.populations:
            for bin_idx, count in enumerate(pop.histogram):
                rows.append(
                    (
                        self.bin_edges[bin_idx],
                        self.bin_edges[bin_idx + 1],
                        pop.population,
                        count,
                    )
                )
        return rows


def _rowwise_cosine(U: np.ndarray, V: np.ndarray, rows_u, rows_v) -> np.ndarray:
    return paired_cosine(U, V, rows_u, rows_v)


def similarity_distributions(
    src_set: EmbeddingSet,
    tgt_set: EmbeddingSet,
    pairs: list[AnchoredPair],
    spec: DistributionSpec,
    external_links: GoldAlignment | None = None,
) -> DistributionTable:
    """Cosine similarity histograms for pair populations at one layer.

    The embedding sets index ``pairs`` row by row: the source vector of
    inventory item p pairs with any target vector to form a sample.
    Random populations re-pair inventory items, excluding combinations
    whose positions coincide with an inventory link (those are aligned
    pairs, not random ones). External links are looked up against the
    inventory by (sentence, position); links without coverage are counted
    and skipped.
    """
    if src_set.item_ids != tgt_set.item_ids:
        raise ValueError("source and target sets cover different item id spaces")
    if not (0 <= spec.layer < src_set.num_layers):
        raise ValueError(f"layer {spec.layer} out of range (num_layers {src_set.num_layers})")
    if len(pairs) != src_set.num_items:
        raise ValueError(
            f"inventory has {len(pairs)} pairs but embedding sets hold {src_set.num_items} items"
        )
    id_order = [p.pair_id for p in pairs]
    if tuple(id_order) != src_set.item_ids:
        raise ValueError("inventory pair ids do not match embedding item ids")

    U = unit_rows(src_set.layer(spec.layer), "src layer")
    V = unit_rows(tgt_set.layer(spec.layer), "tgt layer")
    rng = np.random.default_rng([int(spec.seed) & 0xFFFFFFFFFFFFFFFF, int(spec.layer)])

    n = len(pairs)
    link_set = {(p.sentence_id, p.src_pos, p.tgt_pos) for p in pairs}
    by_sentence: dict[int, list[int]] = defaultdict(list)
    for row, p in enumerate(pairs):
        by_sentence[p.sentence_id].append(row)

    samples: dict[str, np.ndarray] = {}
    skipped_external = 0
    for population in spec.populations:
        if population == "extracted":
            count = min(spec.samples, n)
            rows = rng.choice(n, size=count, replace=False) if count < n else np.arange(n)
            samples[population] = _rowwise_cosine(U, V, rows, rows)
        elif population == "external":
            if external_links is None:
                raise ValueError("population 'external' requested without external alignments")
            src_index = {(p.sentence_id, p.src_pos): row for row, p in enumerate(pairs)}
            tgt_index = {(p.sentence_id, p.tgt_pos): row for row, p in enumerate(pairs)}
            rows_u, rows_v = [], []
            for sid, i, j in sorted(external_links.all_links()):
                ru = src_index.get((sid, i))
                rv = tgt_index.get((sid, j))
                if ru is None or rv is None:
                    skipped_external += 1
                    continue
                rows_u.append(ru)
                rows_v.append(rv)
            if not rows_u:
                raise ValueError(
                    "population 'external': no alignment link is covered by the "
                    "pair inventory (dump embeddings for an inventory that "
                    "includes the external links, e.g. via pairs-from-alignments)"
                )
            rows_u = np.asarray(rows_u)
            rows_v = np.asarray(rows_v)
            if len(rows_u) > spec.samples:
                keep = rng.choice(len(rows_u), size=spec.samples, replace=False)
                rows_u, rows_v = rows_u[keep], rows_v[keep]
            samples[population] = _rowwise_cosine(U, V, rows_u, rows_v)
        elif population == "random_in_sentence":
            combos = [
                (ru, rv)
                for rows in by_sentence.values()
                for ru in rows
                for rv in rows
                if (pairs[ru].sentence_id, pairs[ru].src_pos, pairs[rv].tgt_pos) not in link_set
            ]
            if not combos:
                raise ValueError(
                    "population 'random_in_sentence': no sentence offers a "
                    "non-aligned combination of inventory items"
                )
            picks = rng.integers(len(combos), size=spec.samples)
            rows_u = np.asarray([combos[c][0] for c in picks])
            rows_v = np.asarray([combos[c][1] for c in picks])
            samples[population] = _rowwise_cosine(U, V, rows_u, rows_v)
        elif population == "random_global":
            if n < 2:
                raise ValueError("population 'random_global' needs at least 2 inventory items")
            rows_u = np.empty(spec.samples, dtype=np.int64)
            rows_v = np.empty(spec.samples, dtype=np.int64)
            filled = 0
            stalled = 0
            while filled < spec.samples:
                need = spec.samples - filled
                cand_u = rng.integers(n, size=need)
                cand_v = rng.integers(n, size=need)
                ok = np.asarray(
                    [
                        (pairs[ru].sentence_id, pairs[ru].src_pos, pairs[rv].tgt_pos)
                        not in link_set
                        for ru, rv in zip(cand_u, cand_v)
                    ]
                )
                take = int(ok.sum())
                rows_u[filled : filled + take] = cand_u[ok]
                rows_v[filled : filled + take] = cand_v[ok]
                filled += take
                stalled = stalled + 1 if take == 0 else 0
                if stalled >= 64:
                    raise ValueError(
                        "population 'random_global': rejection sampling made no "
                        "progress; nearly every combination is an aligned pair"
                    )
            samples[population] = _rowwise_cosine(U, V, rows_u, rows_v)

    edges = np.linspace(-1.0, 1.0, spec.bins + 1)
    populations = []
    for population in spec.populations:
        sims = np.clip(samples[population], -1.0, 1.0)
        counts, _ = np.histogram(sims, bins=edges)
        populations.append(
            PopulationStats(
                population=population,
                count=int(sims.size),
                mean=float(sims.mean()),
                std=float(sims.std()),
                histogram=tuple(int(c) for c in counts),
            )
        )
    return DistributionTable(
        bin_edges=tuple(float(e) for e in edges),
        populations=tuple(populations),
        skipped_external_links=skipped_external,
    )
