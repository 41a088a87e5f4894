"""Command-line entry point for reproducible extraction and evaluation runs.

Every subcommand writes its reports into --out plus a run manifest
(resolved configuration, seed, and input checksums) sufficient to
reproduce the run. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile

from . import __version__
from .corpus import load_dictionary, load_parallel_corpus
from .extraction import extract_pairs, extraction_stats, read_pairs, write_pairs
from .precision import (
    DistributionSpec,
    links_to_pairs,
    load_pharaoh,
    precision,
    similarity_distributions,
)
from .retrieval import EvalConfig, evaluate_layers, report_csv_rows, report_records
from .sentences import SentenceEvalConfig, cls_similarity_curve, evaluate_sentences
from .similarity import SimilarityCriterion
from .store import read_embedding_set


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _input_checksums(paths: dict) -> dict:
    checksums = {}
    for name, path in paths.items():
        if path is None:
            continue
        if os.path.isdir(path):
            checksums[name] = {"path": str(path), "sha256": _sha256_file(os.path.join(path, "manifest.json"))}
        else:
            checksums[name] = {"path": str(path), "sha256": _sha256_file(path)}
    return checksums


def _atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".out-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def _write_jsonl(path, records) -> None:
    buf = io.StringIO()
    for rec in records:
        buf.write(json.dumps(rec, ensure_ascii=False))
        buf.write("\n")
    _atomic_write_text(path, buf.getvalue())


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write_text(path, buf.getvalue())


def _write_run_manifest(out_dir, subcommand: str, config: dict, inputs: dict, outputs: list) -> None:
    manifest = {
        "tool": "xlalign",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": _input_checksums(inputs),
        "outputs": outputs,
    }
    _write_json(os.path.join(out_dir, "run_manifest.json"), manifest)


def _criterion_from_args(args) -> SimilarityCriterion:
    return SimilarityCriterion(kind=args.criterion, k=args.k)


def _bool_flag(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {value!r}")


def cmd_extract(args) -> int:
    corpus = load_parallel_corpus(args.src, args.tgt, args.src_lang, args.tgt_lang)
    dictionary = load_dictionary(args.dict, args.src_lang, args.tgt_lang)
    if args.direction == "tgt2src":
        corpus = [
            type(sent)(
                id=sent.id,
                src_lang=sent.tgt_lang,
                tgt_lang=sent.src_lang,
                src_tokens=sent.tgt_tokens,
                tgt_tokens=sent.src_tokens,
                src_raw=sent.tgt_raw,
                tgt_raw=sent.src_raw,
            )
            for sent in corpus
        ]
        dictionary = dictionary.inverted()
    pairs, summary = extract_pairs(corpus, dictionary)
    stats = extraction_stats(pairs)
    os.makedirs(args.out, exist_ok=True)
    pair_path = os.path.join(args.out, "pairs.jsonl")
    write_pairs(pairs, pair_path)
    summary_obj = {
        "direction": args.direction,
        **summary.as_dict(),
        **stats.as_dict(),
    }
    _write_json(os.path.join(args.out, "extract_summary.json"), summary_obj)
    _write_run_manifest(
        args.out,
        "extract",
        {
            "src_lang": args.src_lang,
            "tgt_lang": args.tgt_lang,
            "direction": args.direction,
        },
        {"src": args.src, "tgt": args.tgt, "dict": args.dict},
        ["pairs.jsonl", "extract_summary.json"],
    )
    print(f"extracted {len(pairs)} pairs from {len(corpus)} sentence pairs")
    return 0


def cmd_pairs_from_alignments(args) -> int:
    corpus = load_parallel_corpus(args.src, args.tgt, args.src_lang, args.tgt_lang)
    alignment = load_pharaoh(args.alignments)
    pairs = links_to_pairs(alignment, corpus, start_id=args.start_id)
    os.makedirs(args.out, exist_ok=True)
    write_pairs(pairs, os.path.join(args.out, "pairs.jsonl"))
    _write_run_manifest(
        args.out,
        "pairs-from-alignments",
        {"src_lang": args.src_lang, "tgt_lang": args.tgt_lang, "start_id": args.start_id},
        {"src": args.src, "tgt": args.tgt, "alignments": args.alignments},
        ["pairs.jsonl"],
    )
    print(f"converted {len(pairs)} alignment links into pair records")
    return 0


def cmd_eval_retrieval(args) -> int:
    pairs = read_pairs(args.pairs)
    src_set = read_embedding_set(args.embeddings_src)
    tgt_set = read_embedding_set(args.embeddings_tgt)
    config = EvalConfig(
        n=args.n,
        runs=args.runs,
        criterion=_criterion_from_args(args),
        seed=args.seed,
        distinct_types=args.distinct_types,
    )
    report = evaluate_layers(
        src_set,
        tgt_set,
        pairs,
        config,
        workers=args.workers,
        record_failures=args.record_failures,
    )
    os.makedirs(args.out, exist_ok=True)
    _write_jsonl(os.path.join(args.out, "retrieval_report.jsonl"), report_records(report))
    _write_csv(
        os.path.join(args.out, "retrieval_report.csv"),
        ("layer", "metric", "mean", "std", "ci95"),
        report_csv_rows(report),
    )
    outputs = ["retrieval_report.jsonl", "retrieval_report.csv"]
    if args.record_failures:
        _write_csv(
            os.path.join(args.out, "failures.csv"),
            ("layer", "run", "metric", "pair_id", "retrieved_id"),
            [(f.layer, f.run, f.metric, f.pair_id, f.retrieved_id) for f in report.failures],
        )
        outputs.append("failures.csv")
    _write_run_manifest(
        args.out,
        "eval-retrieval",
        {
            "n": args.n,
            "runs": args.runs,
            "criterion": args.criterion,
            "k": args.k,
            "seed": args.seed,
            "distinct_types": args.distinct_types,
        },
        {
            "pairs": args.pairs,
            "embeddings_src": args.embeddings_src,
            "embeddings_tgt": args.embeddings_tgt,
        },
        outputs,
    )
    best = max(report.layers, key=lambda l: l.weak.mean)
    print(
        f"evaluated {len(report.layers)} layers; "
        f"best weak {best.weak.mean:.4f} at layer {best.layer}"
    )
    return 0


def cmd_eval_precision(args) -> int:
    pairs = read_pairs(args.pairs)
    gold = load_pharaoh(args.gold)
    value = precision(pairs, gold)
    os.makedirs(args.out, exist_ok=True)
    _write_json(
        os.path.join(args.out, "precision.json"),
        {"precision": value, "predicted_links": len({(p.sentence_id, p.src_pos, p.tgt_pos) for p in pairs})},
    )
    _write_run_manifest(
        args.out,
        "eval-precision",
        {},
        {"pairs": args.pairs, "gold": args.gold},
        ["precision.json"],
    )
    print(f"precision {value:.4f}")
    return 0


def cmd_distributions(args) -> int:
    pairs = read_pairs(args.pairs)
    src_set = read_embedding_set(args.embeddings_src)
    tgt_set = read_embedding_set(args.embeddings_tgt)
    external = load_pharaoh(args.external_alignments) if args.external_alignments else None
    spec = DistributionSpec(
        layer=args.layer,
        populations=tuple(args.populations.split(",")),
        bins=args.bins,
        samples=args.samples,
        seed=args.seed,
    )
    table = similarity_distributions(src_set, tgt_set, pairs, spec, external_links=external)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(
        os.path.join(args.out, "distributions.csv"),
        ("bin_low", "bin_high", "population", "count"),
        table.csv_rows(),
    )
    summary = {
        "layer": spec.layer,
        "bins": spec.bins,
        "populations": {
            p.population: {"count": p.count, "mean": p.mean, "std": p.std}
            for p in table.populations
        },
        "overlap": {
            f"{a}|{b}": table.overlap(a, b)
            for idx, a in enumerate(spec.populations)
            for b in spec.populations[idx + 1 :]
        },
        "skipped_external_links": table.skipped_external_links,
    }
    _write_json(os.path.join(args.out, "distributions_summary.json"), summary)
    _write_run_manifest(
        args.out,
        "distributions",
        {
            "layer": args.layer,
            "populations": args.populations,
            "bins": args.bins,
            "samples": args.samples,
            "seed": args.seed,
        },
        {
            "pairs": args.pairs,
            "embeddings_src": args.embeddings_src,
            "embeddings_tgt": args.embeddings_tgt,
            "external_alignments": args.external_alignments,
        },
        ["distributions.csv", "distributions_summary.json"],
    )
    print(f"histograms for {len(table.populations)} populations at layer {spec.layer}")
    return 0


def cmd_eval_sentences(args) -> int:
    src_set = read_embedding_set(args.embeddings_src)
    tgt_set = read_embedding_set(args.embeddings_tgt)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    if not args.cls_curve_only:
        config = SentenceEvalConfig(
            kind=args.kind,
            n=args.n,
            runs=args.runs,
            criterion=_criterion_from_args(args),
            seed=args.seed,
        )
        report = evaluate_sentences(src_set, tgt_set, config, workers=args.workers)
        _write_jsonl(os.path.join(args.out, "sentence_report.jsonl"), report_records(report))
        _write_csv(
            os.path.join(args.out, "sentence_report.csv"),
            ("layer", "metric", "mean", "std", "ci95"),
            report_csv_rows(report),
        )
        outputs += ["sentence_report.jsonl", "sentence_report.csv"]
    if args.cls_curve or args.cls_curve_only:
        points = cls_similarity_curve(
            src_set, tgt_set, num_random=args.num_random, seed=args.seed
        )
        _write_csv(
            os.path.join(args.out, "similarity_curve.csv"),
            ("layer", "population", "mean", "std", "ci95", "count"),
            [(p.layer, p.population, p.mean, p.std, p.ci95, p.count) for p in points],
        )
        outputs.append("similarity_curve.csv")
    _write_run_manifest(
        args.out,
        "eval-sentences",
        {
            "kind": args.kind,
            "n": args.n,
            "runs": args.runs,
            "criterion": args.criterion,
            "k": args.k,
            "seed": args.seed,
            "num_random": args.num_random,
        },
        {"embeddings_src": args.embeddings_src, "embeddings_tgt": args.embeddings_tgt},
        outputs,
    )
    print(f"wrote {', '.join(outputs)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlalign",
        description="Measure word-level multilingual alignment of contextualized representations.",
    )
    parser.add_argument("--version", action="version", version=f"xlalign {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("extract", help="extract unambiguous translated-in-context word pairs")
    p.add_argument("--src", required=True, help="source side of the parallel corpus")
    p.add_argument("--tgt", required=True, help="target side of the parallel corpus")
    p.add_argument("--dict", required=True, help="bilingual dictionary (MUSE layout)")
    p.add_argument("--src-lang", default="src")
    p.add_argument("--tgt-lang", default="tgt")
    p.add_argument("--direction", choices=("src2tgt", "tgt2src"), default="src2tgt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser(
        "pairs-from-alignments",
        help="convert Pharaoh alignment links into pair records (for dumping embeddings)",
    )
    p.add_argument("--alignments", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--src-lang", default="src")
    p.add_argument("--tgt-lang", default="tgt")
    p.add_argument("--start-id", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs_from_alignments)

    p = sub.add_parser("eval-retrieval", help="layer-wise weak and strong retrieval scores")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings-src", required=True)
    p.add_argument("--embeddings-tgt", required=True)
    p.add_argument("--criterion", choices=("cosine", "csls"), default="csls")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distinct-types", type=_bool_flag, default=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--record-failures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("eval-precision", help="precision of a pair file against gold alignments")
    p.add_argument("--pairs", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_precision)

    p = sub.add_parser("distributions", help="similarity histograms across pair populations")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings-src", required=True)
    p.add_argument("--embeddings-tgt", required=True)
    p.add_argument("--external-alignments")
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--populations", default="extracted,random_in_sentence,random_global")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distributions)

    p = sub.add_parser("eval-sentences", help="sentence-level retrieval and similarity curve")
    p.add_argument("--embeddings-src", required=True)
    p.add_argument("--embeddings-tgt", required=True)
    p.add_argument("--kind", choices=("sentence_avg", "sentence_cls"), default="sentence_avg")
    p.add_argument("--criterion", choices=("cosine", "csls"), default="csls")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cls-curve", action="store_true", help="also write the similarity curve")
    p.add_argument(
        "--cls-curve-only", action="store_true", help="write the similarity curve and skip retrieval"
    )
    p.add_argument("--num-random", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_sentences)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
