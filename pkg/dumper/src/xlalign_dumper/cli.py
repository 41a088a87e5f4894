"""CLI for dumping layer-wise embeddings."""

from __future__ import annotations

import argparse
import sys

from .dump import DumpJob, convert_fasttext, dump_embeddings
from .models import list_supported_models


def cmd_dump(args) -> int:
    job = DumpJob(
        model=args.model,
        src_path=args.src,
        tgt_path=args.tgt,
        out_path=args.out,
        src_lang=args.src_lang,
        tgt_lang=args.tgt_lang,
        kind=args.kind,
        pairs_path=args.pairs,
        masked=args.masked,
        batch_size=args.batch_size,
        device=args.device,
    )
    src_dir, tgt_dir = dump_embeddings(job)
    print(f"wrote {src_dir} and {tgt_dir}")
    return 0


def cmd_fasttext(args) -> int:
    src_dir, tgt_dir = convert_fasttext(
        args.src_vectors,
        args.tgt_vectors,
        args.pairs,
        args.out,
        src_lang=args.src_lang,
        tgt_lang=args.tgt_lang,
    )
    print(f"wrote {src_dir} and {tgt_dir}")
    return 0


def cmd_models(args) -> int:
    for info in list_supported_models():
        flags = []
        if info.uses_parallel_data:
            flags.append("parallel-data")
        if info.language_in_input:
            flags.append("language-in-input")
        if info.encoder_only:
            flags.append("encoder-only")
        suffix = f" [{', '.join(flags)}]" if flags else ""
        print(f"{info.name:12s} {info.checkpoint:32s} {info.notes}{suffix}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlalign-dump",
        description="Dump layer-wise embeddings from multilingual transformer checkpoints.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("dump", help="dump embeddings for anchored pairs or sentences")
    p.add_argument("--model", required=True, help="registry name, hub id, or local path")
    p.add_argument("--pairs", help="pair file (required for --kind word)")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--src-lang", default="src")
    p.add_argument("--tgt-lang", default="tgt")
    p.add_argument("--kind", choices=("word", "sentence_avg", "sentence_cls"), default="word")
    p.add_argument("--masked", action="store_true")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("fasttext", help="convert aligned static word vectors for a pair file")
    p.add_argument("--src-vectors", required=True)
    p.add_argument("--tgt-vectors", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--src-lang", default="src")
    p.add_argument("--tgt-lang", default="tgt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fasttext)

    p = sub.add_parser("models", help="list the supported checkpoints")
    p.set_defaults(func=cmd_models)

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
