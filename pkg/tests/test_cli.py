import json
from pathlib import Path

import numpy as np

from xlalign import make_embedding_set, read_pairs, write_embedding_set, write_pairs
from xlalign.cli import main
from xlalign.extraction import AnchoredPair

FIXTURES = Path(__file__).parent / "fixtures"


def run(argv):
    return main([str(a) for a in argv])


def write_word_sets(tmp_path, num_items, dim=6, num_layers=2, seed=0, noise=0.0, kind="word"):
    rng = np.random.default_rng(seed)
    layers_u = [rng.standard_normal((num_items, dim)).astype(np.float32) for _ in range(num_layers)]
    layers_v = [
        (np.asarray(m, dtype=np.float64) + noise * rng.standard_normal(m.shape)).astype(np.float32)
        for m in layers_u
    ]
    src = make_embedding_set(
        model="toy", src_lang="fr", tgt_lang="en", side="src", kind=kind,
        masked=False, layers=layers_u,
    )
    tgt = make_embedding_set(
        model="toy", src_lang="fr", tgt_lang="en", side="tgt", kind=kind,
        masked=False, layers=layers_v,
    )
    src_dir = tmp_path / "emb_src"
    tgt_dir = tmp_path / "emb_tgt"
    write_embedding_set(src, src_dir)
    write_embedding_set(tgt, tgt_dir)
    return src_dir, tgt_dir


def write_pair_file(tmp_path, count):
    pairs = [
        AnchoredPair(i, i, 0, 0, f"s{i}", f"t{i}", f"s{i}", f"t{i}") for i in range(count)
    ]
    path = tmp_path / "pairs.jsonl"
    write_pairs(pairs, path)
    return path


class TestExtract:
    def test_golden_output(self, tmp_path):
        out = tmp_path / "run"
        code = run([
            "extract", "--src", FIXTURES / "toy.fr", "--tgt", FIXTURES / "toy.en",
            "--dict", FIXTURES / "toy.dict", "--src-lang", "fr", "--tgt-lang", "en",
            "--out", out,
        ])
        assert code == 0
        assert (out / "pairs.jsonl").read_bytes() == (FIXTURES / "golden_pairs.jsonl").read_bytes()
        summary = json.loads((out / "extract_summary.json").read_text(encoding="utf-8"))
        assert summary["pair_count"] == 28
        manifest = json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["subcommand"] == "extract"
        assert set(manifest["inputs"]) == {"src", "tgt", "dict"}
        for entry in manifest["inputs"].values():
            assert len(entry["sha256"]) == 64

    def test_missing_dictionary(self, tmp_path, capsys):
        code = run([
            "extract", "--src", FIXTURES / "toy.fr", "--tgt", FIXTURES / "toy.en",
            "--dict", tmp_path / "nope.dict", "--out", tmp_path / "run",
        ])
        assert code != 0
        assert "error" in capsys.readouterr().err

    def test_direction_flip_on_symmetric_fixture(self, tmp_path):
        src = tmp_path / "a.x"
        tgt = tmp_path / "a.y"
        src.write_text("alpha beta\ngamma delta\n", encoding="utf-8")
        tgt.write_text("ALPHA BETA\nGAMMA DELTA\n", encoding="utf-8")
        d = tmp_path / "d.txt"
        d.write_text("alpha ALPHA\nbeta BETA\ngamma GAMMA\ndelta DELTA\n", encoding="utf-8")
        fwd = tmp_path / "fwd"
        rev = tmp_path / "rev"
        assert run(["extract", "--src", src, "--tgt", tgt, "--dict", d, "--out", fwd]) == 0
        assert run([
            "extract", "--src", src, "--tgt", tgt, "--dict", d,
            "--direction", "tgt2src", "--out", rev,
        ]) == 0
        forward = read_pairs(fwd / "pairs.jsonl")
        reverse = read_pairs(rev / "pairs.jsonl")
        # On this symmetric fixture the flipped run emits the mirrored pairs.
        assert [(p.sentence_id, p.src_pos, p.tgt_pos, p.src_word) for p in reverse] == [
            (p.sentence_id, p.tgt_pos, p.src_pos, p.tgt_word) for p in forward
        ]


class TestEvalRetrieval:
    def test_identity_dump_reports_ones(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=12, noise=0.0)
        pairs = write_pair_file(tmp_path, 12)
        out = tmp_path / "run"
        code = run([
            "eval-retrieval", "--pairs", pairs, "--embeddings-src", src_dir,
            "--embeddings-tgt", tgt_dir, "--criterion", "cosine", "--n", 8,
            "--runs", 2, "--seed", 3, "--out", out,
        ])
        assert code == 0
        records = [
            json.loads(line)
            for line in (out / "retrieval_report.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert all(rec["weak_mean"] == 1.0 for rec in records)
        csv_text = (out / "retrieval_report.csv").read_text(encoding="utf-8")
        assert csv_text.splitlines()[0] == "layer,metric,mean,std,ci95"

    def test_infeasible_n_is_an_error(self, tmp_path, capsys):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=4)
        pairs = write_pair_file(tmp_path, 4)
        code = run([
            "eval-retrieval", "--pairs", pairs, "--embeddings-src", src_dir,
            "--embeddings-tgt", tgt_dir, "--n", 10, "--runs", 1, "--out", tmp_path / "run",
        ])
        assert code == 1
        assert "maximum feasible" in capsys.readouterr().err

    def test_worker_counts_agree_byte_for_byte(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=20, noise=0.4, seed=5)
        pairs = write_pair_file(tmp_path, 20)
        outputs = {}
        for workers in (1, 2, 8):
            out = tmp_path / f"run{workers}"
            code = run([
                "eval-retrieval", "--pairs", pairs, "--embeddings-src", src_dir,
                "--embeddings-tgt", tgt_dir, "--criterion", "csls", "--k", 3,
                "--n", 15, "--runs", 3, "--seed", 42, "--workers", workers, "--out", out,
            ])
            assert code == 0
            outputs[workers] = (
                (out / "retrieval_report.jsonl").read_bytes(),
                (out / "retrieval_report.csv").read_bytes(),
            )
        assert outputs[1] == outputs[2] == outputs[8]

    def test_record_failures(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=10, noise=2.0, seed=9)
        pairs = write_pair_file(tmp_path, 10)
        out = tmp_path / "run"
        code = run([
            "eval-retrieval", "--pairs", pairs, "--embeddings-src", src_dir,
            "--embeddings-tgt", tgt_dir, "--criterion", "cosine", "--n", 8,
            "--runs", 1, "--record-failures", "--out", out,
        ])
        assert code == 0
        lines = (out / "failures.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "layer,run,metric,pair_id,retrieved_id"
        assert len(lines) > 1  # heavy noise must produce some failures


class TestEvalPrecision:
    def test_fixture_half_precision(self, tmp_path):
        pairs = [
            AnchoredPair(0, 0, 0, 0, "a", "b", "a", "b"),
            AnchoredPair(1, 0, 1, 2, "c", "d", "c", "d"),
        ]
        pair_path = tmp_path / "pairs.jsonl"
        write_pairs(pairs, pair_path)
        gold = tmp_path / "gold.txt"
        gold.write_text("0-0 1-1\n", encoding="utf-8")
        out = tmp_path / "run"
        code = run([
            "eval-precision", "--pairs", pair_path, "--gold", gold, "--out", out,
        ])
        assert code == 0
        result = json.loads((out / "precision.json").read_text(encoding="utf-8"))
        assert result["precision"] == 0.5

    def test_extracted_fixture_perfect_precision(self, tmp_path):
        out_extract = tmp_path / "extract"
        run([
            "extract", "--src", FIXTURES / "toy.fr", "--tgt", FIXTURES / "toy.en",
            "--dict", FIXTURES / "toy.dict", "--out", out_extract,
        ])
        out = tmp_path / "prec"
        code = run([
            "eval-precision", "--pairs", out_extract / "pairs.jsonl",
            "--gold", FIXTURES / "toy.gold", "--out", out,
        ])
        assert code == 0
        result = json.loads((out / "precision.json").read_text(encoding="utf-8"))
        assert result["precision"] == 1.0


class TestDistributions:
    def test_identity_dump_single_bin(self, tmp_path):
        src_dir, _ = write_word_sets(tmp_path, num_items=10)
        pairs = write_pair_file(tmp_path, 10)
        out = tmp_path / "run"
        code = run([
            "distributions", "--pairs", pairs, "--embeddings-src", src_dir,
            "--embeddings-tgt", src_dir, "--layer", 0, "--bins", 10,
            "--populations", "extracted", "--samples", 10, "--out", out,
        ])
        assert code == 0
        rows = (out / "distributions.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "bin_low,bin_high,population,count"
        counts = [int(r.rsplit(",", 1)[1]) for r in rows[1:]]
        assert sum(1 for c in counts if c > 0) == 1

    def test_population_without_inputs(self, tmp_path, capsys):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=6)
        pairs = write_pair_file(tmp_path, 6)
        code = run([
            "distributions", "--pairs", pairs, "--embeddings-src", src_dir,
            "--embeddings-tgt", tgt_dir, "--layer", 0, "--populations", "external",
            "--out", tmp_path / "run",
        ])
        assert code == 1
        assert "external" in capsys.readouterr().err


class TestEvalSentences:
    def test_identity_sentences(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=10, kind="sentence_avg")
        out = tmp_path / "run"
        code = run([
            "eval-sentences", "--embeddings-src", src_dir, "--embeddings-tgt", tgt_dir,
            "--kind", "sentence_avg", "--criterion", "cosine", "--n", 8, "--runs", 2,
            "--out", out,
        ])
        assert code == 0
        records = [
            json.loads(line)
            for line in (out / "sentence_report.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert all(rec["weak_mean"] == 1.0 for rec in records)
        assert all("strong_mean" not in rec for rec in records)

    def test_cls_curve(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=10, kind="sentence_cls")
        out = tmp_path / "run"
        code = run([
            "eval-sentences", "--embeddings-src", src_dir, "--embeddings-tgt", tgt_dir,
            "--kind", "sentence_cls", "--cls-curve-only", "--num-random", 5, "--out", out,
        ])
        assert code == 0
        lines = (out / "similarity_curve.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "layer,population,mean,std,ci95,count"
        assert len(lines) == 1 + 2 * 2  # 2 layers x 2 populations

    def test_kind_mismatch_is_an_error(self, tmp_path, capsys):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=6, kind="sentence_cls")
        code = run([
            "eval-sentences", "--embeddings-src", src_dir, "--embeddings-tgt", tgt_dir,
            "--kind", "sentence_avg", "--n", 4, "--runs", 1, "--out", tmp_path / "run",
        ])
        assert code == 1
        assert "sentence_cls" in capsys.readouterr().err


class TestSentenceWordAgreement:
    def test_single_word_sentences_match_word_eval_via_cli(self, tmp_path):
        # One-word sentences: the sentence average IS the word vector, so
        # both subcommands must report identical weak scores when sampling
        # exhaustively.
        rng = np.random.default_rng(6)
        num = 12
        layers_u = [rng.standard_normal((num, 5)).astype(np.float32) for _ in range(2)]
        layers_v = [
            (np.asarray(m, dtype=np.float64) + 0.4 * rng.standard_normal(m.shape)).astype(
                np.float32
            )
            for m in layers_u
        ]
        for kind, prefix in (("word", "w"), ("sentence_avg", "s")):
            src = make_embedding_set(
                model="toy", src_lang="fr", tgt_lang="en", side="src", kind=kind,
                masked=False, layers=layers_u,
            )
            tgt = make_embedding_set(
                model="toy", src_lang="fr", tgt_lang="en", side="tgt", kind=kind,
                masked=False, layers=layers_v,
            )
            write_embedding_set(src, tmp_path / f"{prefix}_src")
            write_embedding_set(tgt, tmp_path / f"{prefix}_tgt")
        pairs = write_pair_file(tmp_path, num)
        word_out = tmp_path / "word_run"
        sent_out = tmp_path / "sent_run"
        assert run([
            "eval-retrieval", "--pairs", pairs, "--embeddings-src", tmp_path / "w_src",
            "--embeddings-tgt", tmp_path / "w_tgt", "--criterion", "csls", "--k", 3,
            "--n", num, "--runs", 2, "--seed", 5, "--out", word_out,
        ]) == 0
        assert run([
            "eval-sentences", "--embeddings-src", tmp_path / "s_src",
            "--embeddings-tgt", tmp_path / "s_tgt", "--kind", "sentence_avg",
            "--criterion", "csls", "--k", 3, "--n", num, "--runs", 2, "--seed", 5,
            "--out", sent_out,
        ]) == 0
        word_rows = [
            line for line in (word_out / "retrieval_report.csv").read_text().splitlines()[1:]
            if line.split(",")[1] == "weak"
        ]
        sent_rows = (sent_out / "sentence_report.csv").read_text().splitlines()[1:]
        assert word_rows == sent_rows


class TestPairsFromAlignments:
    def test_conversion(self, tmp_path):
        out = tmp_path / "run"
        code = run([
            "pairs-from-alignments", "--alignments", FIXTURES / "toy.gold",
            "--src", FIXTURES / "toy.fr", "--tgt", FIXTURES / "toy.en", "--out", out,
        ])
        assert code == 0
        pairs = read_pairs(out / "pairs.jsonl")
        assert pairs[0].pair_id == 0
        assert len(pairs) > 20


class TestSeedReproducibility:
    def test_same_seed_same_reports(self, tmp_path):
        src_dir, tgt_dir = write_word_sets(tmp_path, num_items=15, noise=0.5, seed=2)
        pairs = write_pair_file(tmp_path, 15)
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run([
                "eval-retrieval", "--pairs", pairs, "--embeddings-src", src_dir,
                "--embeddings-tgt", tgt_dir, "--n", 10, "--runs", 2, "--k", 3,
                "--seed", 7, "--out", out,
            ])
            blobs.append((out / "retrieval_report.jsonl").read_bytes())
        assert blobs[0] == blobs[1]
