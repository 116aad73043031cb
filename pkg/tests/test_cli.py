import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sgcap.bank import load_bank
from sgcap.cli import main
from sgcap.inference import load_frames


def run_cli(*args, env_seed=None):
    """Invoke the CLI in a subprocess; returns (exit code, stdout, stderr)."""
    env = dict(os.environ)
    env.pop("SGCAP_SEED", None)
    if env_seed is not None:
        env["SGCAP_SEED"] = str(env_seed)
    proc = subprocess.run([sys.executable, "-m", "sgcap.cli", *map(str, args)],
                          capture_output=True, text=True, env=env)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = main(["synth-corpus", "--size", "30", "--dim", "8", "--templates",
                 "6", "--seed", "5", "--frames", "4", "--output-dir", str(out)])
    assert code == 0
    return out


def test_config_echo_first_line(synth_dir, capsys):
    code = main(["validate", "--path", str(synth_dir / "corpus.jsonl")])
    out = capsys.readouterr().out
    assert out.startswith("config ")
    assert code == 2  # jsonl is not a binary artifact


class TestSynthCorpus:
    def test_outputs_exist(self, synth_dir):
        assert (synth_dir / "corpus.jsonl").exists()
        assert (synth_dir / "references.jsonl").exists()
        frames = sorted((synth_dir / "frames").glob("*.sgcf"))
        assert len(frames) == 30

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["synth-corpus", "--size", "12", "--dim", "6",
                         "--seed", "9", "--output-dir", str(out)]) == 0
        assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()
        fa = sorted((a / "frames").glob("*.sgcf"))
        fb = sorted((b / "frames").glob("*.sgcf"))
        assert [f.read_bytes() for f in fa] == [f.read_bytes() for f in fb]

    def test_pooled_frames_match_own_sentence(self):
        """By construction the video points at its ground-truth sentence:
        pooled frames beat 95% of the other sentences on cosine."""
        from sgcap.inference import pool_frames
        from sgcap.synth import generate_corpus
        corpus = generate_corpus(size=200, dim=32, seed=5)
        embs = np.array([r[2] for r in corpus.records], dtype=np.float64)
        embs /= np.linalg.norm(embs, axis=1, keepdims=True)
        for i, video in enumerate(corpus.videos):
            pooled = pool_frames(video)
            pooled /= np.linalg.norm(pooled)
            sims = embs @ pooled
            assert np.sum(sims > sims[i]) <= 0.05 * (len(corpus.records) - 1)


class TestBuildBank:
    def test_round_trip(self, synth_dir, tmp_path):
        bank_path = tmp_path / "bank.sgcb"
        code = main(["build-bank", "--input", str(synth_dir / "corpus.jsonl"),
                     "--output", str(bank_path)])
        assert code == 0
        bank = load_bank(bank_path)
        assert len(bank) == 30
        code = main(["validate", "--path", str(bank_path)])
        assert code == 0

    def test_empty_corpus_fails(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(["build-bank", "--input", str(empty),
                     "--output", str(tmp_path / "b.sgcb")])
        assert code == 2

    def test_parse_error_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"text": "ok", "embedding": [1.0]}\nnot json\n')
        code = main(["build-bank", "--input", str(bad),
                     "--output", str(tmp_path / "b.sgcb")])
        err = capsys.readouterr().err
        assert code == 2
        assert ":2:" in err


class TestExitCodes:
    def test_unknown_flag_exits_one(self):
        code, _, _ = run_cli("eval", "--nope", "x")
        assert code == 1

    def test_usage_error_exits_one(self, tmp_path):
        code, _, err = run_cli("analyze-variance", "--bank",
                               tmp_path / "missing.sgcb", "--gamma", "2.0")
        assert code == 1

    def test_format_error_exits_two(self, tmp_path):
        bad = tmp_path / "bad.sgcb"
        bad.write_bytes(b"JUNKJUNKJUNK")
        code, _, _ = run_cli("analyze-variance", "--bank", bad)
        assert code == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory, synth_dir):
    root = tmp_path_factory.mktemp("pipe")
    bank_path = root / "bank.sgcb"
    model_path = root / "model.sgcm"
    log_path = root / "train.jsonl"
    assert main(["build-bank", "--input", str(synth_dir / "corpus.jsonl"),
                 "--output", str(bank_path)]) == 0
    code = main(["train", "--bank", str(bank_path), "--output",
                 str(model_path), "--log", str(log_path), "--k", "2",
                 "--max-epochs", "2", "--batch-size", "8", "--lr", "1e-3",
                 "--n-layers", "1", "--n-heads", "2", "--ffn-dim", "32",
                 "--fusion-ffn-dim", "32", "--seed", "3"])
    assert code == 0
    return root, bank_path, model_path, log_path


class TestPipeline:
    def test_train_writes_log(self, trained):
        _, _, _, log_path = trained
        records = [json.loads(l) for l in log_path.read_text().splitlines()]
        assert records
        assert {"epoch", "batch", "loss", "held_out"} == set(records[0])

    def test_infer_and_eval(self, trained, synth_dir, tmp_path):
        _, bank_path, model_path, _ = trained
        captions = tmp_path / "captions.jsonl"
        code = main(["infer", "--bank", str(bank_path), "--model",
                     str(model_path), "--frames", str(synth_dir / "frames"),
                     "--k", "2", "--beam-size", "2", "--output", str(captions)])
        assert code == 0
        lines = [json.loads(l) for l in captions.read_text().splitlines()]
        assert len(lines) == 30
        assert all(set(l) == {"video_id", "text", "normalized_log_prob"}
                   for l in lines)
        code = main(["eval", "--candidates", str(captions), "--references",
                     str(synth_dir / "references.jsonl"),
                     "--metrics", "bleu1,rougeL"])
        assert code == 0

    def test_eval_identity_scores_one(self, synth_dir, capsys):
        refs = synth_dir / "references.jsonl"
        code = main(["eval", "--candidates", str(refs), "--references",
                     str(refs), "--metrics", "bleu1,bleu4,rougeL"])
        out = capsys.readouterr().out
        assert code == 0
        scores = dict(line.split() for line in out.splitlines()[1:])
        assert float(scores["bleu1"]) == pytest.approx(1.0)
        assert float(scores["bleu4"]) == pytest.approx(1.0)
        assert float(scores["rougeL"]) == pytest.approx(1.0)

    def test_degenerate_baseline_runs(self, trained, tmp_path):
        _, bank_path, _, _ = trained
        out = tmp_path / "baseline.sgcm"
        code = main(["train", "--bank", str(bank_path), "--output", str(out),
                     "--k", "0", "--noise", "none", "--max-epochs", "1",
                     "--batch-size", "8", "--n-layers", "1", "--n-heads", "2",
                     "--ffn-dim", "16", "--fusion-ffn-dim", "16"])
        assert code == 0

    def test_analyze_variance(self, trained, capsys):
        _, bank_path, _, _ = trained
        code = main(["analyze-variance", "--bank", str(bank_path),
                     "--gamma", "0.9"])
        out = capsys.readouterr().out
        assert code == 0
        assert "effective_dimension" in out
        # per-dimension table: header + one row per dimension
        rows = [l for l in out.splitlines() if l and l[0].isdigit()]
        assert len(rows) == 8


class TestConfigResolution:
    def test_config_file_supplies_defaults_flags_win(self, synth_dir, tmp_path,
                                                     capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text("gamma = 0.7\n")
        bank_path = tmp_path / "bank.sgcb"
        main(["build-bank", "--input", str(synth_dir / "corpus.jsonl"),
              "--output", str(bank_path)])
        capsys.readouterr()
        code = main(["analyze-variance", "--bank", str(bank_path),
                     "--config", str(cfg)])
        out = capsys.readouterr().out
        assert code == 0
        assert '"gamma": 0.7' in out.splitlines()[0]
        code = main(["analyze-variance", "--bank", str(bank_path),
                     "--config", str(cfg), "--gamma", "0.5"])
        out = capsys.readouterr().out
        assert '"gamma": 0.5' in out.splitlines()[0]

    def test_env_seed_fallback(self, tmp_path):
        code, out, _ = run_cli("synth-corpus", "--size", "4", "--dim", "4",
                               "--output-dir", tmp_path / "s", env_seed=77)
        assert code == 0
        first = out.splitlines()[0]
        assert '"seed": 77' in first

    def test_byte_identical_outputs(self, tmp_path):
        outs = []
        for name in ("x", "y"):
            code, _, _ = run_cli("synth-corpus", "--size", "6", "--dim", "4",
                                 "--seed", "2", "--output-dir", tmp_path / name)
            assert code == 0
            outs.append((tmp_path / name / "corpus.jsonl").read_bytes())
        assert outs[0] == outs[1]
