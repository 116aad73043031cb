"""Command-line entry points.

Subcommands: build-bank, synth-corpus, train, infer, eval,
analyze-variance, validate.  Every run echoes its fully resolved
configuration as the first output line, and identical flags plus seeds
produce byte-identical outputs.

Exit codes: 0 success, 1 usage/config error, 2 data-format error,
3 numerical failure.

The global seed falls back to the SGCAP_SEED environment variable when a
command takes --seed and none is given.  --config points at a key = value
text file supplying flag defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bank as bank_mod
from . import inference as inf_mod
from . import metrics as metrics_mod
from .errors import FormatError, NumericalError
from .model import load_checkpoint, save_checkpoint
from .synth import generate_corpus, heuristic_token_set
from .training import TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    """Usage-level failure that maps to exit code 1."""


def _default_seed() -> int:
    env = os.environ.get("SGCAP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"SGCAP_SEED must be an integer, got {env!r}") from exc


def _read_config_file(path) -> dict[str, str]:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _suppress_defaults(parser: argparse.ArgumentParser) -> None:
    """Stash every flag default and suppress it at parse time, so explicit
    flags are distinguishable from defaults (needed for --config layering)."""
    for action in parser._actions:
        if action.dest in ("help", "command"):
            continue
        action.true_default = action.default
        action.default = argparse.SUPPRESS


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge built-in defaults, --config file values, and explicit flags
    (flags win over the file; the file wins over built-ins)."""
    file_cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for action in parser._actions:
        if action.dest in ("help", "command", "config", "subparser", "func"):
            continue
        if hasattr(args, action.dest):
            value = getattr(args, action.dest)
        elif action.dest in file_cfg:
            raw = file_cfg[action.dest]
            if action.type is not None:
                value = action.type(raw)
            elif isinstance(action.const, bool):
                value = raw.lower() in ("1", "true", "yes")
            else:
                value = raw
        else:
            value = action.true_default
        resolved[action.dest] = value
    if "seed" in resolved and resolved["seed"] is None:
        resolved["seed"] = _default_seed()
    return resolved


def _echo_config(command: str, cfg: dict) -> None:
    printable = {k: (v if not isinstance(v, Path) else str(v))
                 for k, v in cfg.items()}
    print(f"config {json.dumps({'command': command, **printable}, sort_keys=True, default=str)}")


def _read_corpus_jsonl(path, heuristic_tags: bool):
    corpus = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read corpus {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            text = rec["text"]
            embedding = np.asarray(rec["embedding"], dtype=np.float32)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad corpus record: {exc}") from exc
        if heuristic_tags or "tokens" not in rec:
            tokens = heuristic_token_set(text)
        else:
            tokens = frozenset(rec["tokens"])
        corpus.append((text, tokens, embedding))
    if not corpus:
        raise FormatError(f"{path}: corpus file has no records")
    return corpus


def _read_id_text_jsonl(path) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            table.setdefault(str(rec["video_id"]), []).append(str(rec["text"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad record: {exc}") from exc
    if not table:
        raise FormatError(f"{path}: no records")
    return table


# -------------------------- subcommands --------------------------


def _cmd_build_bank(cfg) -> int:
    corpus = _read_corpus_jsonl(cfg["input"], cfg["heuristic_tags"])
    the_bank = bank_mod.build_bank(corpus)
    bank_mod.save_bank(the_bank, cfg["output"])
    print(f"wrote bank: {len(the_bank)} records, dim {the_bank.dim} -> {cfg['output']}")
    return EXIT_OK


def _cmd_synth_corpus(cfg) -> int:
    corpus = generate_corpus(size=cfg["size"], dim=cfg["dim"],
                             templates=cfg["templates"], seed=cfg["seed"],
                             n_frames=cfg["frames"],
                             sentence_noise=cfg["sentence_noise"],
                             frame_noise=cfg["frame_noise"],
                             frame_drift=cfg["frame_drift"])
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    frames_dir = out / "frames"
    frames_dir.mkdir(exist_ok=True)
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for text, tokens, emb in corpus.records:
            fh.write(json.dumps({"text": text, "tokens": sorted(tokens),
                                 "embedding": [float(x) for x in emb]},
                                sort_keys=True) + "\n")
    with open(out / "references.jsonl", "w", encoding="utf-8") as fh:
        for video in corpus.videos:
            for text in corpus.references[video.video_id]:
                fh.write(json.dumps({"video_id": video.video_id, "text": text},
                                    sort_keys=True) + "\n")
    for video in corpus.videos:
        inf_mod.save_frames(video, frames_dir / f"{video.video_id}.sgcf")
    print(f"wrote {len(corpus.records)} records and {len(corpus.videos)} "
          f"frame files under {out}")
    return EXIT_OK


def _cmd_train(cfg) -> int:
    the_bank = bank_mod.load_bank(cfg["bank"])
    config = TrainConfig(
        sigma=cfg["sigma"], lam=cfg["lam"], k=cfg["k"],
        noise_mode=cfg["noise"], loss_mode=cfg["loss_mode"],
        learning_rate=cfg["lr"], batch_size=cfg["batch_size"],
        max_epochs=cfg["max_epochs"], early_stop_patience=cfg["patience"],
        seed=cfg["seed"], d_model=cfg["d_model"], n_layers=cfg["n_layers"],
        n_heads=cfg["n_heads"], ffn_dim=cfg["ffn_dim"],
        fusion_ffn_dim=cfg["fusion_ffn_dim"], max_len=cfg["max_len"],
        vocab_min_count=cfg["vocab_min_count"], holdout_frac=cfg["holdout"],
        exclude_self=not cfg["no_exclude_self"], grad_clip=cfg["grad_clip"])
    result = train(the_bank, config)
    save_checkpoint(cfg["output"], result.params, result.vocab)
    if cfg["log"]:
        with open(cfg["log"], "w", encoding="utf-8") as fh:
            for rec in result.log:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"trained {result.epochs_run} epochs: first-batch loss "
          f"{result.initial_loss:.6f}, final {result.final_loss:.6f} "
          f"-> {cfg['output']}")
    return EXIT_OK


def _iter_frame_files(path: Path):
    if path.is_dir():
        yield from sorted(path.glob("*.sgcf"))
    else:
        yield path


def _cmd_infer(cfg) -> int:
    the_bank = bank_mod.load_bank(cfg["bank"])
    params, vocab = load_checkpoint(cfg["model"])
    if vocab is None:
        raise FormatError(f"{cfg['model']}: checkpoint stores no vocabulary; "
                          "cannot decode captions")
    lines = []
    for frame_path in _iter_frame_files(Path(cfg["frames"])):
        frames = inf_mod.load_frames(frame_path)
        hyps = inf_mod.generate(frames, the_bank, params, k=cfg["k"],
                                tau=cfg["tau"], beam_size=cfg["beam_size"],
                                max_len=cfg["max_len"])
        best = hyps[0]
        lines.append(json.dumps(
            {"video_id": frames.video_id, "text": vocab.decode(best.tokens),
             "normalized_log_prob": best.normalized_score},
            sort_keys=True))
    payload = "\n".join(lines) + "\n"
    if cfg["output"]:
        Path(cfg["output"]).write_text(payload, encoding="utf-8")
        print(f"wrote {len(lines)} captions -> {cfg['output']}")
    else:
        sys.stdout.write(payload)
    return EXIT_OK


_METRIC_CHOICES = ("bleu1", "bleu2", "bleu3", "bleu4", "rougeL", "ciderD")


def _cmd_eval(cfg) -> int:
    candidates = _read_id_text_jsonl(cfg["candidates"])
    references = _read_id_text_jsonl(cfg["references"])
    missing = sorted(set(candidates) - set(references))
    if missing:
        raise FormatError(f"no references for video ids: {missing[:5]}")
    pairs = []
    for vid in sorted(candidates):
        for cand in candidates[vid]:
            pairs.append(metrics_mod.EvalPair.from_texts(cand, references[vid]))
    names = [m.strip() for m in cfg["metrics"].split(",") if m.strip()]
    for name in names:
        if name not in _METRIC_CHOICES:
            raise UsageError(
                f"unknown metric {name!r}; choose from {', '.join(_METRIC_CHOICES)}")
    for name in names:
        if name.startswith("bleu"):
            value = metrics_mod.bleu(pairs, n=int(name[-1]))
        elif name == "rougeL":
            value = metrics_mod.rouge_l(pairs)
        else:
            value = metrics_mod.cider_d(pairs)
        print(f"{name} {value:.6f}")
    return EXIT_OK


def _cmd_analyze_variance(cfg) -> int:
    the_bank = bank_mod.load_bank(cfg["bank"])
    stats = bank_mod.compute_stats(the_bank)
    d_e = bank_mod.effective_dimension(stats, cfg["gamma"])
    print(f"effective_dimension {d_e} (gamma {cfg['gamma']}, dim {the_bank.dim})")
    print("dim variance stddev")
    for j in range(the_bank.dim):
        print(f"{j} {stats.variance[j]:.8f} {np.sqrt(stats.variance[j]):.8f}")
    return EXIT_OK


def _cmd_validate(cfg) -> int:
    path = Path(cfg["path"])
    try:
        head = path.open("rb").read(4)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if head == bank_mod.BANK_MAGIC:
        the_bank = bank_mod.load_bank(path)
        stats = bank_mod.compute_stats(the_bank)
        print(f"valid bank: {len(the_bank)} records, dim {the_bank.dim}, "
              f"mean variance {float(np.mean(stats.variance)):.6f}")
    elif head == inf_mod.FRAMES_MAGIC:
        frames = inf_mod.load_frames(path)
        print(f"valid frames: video {frames.video_id}, {len(frames)} frames, "
              f"dim {frames.dim}")
    else:
        raise FormatError(f"{path}: unknown magic {head!r}")
    return EXIT_OK


# -------------------------- wiring --------------------------


def _add_config_flag(p):
    p.add_argument("--config", type=Path, default=None,
                   help="key = value file supplying flag defaults")


def build_parser() -> _Parser:
    parser = _Parser(prog="sgcap", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-bank", help="corpus JSONL -> SGCB bank file")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--heuristic-tags", action="store_true", default=False,
                   help="derive token sets heuristically even when present")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_build_bank, subparser=p)

    p = sub.add_parser("synth-corpus", help="generate a synthetic corpus + videos")
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--templates", type=int, default=25)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--sentence-noise", type=float, default=0.15)
    p.add_argument("--frame-noise", type=float, default=0.2)
    p.add_argument("--frame-drift", type=float, default=0.4)
    p.add_argument("--output-dir", required=True, type=Path)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_synth_corpus, subparser=p)

    p = sub.add_parser("train", help="train on an SGCB bank")
    p.add_argument("--bank", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--log", type=Path, default=None,
                   help="write per-batch JSONL training log here")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--noise", default="element",
                   choices=["none", "standard", "scalar", "element"])
    p.add_argument("--loss-mode", default="mixture",
                   choices=["mixture", "sampled"])
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--d-model", type=int, default=None,
                   help="defaults to the bank embedding dimension")
    p.add_argument("--n-layers", type=int, default=2)
    p.add_argument("--n-heads", type=int, default=4)
    p.add_argument("--ffn-dim", type=int, default=256)
    p.add_argument("--fusion-ffn-dim", type=int, default=256)
    p.add_argument("--max-len", type=int, default=30)
    p.add_argument("--vocab-min-count", type=int, default=1)
    p.add_argument("--holdout", type=float, default=0.05)
    p.add_argument("--no-exclude-self", action="store_true", default=False)
    p.add_argument("--grad-clip", type=float, default=None)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_train, subparser=p)

    p = sub.add_parser("infer", help="caption SGCF frame files")
    p.add_argument("--bank", required=True, type=Path)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--frames", required=True, type=Path,
                   help="one .sgcf file or a directory of them")
    p.add_argument("--output", type=Path, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--beam-size", type=int, default=5)
    p.add_argument("--max-len", type=int, default=30)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_infer, subparser=p)

    p = sub.add_parser("eval", help="score candidate captions against references")
    p.add_argument("--candidates", required=True, type=Path)
    p.add_argument("--references", required=True, type=Path)
    p.add_argument("--metrics", default="bleu1,bleu4,rougeL,ciderD")
    _add_config_flag(p)
    p.set_defaults(func=_cmd_eval, subparser=p)

    p = sub.add_parser("analyze-variance",
                       help="effective dimension and per-dimension variance")
    p.add_argument("--bank", required=True, type=Path)
    p.add_argument("--gamma", type=float, default=0.9)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_analyze_variance, subparser=p)

    p = sub.add_parser("validate", help="check an SGCB or SGCF file")
    p.add_argument("--path", required=True, type=Path)
    _add_config_flag(p)
    p.set_defaults(func=_cmd_validate, subparser=p)

    for command in sub.choices.values():
        _suppress_defaults(command)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args, args.subparser)
        _echo_config(args.command, cfg)
        return args.func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
