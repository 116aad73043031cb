"""Export commands bridging raw corpora into the captioning engine.

    sgcap-export text-bank   captions.txt -> bank.sgcb
    sgcap-export video-frames clip.mp4    -> clip.sgcf

Outputs are byte-compatible with the engine's build-bank/validate/infer
commands.  Exit codes: 0 success, 1 usage error, 2 source decode or
encoder/tagger load failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .encoders import EncoderLoadError, make_encoder
from .formats import write_bank, write_frames
from .frames import DecodeError, extract_frames
from .tagging import TaggerLoadError, make_tagger

VIDEO_SUFFIXES = {".avi", ".mp4", ".mov", ".mkv", ".webm"}


def _read_captions(path: Path) -> list[str]:
    lines = [l.strip() for l in path.read_text(encoding="utf-8").splitlines()]
    captions = [l for l in lines if l]
    if not captions:
        raise ValueError(f"{path}: no captions found")
    return captions


def _cmd_text_bank(args) -> int:
    captions = _read_captions(args.captions)
    text_encoder, _ = make_encoder(args.encoder, dim=args.dim,
                                   clip_model=args.clip_model)
    tagger = make_tagger(args.tagger)
    embeddings = text_encoder.encode_texts(captions)
    records = [(text, tagger.token_set(text), embeddings[i])
               for i, text in enumerate(captions)]
    write_bank(records, args.output)
    print(f"wrote {len(records)} records (dim {embeddings.shape[1]}) "
          f"-> {args.output}")
    return 0


def _cmd_video_frames(args) -> int:
    _, image_encoder = make_encoder(args.encoder, dim=args.dim,
                                    clip_model=args.clip_model)
    sources = [args.source]
    if args.source.is_dir():
        videos = sorted(p for p in args.source.iterdir()
                        if p.suffix.lower() in VIDEO_SUFFIXES)
        if videos:
            sources = videos
    outputs = []
    for source in sources:
        frames = extract_frames(source, fps=args.fps,
                                frame_count=args.frame_count)
        embeddings = image_encoder.encode_images(frames)
        video_id = args.video_id or source.stem
        if len(sources) > 1:
            out = Path(args.output) / f"{source.stem}.sgcf"
            out.parent.mkdir(parents=True, exist_ok=True)
            video_id = source.stem
        else:
            out = Path(args.output)
        write_frames(video_id, embeddings, out)
        outputs.append(out)
        print(f"wrote {embeddings.shape[0]} frame embeddings "
              f"(dim {embeddings.shape[1]}) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgcap-export", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_encoder_flags(p):
        p.add_argument("--encoder", default="clip-vit-b32",
                       choices=["clip-vit-b32", "hashed"],
                       help="dual-encoder backend (default: the "
                            "512-dimensional pretrained model)")
        p.add_argument("--dim", type=int, default=512,
                       help="embedding width for the hashed backend")
        p.add_argument("--clip-model", default=None,
                       help="name or local path of the pretrained weights")

    p = sub.add_parser("text-bank",
                       help="encode a caption file (one per line) into SGCB")
    p.add_argument("captions", type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--tagger", default="rule", choices=["rule", "nltk"])
    add_encoder_flags(p)
    p.set_defaults(func=_cmd_text_bank)

    p = sub.add_parser("video-frames",
                       help="encode a video/image source into SGCF")
    p.add_argument("source", type=Path,
                   help="video file, image file, or directory")
    p.add_argument("--output", required=True, type=Path,
                   help="output .sgcf path (directory when the source is a "
                        "directory of videos)")
    p.add_argument("--fps", type=float, default=None,
                   help="resample the video to this frame rate")
    p.add_argument("--frame-count", type=int, default=None,
                   help="keep exactly this many uniformly spaced frames")
    p.add_argument("--video-id", default=None,
                   help="identifier stored in the file (default: file stem)")
    add_encoder_flags(p)
    p.set_defaults(func=_cmd_video_frames)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (EncoderLoadError, TaggerLoadError, DecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
