"""Frame extraction from videos, image directories, and still images."""

from __future__ import annotations

from pathlib import Path

import numpy as np

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


class DecodeError(RuntimeError):
    """The frame source could not be decoded."""


def _load_image(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except Exception as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc


def _decode_video(path: Path) -> tuple[list[np.ndarray], float]:
    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DecodeError(f"cannot open video {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame[:, :, ::-1].copy())  # BGR -> RGB
    cap.release()
    if not frames:
        raise DecodeError(f"video {path} contains no decodable frames")
    return frames, fps


def extract_frames(source, fps: float | None = None,
                   frame_count: int | None = None) -> list[np.ndarray]:
    """Frames (RGB arrays) from a video file, image directory, or image.

    Policies: fps resamples a video to that rate from its native rate;
    frame_count picks that many frames uniformly (endpoints included).
    Without a policy, every decoded frame is kept.  Image directories are
    read in sorted name order; a single image is a one-frame video.
    """
    if fps is not None and frame_count is not None:
        raise ValueError("give at most one of fps and frame_count")
    source = Path(source)
    if source.is_dir():
        paths = sorted(p for p in source.iterdir()
                       if p.suffix.lower() in IMAGE_SUFFIXES)
        if not paths:
            raise DecodeError(f"no image files under {source}")
        frames = [_load_image(p) for p in paths]
        native_fps = 1.0
    elif source.suffix.lower() in IMAGE_SUFFIXES:
        frames = [_load_image(source)]
        native_fps = 1.0
    else:
        frames, native_fps = _decode_video(source)

    if fps is not None:
        if fps <= 0:
            raise ValueError(f"fps must be > 0, got {fps}")
        native_fps = native_fps if native_fps > 0 else fps
        step = native_fps / fps
        idx = np.arange(0, len(frames), step)
        frames = [frames[int(i)] for i in idx]
    elif frame_count is not None:
        if frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {frame_count}")
        if frame_count == 1:
            idx = [int(np.rint((len(frames) - 1) / 2.0))]
        else:
            idx = [int(np.rint(j * (len(frames) - 1) / (frame_count - 1)))
                   for j in range(frame_count)]
        frames = [frames[i] for i in idx]
    return frames
