import subprocess
import sys

import numpy as np
import pytest


def run_engine(*args):
    """Invoke the captioning engine CLI (the consumer of our outputs)."""
    proc = subprocess.run([sys.executable, "-m", "sgcap.cli", *map(str, args)],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def run_export(*args):
    from sgcap_exporter.cli import main
    return main([str(a) for a in args])


@pytest.fixture
def sample_captions(tmp_path):
    captions = [
        "a man plays a guitar on stage",
        "a woman rides a bicycle in the park",
        "two dogs run across a field",
        "a chef cooks pasta in a kitchen",
        "children throw a ball outside",
        "a pilot flies a small plane",
        "a girl paints a bright mural",
        "a band performs at a festival",
        "a farmer drives an old tractor",
        "a cat sleeps on a warm sofa",
    ]
    path = tmp_path / "captions.txt"
    path.write_text("\n".join(captions) + "\n", encoding="utf-8")
    return path, captions


@pytest.fixture
def short_clip(tmp_path):
    """A small MJPG AVI clip with a moving gradient, 10 frames at 5 fps."""
    import cv2

    path = tmp_path / "clip.avi"
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"),
                             5.0, (64, 48))
    assert writer.isOpened()
    base = np.linspace(0, 255, 64, dtype=np.uint8)
    for t in range(10):
        frame = np.zeros((48, 64, 3), dtype=np.uint8)
        frame[:, :, 0] = np.roll(base, 6 * t)[None, :]
        frame[:, :, 1] = 40 + 10 * t
        frame[:, :, 2] = 255 - 20 * t
        writer.write(frame)
    writer.release()
    return path
