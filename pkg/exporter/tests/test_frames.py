import numpy as np
import pytest
from PIL import Image

from sgcap_exporter.frames import DecodeError, extract_frames


def test_video_all_frames(short_clip):
    frames = extract_frames(short_clip)
    assert len(frames) == 10
    assert frames[0].shape == (48, 64, 3)


def test_video_fps_policy(short_clip):
    # 10 frames at native 5 fps = 2 seconds; 1 frame/sec -> 2 frames
    assert len(extract_frames(short_clip, fps=1.0)) == 2
    # resampling at the native rate keeps everything
    assert len(extract_frames(short_clip, fps=5.0)) == 10


def test_video_frame_count_policy(short_clip):
    frames = extract_frames(short_clip, frame_count=4)
    assert len(frames) == 4
    single = extract_frames(short_clip, frame_count=1)
    assert len(single) == 1


def test_policies_mutually_exclusive(short_clip):
    with pytest.raises(ValueError):
        extract_frames(short_clip, fps=1.0, frame_count=3)


def test_still_image_is_single_frame(tmp_path):
    path = tmp_path / "still.png"
    Image.fromarray(np.full((20, 30, 3), 90, dtype=np.uint8)).save(path)
    frames = extract_frames(path)
    assert len(frames) == 1
    assert frames[0].shape == (20, 30, 3)


def test_image_directory_sorted(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    for i, val in enumerate([10, 120, 240]):
        Image.fromarray(np.full((8, 8, 3), val, dtype=np.uint8)).save(
            d / f"f{i}.png")
    frames = extract_frames(d)
    assert len(frames) == 3
    assert [int(f[0, 0, 0]) for f in frames] == [10, 120, 240]


def test_missing_video_raises(tmp_path):
    with pytest.raises(DecodeError):
        extract_frames(tmp_path / "nope.avi")


def test_empty_image_dir_raises(tmp_path):
    d = tmp_path / "empty"
    d.mkdir()
    with pytest.raises(DecodeError):
        extract_frames(d)
