"""IDX parsing, cropping and the malformed-input corpus."""
import struct

import numpy as np
import pytest

from xbarsim.mnist import (IdxFormatError, crop_center, load_dataset,
                           parse_idx_images, parse_idx_labels,
                           write_idx_images, write_idx_labels)


def image_bytes(count=3, rows=28, cols=28, fill=None):
    header = struct.pack(">IIII", 0x00000803, count, rows, cols)
    if fill is None:
        rng = np.random.default_rng(0)
        payload = rng.integers(0, 256, size=count * rows * cols, dtype=np.uint8)
    else:
        payload = np.full(count * rows * cols, fill, dtype=np.uint8)
    return header + payload.tobytes()


def label_bytes(labels):
    arr = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", 0x00000801, len(arr)) + arr.tobytes()


def test_parse_images_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    imgs = rng.integers(0, 256, size=(5, 28, 28), dtype=np.uint8)
    path = tmp_path / "imgs"
    write_idx_images(imgs, path)
    parsed = parse_idx_images(path.read_bytes())
    assert parsed.shape == (5, 28, 28)
    assert np.array_equal(np.round(parsed * 255).astype(np.uint8), imgs)


def test_parse_labels_roundtrip(tmp_path):
    path = tmp_path / "lbls"
    write_idx_labels([3, 1, 4, 1, 5], path)
    assert np.array_equal(parse_idx_labels(path.read_bytes()),
                          [3, 1, 4, 1, 5])


def test_pixel_scaling():
    parsed = parse_idx_images(image_bytes(count=1, fill=0xFF))
    assert parsed.max() == 1.0
    assert parse_idx_images(image_bytes(count=1, fill=0)).min() == 0.0


def test_wrong_magic_reports_offset_zero():
    data = label_bytes([1, 2])  # label magic fed to the image parser
    with pytest.raises(IdxFormatError) as err:
        parse_idx_images(data)
    assert err.value.offset == 0
    with pytest.raises(IdxFormatError) as err:
        parse_idx_labels(image_bytes())
    assert err.value.offset == 0


def test_truncated_payload_reports_end_offset():
    data = image_bytes(count=2)[:-10]
    with pytest.raises(IdxFormatError) as err:
        parse_idx_images(data)
    assert err.value.offset == len(data)


def test_truncated_header():
    with pytest.raises(IdxFormatError):
        parse_idx_images(b"\x00\x00\x08")
    with pytest.raises(IdxFormatError):
        parse_idx_labels(struct.pack(">I", 0x00000801))


def test_label_out_of_range():
    data = label_bytes([1, 2, 10, 4])
    with pytest.raises(IdxFormatError) as err:
        parse_idx_labels(data)
    assert err.value.offset == 8 + 2


def test_empty_label_file():
    assert len(parse_idx_labels(label_bytes([]))) == 0


def test_crop_all_ones():
    assert np.array_equal(crop_center(np.ones((28, 28))), np.ones(400))


def test_crop_corner_mapping():
    img = np.zeros((28, 28))
    img[4, 4] = 1.0
    out = crop_center(img)
    assert out[0] == 1.0 and out.sum() == 1.0

    img = np.zeros((28, 28))
    img[3, 3] = 1.0
    assert crop_center(img).sum() == 0.0


def test_crop_is_pure_projection():
    rng = np.random.default_rng(2)
    img = rng.uniform(size=(28, 28))
    out = crop_center(img).reshape(20, 20)
    for r, c in ((0, 0), (7, 13), (19, 19)):
        assert out[r, c] == img[r + 4, c + 4]


def test_crop_accepts_flat_input():
    rng = np.random.default_rng(3)
    img = rng.uniform(size=(28, 28))
    assert np.array_equal(crop_center(img.ravel()), crop_center(img))


def test_crop_wrong_size():
    with pytest.raises(ValueError):
        crop_center(np.ones((27, 28)))
    with pytest.raises(ValueError):
        crop_center(np.ones(783))


def test_load_split_rejects_unknown_name(tmp_path):
    from xbarsim.mnist import load_split
    with pytest.raises(ValueError, match="split"):
        load_split(tmp_path, "validation")


def test_load_dataset_count_mismatch(tmp_path):
    rng = np.random.default_rng(4)
    write_idx_images(rng.integers(0, 256, (4, 28, 28), dtype=np.uint8),
                     tmp_path / "imgs")
    write_idx_labels([1, 2, 3], tmp_path / "lbls")
    with pytest.raises(ValueError):
        load_dataset(tmp_path / "imgs", tmp_path / "lbls")
