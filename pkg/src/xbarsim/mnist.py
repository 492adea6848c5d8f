"""IDX container parsing, 28x28 -> 20x20 center cropping, dataset loading.

IDX is the MNIST container format: a big-endian header (magic, counts,
dims) followed by raw u8 payload.  Every malformed input raises
IdxFormatError carrying the byte offset of the problem; the parsers
never read past declared lengths.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

CROP_LO, CROP_HI = 4, 24  # retained rows/cols of the 28x28 frame


class IdxFormatError(ValueError):
    """Malformed IDX or weight container; offset is the failing byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def _read_u32(data: bytes, offset: int, what: str) -> int:
    if len(data) < offset + 4:
        raise IdxFormatError(f"truncated while reading {what}", len(data))
    return struct.unpack_from(">I", data, offset)[0]


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an IDX image file into a (count, rows, cols) array in [0,1]."""
    magic = _read_u32(data, 0, "magic")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}", 0)
    count = _read_u32(data, 4, "image count")
    rows = _read_u32(data, 8, "row count")
    cols = _read_u32(data, 12, "column count")
    need = 16 + count * rows * cols
    if len(data) < need:
        raise IdxFormatError(
            f"payload ends early: need {need} bytes, have {len(data)}", len(data))
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols,
                           offset=16)
    return pixels.reshape(count, rows, cols).astype(float) / 255.0


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse an IDX label file into a (count,) uint8 array of digits 0-9."""
    magic = _read_u32(data, 0, "magic")
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}", 0)
    count = _read_u32(data, 4, "label count")
    need = 8 + count
    if len(data) < need:
        raise IdxFormatError(
            f"payload ends early: need {need} bytes, have {len(data)}", len(data))
    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8)
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise IdxFormatError(f"label value {labels[bad[0]]} out of range 0-9",
                             8 + int(bad[0]))
    return labels.copy()


def crop_center(image: np.ndarray) -> np.ndarray:
    """Project a 28x28 image onto its central 20x20 window, row-major flat."""
    image = np.asarray(image)
    if image.shape == (784,):
        image = image.reshape(28, 28)
    if image.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got shape {image.shape}")
    return image[CROP_LO:CROP_HI, CROP_LO:CROP_HI].reshape(400).copy()


@dataclass
class Dataset:
    """Cropped 400-pixel images in [0,1] with their digit labels."""

    images: np.ndarray
    labels: np.ndarray
    split: str = ""

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise ValueError("image/label counts differ")

    def __len__(self) -> int:
        return len(self.labels)


def load_dataset(images_path: str | Path, labels_path: str | Path,
                 split: str = "") -> Dataset:
    """Load an IDX image/label file pair and crop to the 400-pixel frame."""
    raw = parse_idx_images(Path(images_path).read_bytes())
    labels = parse_idx_labels(Path(labels_path).read_bytes())
    if len(raw) != len(labels):
        raise ValueError(f"{len(raw)} images but {len(labels)} labels")
    images = raw[:, CROP_LO:CROP_HI, CROP_LO:CROP_HI].reshape(len(raw), 400)
    return Dataset(images=images, labels=labels, split=split)


_SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def load_split(data_dir: str | Path, split: str) -> Dataset:
    """Load the MNIST-style train or test split from a directory."""
    try:
        img_name, lbl_name = _SPLIT_FILES[split]
    except KeyError:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    data_dir = Path(data_dir)
    img, lbl = data_dir / img_name, data_dir / lbl_name
    for p in (img, lbl):
        if not p.is_file():
            raise FileNotFoundError(f"dataset file missing: {p}")
    return load_dataset(img, lbl, split=split)


def write_idx_images(images_u8: np.ndarray, path: str | Path) -> None:
    """Write a (count, rows, cols) uint8 array as an IDX image file."""
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    count, rows, cols = images_u8.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols))
        fh.write(images_u8.tobytes())


def write_idx_labels(labels: np.ndarray, path: str | Path) -> None:
    """Write a (count,) array of digits as an IDX label file."""
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())
