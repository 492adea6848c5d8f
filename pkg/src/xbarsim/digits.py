"""Deterministic synthetic digit images in the MNIST container layout.

Renders the ten digits from stroke templates with per-image random
affine warps, stroke widths, elastic distortion and intensity, then
writes standard IDX files.  Everything is keyed by a single seed, so a
dataset can be regenerated bit-identically anywhere; no download is ever
attempted.  Useful wherever the real MNIST files are not present.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from .mnist import write_idx_images, write_idx_labels

SIDE = 28


def _arc(cx, cy, rx, ry, deg0, deg1, n=28):
    a = np.radians(np.linspace(deg0, deg1, n))
    return np.column_stack([cx + rx * np.cos(a), cy + ry * np.sin(a)])


def _line(x0, y0, x1, y1):
    return np.array([[x0, y0], [x1, y1]])


# Stroke templates in a unit design box, y pointing down.
_GLYPHS = {
    0: [_arc(0.50, 0.50, 0.30, 0.40, 0, 360)],
    1: [_line(0.32, 0.26, 0.52, 0.08), _line(0.52, 0.08, 0.52, 0.92),
        _line(0.34, 0.92, 0.70, 0.92)],
    2: [_arc(0.50, 0.32, 0.28, 0.24, 180, 395), _line(0.76, 0.50, 0.22, 0.88),
        _line(0.22, 0.88, 0.80, 0.88)],
    3: [_arc(0.46, 0.30, 0.26, 0.22, 160, 380), _arc(0.46, 0.70, 0.30, 0.24, 340, 560)],
    4: [_line(0.62, 0.08, 0.20, 0.60), _line(0.20, 0.60, 0.82, 0.60),
        _line(0.62, 0.34, 0.62, 0.92)],
    5: [_line(0.74, 0.10, 0.28, 0.10), _line(0.28, 0.10, 0.26, 0.44),
        _arc(0.48, 0.66, 0.28, 0.26, 195, 430)],
    6: [np.array([[0.70, 0.10], [0.48, 0.22], [0.34, 0.42], [0.30, 0.64]]),
        _arc(0.50, 0.68, 0.22, 0.20, 0, 360)],
    7: [_line(0.20, 0.12, 0.80, 0.12), _line(0.80, 0.12, 0.42, 0.90),
        _line(0.38, 0.50, 0.66, 0.50)],
    8: [_arc(0.50, 0.30, 0.22, 0.20, 0, 360), _arc(0.50, 0.70, 0.26, 0.22, 0, 360)],
    9: [_arc(0.48, 0.32, 0.22, 0.20, 0, 360),
        np.array([[0.70, 0.32], [0.68, 0.60], [0.60, 0.88]])],
}

_PX = np.stack(np.meshgrid(np.arange(SIDE) + 0.5, np.arange(SIDE) + 0.5,
                           indexing="xy"), axis=-1).reshape(-1, 2)


def _segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray):
    ab = b - a
    denom = (ab ** 2).sum(axis=1)
    denom[denom == 0.0] = 1e-12
    t = ((points[:, None, :] - a[None]) * ab[None]).sum(axis=2) / denom[None]
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.sqrt(((points[:, None, :] - closest) ** 2).sum(axis=2))


def render_digit(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One randomly warped 28x28 grayscale rendering of a digit, in [0,1]."""
    theta = rng.uniform(-0.21, 0.21)
    shear = rng.uniform(-0.18, 0.18)
    sx, sy = rng.uniform(0.82, 1.08, size=2)
    tx, ty = rng.uniform(-0.05, 0.05, size=2)
    thickness = rng.uniform(1.1, 1.9)
    elastic_amp = rng.uniform(1.0, 4.5)
    intensity = rng.uniform(0.78, 1.0)

    c, s = np.cos(theta), np.sin(theta)
    m = np.array([[sx * c, sx * (shear * c - s)],
                  [sy * s, sy * (shear * s + c)]])

    seg_a, seg_b = [], []
    for stroke in _GLYPHS[digit]:
        pts = (stroke - 0.5) @ m.T + 0.5 + (tx, ty)
        pts = pts * 20.0 + 4.0  # design box -> central pixel window
        seg_a.append(pts[:-1])
        seg_b.append(pts[1:])
    a = np.concatenate(seg_a)
    b = np.concatenate(seg_b)

    dist = _segment_distance(_PX, a, b).min(axis=1).reshape(SIDE, SIDE)
    img = np.clip((thickness - dist) / 0.9, 0.0, 1.0)

    dx = gaussian_filter(rng.uniform(-1, 1, (SIDE, SIDE)), 3.0) * elastic_amp * 4.0
    dy = gaussian_filter(rng.uniform(-1, 1, (SIDE, SIDE)), 3.0) * elastic_amp * 4.0
    yy, xx = np.mgrid[0:SIDE, 0:SIDE]
    img = map_coordinates(img, [yy + dy, xx + dx], order=1, mode="constant")

    return img * intensity


def generate_arrays(count: int, seed: int, stream: int = 0):
    """(images_u8, labels) for `count` digits, bit-reproducible per seed."""
    images = np.empty((count, SIDE, SIDE), dtype=np.uint8)
    labels = np.empty(count, dtype=np.uint8)
    for i in range(count):
        rng = np.random.default_rng([seed, stream, i])
        digit = int(rng.integers(0, 10))
        labels[i] = digit
        images[i] = np.round(render_digit(digit, rng) * 255.0).astype(np.uint8)
    return images, labels


def generate_dataset_files(out_dir: str | Path, n_train: int = 12000,
                           n_test: int = 2000, seed: int = 7) -> Path:
    """Write train/test IDX files under out_dir using MNIST file names."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_images, train_labels = generate_arrays(n_train, seed, stream=0)
    test_images, test_labels = generate_arrays(n_test, seed, stream=1)
    write_idx_images(train_images, out_dir / "train-images-idx3-ubyte")
    write_idx_labels(train_labels, out_dir / "train-labels-idx1-ubyte")
    write_idx_images(test_images, out_dir / "t10k-images-idx3-ubyte")
    write_idx_labels(test_labels, out_dir / "t10k-labels-idx1-ubyte")
    return out_dir


def ensure_dataset(out_dir: str | Path, n_train: int = 12000,
                   n_test: int = 2000, seed: int = 7) -> Path:
    """Generate the dataset only if the files are not already present."""
    out_dir = Path(out_dir)
    names = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte",
             "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
    if all((out_dir / n).is_file() for n in names):
        return out_dir
    return generate_dataset_files(out_dir, n_train, n_test, seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m xbarsim.digits",
        description="Generate a synthetic digit dataset as IDX files.")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--train", type=int, default=12000)
    parser.add_argument("--test", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    out = generate_dataset_files(args.out, args.train, args.test, args.seed)
    print(f"wrote {args.train} train / {args.test} test images to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
