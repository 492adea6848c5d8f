"""Straight-through-estimator training of the binarized reference model.

Real-valued shadow weights are kept in [-1,1]; the forward pass always
uses their signs, and is arranged so that the trained network evaluated
through forward_digital reproduces training-time behaviour exactly
(binary {0,1} inputs, z >= 0 thresholds, no normalization layers).
Gradients pass through both sign functions as clipped identities.

Weight file format (little-endian): magic "IMACW1", u8 layer count,
then per layer u32 rows, u32 cols and a row-major payload of signed
bytes, +1 encoded as 0x01 and -1 as 0xFF.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .devices import BinarizedModel
from .mnist import Dataset
from .pipeline import forward_digital_batch

MAGIC = b"IMACW1"


class ModelFormatError(ValueError):
    """Malformed weight file; offset is the failing byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass
class TrainSpec:
    epochs: int = 20
    batch_size: int = 100
    learning_rate: float = 0.01
    momentum: float = 0.0
    seed: int = 0
    layer_dims: tuple[int, ...] = (400, 120, 84, 10)


def _binarize(shadow: np.ndarray) -> np.ndarray:
    return np.where(shadow >= 0.0, 1.0, -1.0)


def train(train_data: Dataset, test_data: Dataset, spec: TrainSpec) -> BinarizedModel:
    """Train a binarized MLP; deterministic for a given spec.seed.

    Emits a warning (never an error) if the network is still at chance
    level after the first epoch.
    """
    rng = np.random.default_rng(spec.seed)
    dims = spec.layer_dims
    shadows = [rng.uniform(-0.5, 0.5, size=(dims[k], dims[k + 1]))
               for k in range(len(dims) - 1)]
    velocities = [np.zeros_like(s) for s in shadows]
    # straight-through window for the activation sign, per hidden layer
    act_clip = [np.sqrt(d) for d in dims[1:-1]]
    logit_scale = 1.0 / np.sqrt(dims[-2])

    x_all = (np.asarray(train_data.images) >= 0.5).astype(float)
    y_all = np.asarray(train_data.labels, dtype=np.int64)
    n = len(y_all)

    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start:start + spec.batch_size]
            x0, y = x_all[idx], y_all[idx]
            b = len(idx)

            weights = [_binarize(s) for s in shadows]
            acts = [x0]
            pre = []
            for k, w in enumerate(weights):
                z = acts[-1] @ w
                pre.append(z)
                if k < len(weights) - 1:
                    acts.append((z >= 0.0).astype(float))

            logits = pre[-1] * logit_scale
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            p[np.arange(b), y] -= 1.0

            dz = p * (logit_scale / b)
            for k in range(len(weights) - 1, -1, -1):
                grad = acts[k].T @ dz
                grad *= (np.abs(shadows[k]) <= 1.0)
                velocities[k] = spec.momentum * velocities[k] - spec.learning_rate * grad
                shadows[k] += velocities[k]
                np.clip(shadows[k], -1.0, 1.0, out=shadows[k])
                if k > 0:
                    da = dz @ weights[k].T
                    dz = da * (np.abs(pre[k - 1]) <= act_clip[k - 1])

        if epoch == 0:
            acc = digital_accuracy(_snapshot(shadows, dims), test_data)
            if acc < 0.2:
                warnings.warn(f"training near chance level after first epoch "
                              f"({acc:.3f})", RuntimeWarning, stacklevel=2)

    return _snapshot(shadows, dims)


def _snapshot(shadows, dims) -> BinarizedModel:
    weights = [np.where(s >= 0.0, 1, -1).astype(np.int8) for s in shadows]
    return BinarizedModel(layer_dims=list(dims), weights=weights)


def digital_accuracy(model: BinarizedModel, data: Dataset) -> float:
    """Digital-path classification accuracy of a model on a dataset."""
    bits = (np.asarray(data.images) >= 0.5).astype(np.uint8)
    predicted = forward_digital_batch(model, bits)
    return float(np.mean(predicted == np.asarray(data.labels)))


def export_model(model: BinarizedModel) -> bytes:
    """Serialize a model to the IMACW1 byte format."""
    out = [MAGIC, struct.pack("<B", len(model.weights))]
    for w in model.weights:
        out.append(struct.pack("<II", w.shape[0], w.shape[1]))
        out.append(w.astype(np.int8).tobytes())
    return b"".join(out)


def import_model(data: bytes) -> BinarizedModel:
    """Parse an IMACW1 weight file; errors carry the failing byte offset."""
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}", 0)
    offset = len(MAGIC)
    if len(data) < offset + 1:
        raise ModelFormatError("truncated before layer count", len(data))
    layer_count = data[offset]
    offset += 1
    if layer_count == 0:
        raise ModelFormatError("layer count is zero", len(MAGIC))

    weights = []
    dims = []
    for k in range(layer_count):
        if len(data) < offset + 8:
            raise ModelFormatError(f"truncated in layer {k} header", len(data))
        rows, cols = struct.unpack_from("<II", data, offset)
        offset += 8
        if rows == 0 or cols == 0:
            raise ModelFormatError(f"layer {k} has zero dimension {rows}x{cols}",
                                   offset - 8)
        if dims and dims[-1] != rows:
            raise ModelFormatError(
                f"layer {k} expects {dims[-1]} rows to chain, header says {rows}",
                offset - 8)
        need = rows * cols
        if len(data) < offset + need:
            raise ModelFormatError(
                f"layer {k} payload needs {need} bytes, file ends early", len(data))
        raw = np.frombuffer(data, dtype=np.uint8, count=need, offset=offset)
        bad = np.nonzero((raw != 0x01) & (raw != 0xFF))[0]
        if bad.size:
            raise ModelFormatError(
                f"weight byte 0x{raw[bad[0]]:02x} not in {{0x01, 0xFF}}",
                offset + int(bad[0]))
        weights.append(raw.view(np.int8).reshape(rows, cols).copy())
        if not dims:
            dims.append(rows)
        dims.append(cols)
        offset += need

    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes", offset)
    return BinarizedModel(layer_dims=dims, weights=weights)


def save_model(model: BinarizedModel, path: str | Path) -> None:
    Path(path).write_bytes(export_model(model))


def load_model(path: str | Path) -> BinarizedModel:
    return import_model(Path(path).read_bytes())
