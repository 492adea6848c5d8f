"""Analog neuron front end: differential sensing, noise injection, thresholding.

Noise is injected once per neuron per inference as an input-referred
voltage at the differential amplifier, drawn from a counter-based
generator (numpy Philox) so that a seed fully determines the sequence.
Draws are consumed layer-major, neuron-minor; parallel evaluation must
give each image its own stream via NoiseStream.for_image.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .devices import TechnologyProfile


@dataclass(frozen=True)
class NeuronConfig:
    r_sense: float
    sigma_noise: float
    vdd: float

    def __post_init__(self) -> None:
        if self.sigma_noise < 0:
            raise ValueError("sigma_noise must be non-negative")

    @classmethod
    def from_technology(cls, tech: TechnologyProfile) -> "NeuronConfig":
        return cls(r_sense=tech.r_sense, sigma_noise=tech.sigma_noise, vdd=tech.vdd)


class NoiseStream:
    """Reproducible Gaussian draw sequence keyed by a 64-bit seed.

    Backed by numpy's Philox counter-based generator: the same seed
    yields the same sequence no matter how draws are batched.  A stream
    has a single owner; derive per-image streams with for_image.
    """

    def __init__(self, seed: int):
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self.draws = 0
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    @classmethod
    def for_image(cls, base_seed: int, image_index: int) -> "NoiseStream":
        return cls(base_seed ^ image_index)

    def normal(self, count: int) -> np.ndarray:
        """Next `count` standard-normal draws."""
        self.draws += count
        return self._gen.standard_normal(count)


def sense(i_plus: float, i_minus: float, cfg: NeuronConfig,
          noise: NoiseStream | None = None) -> float:
    """Differential sense voltage: (I+ - I-) * r_sense plus amplifier noise.

    With sigma_noise = 0 no draw is consumed and the result is exact.
    """
    if not (math.isfinite(i_plus) and math.isfinite(i_minus)):
        raise ValueError("currents must be finite")
    v = (i_plus - i_minus) * cfg.r_sense
    if cfg.sigma_noise > 0.0:
        if noise is None:
            raise ValueError("sigma_noise > 0 requires a NoiseStream")
        v += cfg.sigma_noise * noise.normal(1)[0]
    return v


def sense_array(i_plus: np.ndarray, i_minus: np.ndarray, cfg: NeuronConfig,
                noise: NoiseStream | None = None) -> np.ndarray:
    """Vectorized sense over one image's neurons (draw order preserved)."""
    v = (np.asarray(i_plus) - np.asarray(i_minus)) * cfg.r_sense
    if cfg.sigma_noise > 0.0:
        if noise is None:
            raise ValueError("sigma_noise > 0 requires a NoiseStream")
        v = v + cfg.sigma_noise * noise.normal(v.size).reshape(v.shape)
    return v


def activate_hidden(v_diff: float, cfg: NeuronConfig) -> float:
    """Binarized activation: full-swing VDD at or above zero, else 0 V."""
    if not math.isfinite(v_diff):
        raise ValueError("v_diff must be finite")
    return cfg.vdd if v_diff >= 0.0 else 0.0


def readout_output_layer(v_diffs: np.ndarray) -> int:
    """Class index = argmax of the output sense voltages, ties to lowest."""
    v_diffs = np.asarray(v_diffs)
    if v_diffs.size == 0:
        raise ValueError("empty output vector")
    return int(np.argmax(v_diffs))
