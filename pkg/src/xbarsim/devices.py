"""Device technologies, bitcells, fabric geometry and the weight-to-conductance mapping.

Signed binary weights are stored as differential conductance pairs: two
resistive devices per weight, one programmed to R_low and the other to
R_high.  The signed weight is carried by which device of the pair is in
the low state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class BitcellType(Enum):
    """0T-1R: bare device; 1T-1R: device in series with an access transistor."""

    ZERO_T_1R = "0T1R"
    ONE_T_1R = "1T1R"

    @classmethod
    def parse(cls, text: str) -> "BitcellType":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise ValueError(f"unknown bitcell type {text!r} (expected 0T1R or 1T1R)")


@dataclass(frozen=True)
class TechnologyProfile:
    """Electrical constants of one memristive technology and its fabric.

    Resistances in ohms, voltages in volts, capacitances in farads,
    powers in watts.  c_wire_seg is carried for completeness only; the
    DC solve ignores it.
    """

    name: str
    r_low: float
    r_high: float
    vdd: float = 0.8
    r_wire_seg: float = 12.0
    c_wire_seg: float = 0.1e-15
    r_access: float = 2e3
    r_sense: float = 10.0
    sigma_noise: float = 20e-6
    r_switch: float = 200.0
    r_demux: float = 200.0
    p_neuron: float = 50e-6
    p_demux: float = 5e-6
    p_switch: float = 2e-6

    def __post_init__(self) -> None:
        if not (0 < self.r_low < self.r_high):
            raise ValueError(f"need 0 < r_low < r_high, got {self.r_low}, {self.r_high}")
        if self.vdd <= 0:
            raise ValueError("vdd must be positive")
        for attr in ("r_wire_seg", "r_access", "r_sense", "r_switch", "r_demux",
                     "sigma_noise", "p_neuron", "p_demux", "p_switch"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{attr} must be non-negative")

    def ratio(self) -> float:
        return self.r_high / self.r_low

    def with_overrides(self, **kwargs) -> "TechnologyProfile":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class FabricConfig:
    """Subarray geometry plus the technology/bitcell it is built from.

    Columns are consumed as differential pairs, so subarray_cols must be
    even; a subarray holds subarray_cols/2 logical outputs.
    """

    subarray_rows: int
    subarray_cols: int
    technology: TechnologyProfile
    bitcell: BitcellType = BitcellType.ZERO_T_1R
    parasitics_enabled: bool = True

    def __post_init__(self) -> None:
        if self.subarray_rows < 1:
            raise ValueError("subarray_rows must be >= 1")
        if self.subarray_cols < 2 or self.subarray_cols % 2 != 0:
            raise ValueError("subarray_cols must be even and >= 2")

    @property
    def output_pairs(self) -> int:
        return self.subarray_cols // 2

    def cell_resistances(self) -> tuple[float, float]:
        """Effective (low, high) cell resistance including the access device."""
        ra = self.technology.r_access if self.bitcell is BitcellType.ONE_T_1R else 0.0
        return self.technology.r_low + ra, self.technology.r_high + ra


@dataclass(frozen=True)
class ConductancePair:
    """Differential conductances (siemens) of one mapped weight."""

    g_plus: float
    g_minus: float

    def __post_init__(self) -> None:
        if self.g_plus <= 0 or self.g_minus <= 0:
            raise ValueError("conductances must be strictly positive")

    @property
    def differential(self) -> float:
        return self.g_plus - self.g_minus


def weight_to_conductance(w: int, tech: TechnologyProfile,
                          bitcell: BitcellType = BitcellType.ZERO_T_1R) -> ConductancePair:
    """Map a signed binary weight onto a differential device pair.

    w = +1 puts the low-resistance device on the positive line,
    w = -1 mirrors the pair.  With a 1T-1R bitcell the access-transistor
    resistance adds in series on both devices.
    """
    if w not in (1, -1):
        raise ValueError(f"weight must be +1 or -1, got {w!r}")
    ra = tech.r_access if bitcell is BitcellType.ONE_T_1R else 0.0
    g_low = 1.0 / (tech.r_low + ra)
    g_high = 1.0 / (tech.r_high + ra)
    if w == 1:
        return ConductancePair(g_low, g_high)
    return ConductancePair(g_high, g_low)


def binarize_input(pixel: float, tech: TechnologyProfile) -> float:
    """Encode a [0,1] pixel as a row drive voltage: VDD at/above 0.5, else 0."""
    if math.isnan(pixel):
        raise ValueError("pixel is NaN")
    return tech.vdd if pixel >= 0.5 else 0.0


@dataclass
class BinarizedModel:
    """Layered MLP with all weights in {-1,+1}.

    weights[k] has shape (layer_dims[k], layer_dims[k+1]) and dtype int8;
    activations between layers are binarized to {0,1}.
    """

    layer_dims: list[int]
    weights: list[np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.layer_dims) - 1:
            raise ValueError("need one weight matrix per layer transition")
        for k, w in enumerate(self.weights):
            expected = (self.layer_dims[k], self.layer_dims[k + 1])
            if w.shape != expected:
                raise ValueError(f"layer {k}: weight shape {w.shape} != {expected}")
            if not np.isin(w, (-1, 1)).all():
                raise ValueError(f"layer {k}: weights must be in {{-1,+1}}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_dims[-1]


# Shipped technology profiles.  R_high/R_low ratios: MRAM 3, CBRAM 100,
# PCM 100.  Absolute values are engineering defaults chosen so that the
# default 12 ohm/segment interconnect reproduces the expected behaviour
# of each technology: CBRAM's low-ohmic filament gives it the largest
# differential conductance (hence best noise immunity), while PCM's high
# absolute resistance draws so little current that IR drop barely touches
# it even on 256x256 subarrays.
_BUILTIN = (
    TechnologyProfile(name="MRAM", r_low=3e3, r_high=9e3),
    TechnologyProfile(name="CBRAM", r_low=1e3, r_high=100e3),
    TechnologyProfile(name="PCM", r_low=400e3, r_high=40e6),
)


def builtin_technologies() -> list[TechnologyProfile]:
    """The shipped MRAM, CBRAM and PCM profiles (immutable, shareable)."""
    return list(_BUILTIN)


def technology_by_name(name: str) -> TechnologyProfile:
    for tech in _BUILTIN:
        if tech.name.lower() == name.lower():
            return tech
    known = ", ".join(t.name for t in _BUILTIN)
    raise KeyError(f"unknown technology {name!r} (built in: {known})")
