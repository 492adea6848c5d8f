"""SNR measurement, normalization and multi-point sweeps.

The SNR probe follows the worst-case-signal convention: every weight is
set to +1 (low resistance on the positive line, high on the negative),
every row is driven at VDD, and the signal is the average differential
sense voltage over the tile's column pairs.  Noise is the configured
input-referred RMS of the amplifier, so SNR is analytic once the tile is
solved; a Monte-Carlo cross-check lives in the test suite.
"""
from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from .circuit import build_network, ideal_mvm, solve_direct
from .devices import BitcellType, FabricConfig, TechnologyProfile
from .pipeline import deploy, evaluate

CSV_COLUMNS = ["size", "tech", "bitcell", "parasitics", "accuracy", "p_total",
               "p_xbar", "p_neuron", "p_demux", "p_switch", "signal_v", "snr",
               "snr_norm"]


@dataclass
class SnrResult:
    """All-ones-pattern signal and SNR of one fabric point."""

    size: str
    tech: str
    bitcell: str
    parasitics: bool
    signal: float
    noise_rms: float
    snr: float  # math.inf when noise_rms == 0
    normalized_snr: float | None = None


@dataclass
class SweepSpec:
    """Cartesian sweep axes: one output row per (size, tech, bitcell)."""

    sizes: list[tuple[int, int]]
    technologies: list[TechnologyProfile]
    bitcells: list[BitcellType]
    parasitics: bool = True
    images_per_point: int = 0
    seed: int = 0
    per_tech_baseline: bool = False

    def __post_init__(self) -> None:
        if not (self.sizes and self.technologies and self.bitcells):
            raise ValueError("sweep axes must be non-empty")


def measure_snr(fabric: FabricConfig) -> SnrResult:
    """Solve one full all-(+1) tile at VDD drive and report signal/sigma."""
    n = fabric.subarray_rows
    pairs = fabric.output_pairs
    tech = fabric.technology
    r_lo, r_hi = fabric.cell_resistances()
    g_plus = np.full((n, pairs), 1.0 / r_lo)
    g_minus = np.full((n, pairs), 1.0 / r_hi)
    drive = np.full(n, tech.vdd)

    if fabric.parasitics_enabled and tech.r_wire_seg > 0.0:
        system = build_network(g_plus, g_minus, fabric, drive)
        solution = solve_direct(system)
        foot = solution.foot_currents
        diff = foot[0::2] - foot[1::2]
    else:
        i_plus, i_minus, diff = ideal_mvm(g_plus, g_minus, drive)

    signal = float(diff.mean() * tech.r_sense)
    sigma = tech.sigma_noise
    snr = signal / sigma if sigma > 0.0 else math.inf
    return SnrResult(size=f"{n}x{fabric.subarray_cols}", tech=tech.name,
                     bitcell=fabric.bitcell.value,
                     parasitics=fabric.parasitics_enabled,
                     signal=signal, noise_rms=sigma, snr=snr)


def normalize_snr(results: list[SnrResult], baseline: SnrResult) -> list[SnrResult]:
    """Scale every SNR by the baseline's; the baseline itself maps to 1."""
    if not math.isfinite(baseline.snr) or baseline.snr <= 0.0:
        raise ValueError(f"baseline SNR must be positive and finite, "
                         f"got {baseline.snr}")
    return [replace(r, normalized_snr=r.snr / baseline.snr) for r in results]


def run_sweep(spec: SweepSpec, model=None, dataset=None, jobs: int = 1,
              log=None) -> list[dict]:
    """One result row per sweep point, in axes order.

    Every row carries the fixed CSV_COLUMNS fields.  Accuracy cells stay
    empty when images_per_point is 0 or no model/dataset is given.  A
    failing point yields a row with 'error' in its value cells instead
    of aborting the sweep.
    """
    rows = []
    baselines: dict[str, float] = {}

    def baseline_for(tech: TechnologyProfile, bitcell: BitcellType) -> float:
        key = tech.name if spec.per_tech_baseline else "__global__"
        if key not in baselines:
            ref_tech, ref_cell = (tech, bitcell) if spec.per_tech_baseline else (
                spec.technologies[0], spec.bitcells[0])
            ref = measure_snr(FabricConfig(32, 32, ref_tech, ref_cell,
                                           parasitics_enabled=False))
            baselines[key] = ref.snr
        return baselines[key]

    for size in spec.sizes:
        for tech in spec.technologies:
            for bitcell in spec.bitcells:
                row = dict.fromkeys(CSV_COLUMNS, "")
                row.update(size=f"{size[0]}x{size[1]}", tech=tech.name,
                           bitcell=bitcell.value,
                           parasitics=int(spec.parasitics))
                try:
                    fabric = FabricConfig(size[0], size[1], tech, bitcell,
                                          parasitics_enabled=spec.parasitics)
                    snr = measure_snr(fabric)
                    base = baseline_for(tech, bitcell)
                    row["signal_v"] = snr.signal
                    row["snr"] = snr.snr
                    row["snr_norm"] = (snr.snr / base if base > 0
                                       and math.isfinite(snr.snr) else "")
                    if spec.images_per_point > 0 and model is not None \
                            and dataset is not None:
                        if log:
                            print(f"evaluating {row['size']} {tech.name} "
                                  f"{bitcell.value}", file=log)
                        net = deploy(model, fabric)
                        report = evaluate(net, dataset, spec.images_per_point,
                                          seed=spec.seed, jobs=jobs)
                        row["accuracy"] = report.accuracy
                        row["p_total"] = report.power_total
                        b = report.power_breakdown
                        row["p_xbar"] = b["crossbar"]
                        row["p_neuron"] = b["neurons"]
                        row["p_demux"] = b["demux"]
                        row["p_switch"] = b["switches"]
                except Exception as exc:  # record and continue
                    for col in CSV_COLUMNS[4:]:
                        row[col] = "error"
                    if log:
                        print(f"point {row['size']}/{tech.name}/{bitcell.value} "
                              f"failed: {exc}", file=log)
                rows.append(row)
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    """Render sweep rows with the fixed column order, LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], file=None) -> None:
    (file or sys.stdout).write(rows_to_csv(rows))
