"""The all-ones SNR probe and the full sweep table.

SNR here is the average differential sense voltage of one tile with all
weights +1 and all rows at VDD, divided by the amplifier's input-referred
noise RMS.  With parasitics, partitioning into smaller subarrays raises
it for the low-resistance technologies; normalization is against the
32x32 no-parasitic point.  The sweep writes the same CSV the command
line `xbarsim sweep` emits.
"""
import sys

from xbarsim import (BitcellType, FabricConfig, SweepSpec, builtin_technologies,
                     measure_snr, normalize_snr, run_sweep)
from xbarsim.analysis import rows_to_csv

print("normalized SNR vs subarray size (0T1R, parasitics on)")
print("-" * 64)
for tech in builtin_technologies():
    baseline = measure_snr(FabricConfig(32, 32, tech, parasitics_enabled=False))
    results = [measure_snr(FabricConfig(n, n, tech, parasitics_enabled=True))
               for n in (32, 64, 128, 256)]
    normed = normalize_snr(results, baseline)
    curve = "  ".join(f"{r.normalized_snr:7.3f}" for r in normed)
    print(f"{tech.name:6s} {curve}   (baseline snr {baseline.snr:9.1f})")

print()
print("signal voltages at 32x32, both bitcells")
print("-" * 64)
for tech in builtin_technologies():
    for cell in BitcellType:
        r = measure_snr(FabricConfig(32, 32, tech, cell,
                                     parasitics_enabled=True))
        print(f"{tech.name:6s} {cell.value}: signal {r.signal * 1e3:7.3f} mV, "
              f"snr {r.snr:9.1f}")

print()
print("sweep CSV (no accuracy column without a model/dataset):")
print("-" * 64)
spec = SweepSpec(sizes=[(32, 32), (64, 64), (128, 128), (256, 256)],
                 technologies=builtin_technologies(),
                 bitcells=list(BitcellType), parasitics=True)
sys.stdout.write(rows_to_csv(run_sweep(spec)))
