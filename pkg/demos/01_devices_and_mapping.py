"""Technologies, bitcells and how a signed binary weight becomes hardware.

Every logical weight occupies two resistive devices on adjacent columns:
the positive line and the negative line of a differential pair.  A +1
weight programs the positive device to R_low and the negative one to
R_high; a -1 weight mirrors them.
"""
import numpy as np

from xbarsim import (BitcellType, binarize_input, builtin_technologies,
                     weight_to_conductance)

print("shipped technology profiles")
print("-" * 72)
for tech in builtin_technologies():
    print(f"{tech.name:6s} R_low={tech.r_low:>10.0f} ohm  "
          f"R_high={tech.r_high:>12.0f} ohm  ratio={tech.ratio():>5.0f}  "
          f"VDD={tech.vdd} V  wire={tech.r_wire_seg} ohm/segment")

print()
print("weight -> differential conductance pair (microsiemens)")
print("-" * 72)
for tech in builtin_technologies():
    for cell in BitcellType:
        pos = weight_to_conductance(+1, tech, cell)
        neg = weight_to_conductance(-1, tech, cell)
        print(f"{tech.name:6s} {cell.value}:  +1 -> ({pos.g_plus * 1e6:9.3f}, "
              f"{pos.g_minus * 1e6:8.3f})   -1 -> ({neg.g_plus * 1e6:9.3f}, "
              f"{neg.g_minus * 1e6:8.3f})")

# The pair sum is conserved whatever the sign: flipping a weight swaps the
# devices but never changes the total loading on the row wire.
tech = builtin_technologies()[0]
pos = weight_to_conductance(+1, tech)
neg = weight_to_conductance(-1, tech)
assert pos.g_plus + pos.g_minus == neg.g_plus + neg.g_minus

print()
print("input encoding: pixels binarize to row drive voltages")
print("-" * 72)
for pixel in (0.0, 0.3, 0.5, 0.8, 1.0):
    print(f"pixel {pixel:.2f} -> {binarize_input(pixel, tech):.2f} V")
