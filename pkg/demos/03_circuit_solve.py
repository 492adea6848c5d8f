"""Solving one tile's parasitic DC network and watching the IR drop.

All weights are +1 and all rows driven, the worst-case current pattern.
The ideal column current grows linearly with the row count; the real
current falls behind because every microamp has to cross more and more
wire segments.  That deficit is what destroys large-array accuracy.
"""
import numpy as np

from xbarsim import (BitcellType, FabricConfig, build_network, crossbar_power,
                     dump_netlist, solve_dc, technology_by_name)

mram = technology_by_name("MRAM")

print("all-ones tile: ideal vs parasitic positive-line current")
print("-" * 64)
for n in (8, 16, 32, 64):
    fabric = FabricConfig(n, n, mram, BitcellType.ZERO_T_1R,
                          parasitics_enabled=True)
    g_plus = np.full((n, n // 2), 1.0 / mram.r_low)
    g_minus = np.full((n, n // 2), 1.0 / mram.r_high)
    drive = np.full(n, mram.vdd)

    system = build_network(g_plus, g_minus, fabric, drive)
    solution = solve_dc(system)
    ideal = n * mram.vdd / mram.r_low
    actual = solution.foot_currents[0::2].mean()
    power = crossbar_power(system, solution)
    print(f"n={n:<3} ideal {ideal * 1e3:7.3f} mA   solved {actual * 1e3:7.3f} mA "
          f"  delivered fraction {actual / ideal:5.1%}   tile power {power * 1e3:7.2f} mW"
          f"   ({solution.iterations} CG iterations)")

# node voltages show where the signal dies: the far end of each column
n = 16
fabric = FabricConfig(n, n, mram, parasitics_enabled=True)
g_plus = np.full((n, n // 2), 1.0 / mram.r_low)
g_minus = np.full((n, n // 2), 1.0 / mram.r_high)
system = build_network(g_plus, g_minus, fabric, np.full(n, mram.vdd))
solution = solve_dc(system)
row_v = solution.voltages[:n * n].reshape(n, n)
print()
print("row-wire voltage along the first row (V), driven at 0.8:")
print("  " + " ".join(f"{v:.3f}" for v in row_v[0, ::2]))

# a small tile as a netlist, ready for an external circuit simulator
tiny = build_network(np.array([[1 / 3e3]]), np.array([[1 / 9e3]]),
                     FabricConfig(1, 2, mram, parasitics_enabled=True),
                     np.array([0.8]))
print()
print("netlist of a single differential pair:")
print(dump_netlist(tiny), end="")
