"""Tiling a layer onto subarrays: accumulation chains and vertical groups.

A 400x120 layer does not fit one subarray, so it is cut into row bands
(horizontal partitions, chained through DEMUX routing that accumulates
partial currents) and output groups (vertical partitions, concatenated
at the switch blocks).  Smaller subarrays mean more tiles but shorter,
less lossy wires.
"""
import numpy as np

from xbarsim import (BinarizedModel, FabricConfig, format_plan, plan_network,
                     plan_partitions, technology_by_name, validate_plan)

mram = technology_by_name("MRAM")

print("one 400x120 layer across subarray sizes")
print("-" * 64)
for side in (32, 64, 128, 256):
    fabric = FabricConfig(side, side, mram)
    plan = plan_partitions(400, 120, fabric)
    print(f"{side:>3}x{side:<3}  h_p={plan.h_p:<3} v_p={plan.v_p:<2} "
          f"tiles={plan.n_tiles:<4} chain length per output = {plan.h_p}")
    assert validate_plan(plan) == []

# a full network plan, serialized in the same text format the CLI prints
rng = np.random.default_rng(0)
dims = [400, 120, 84, 10]
weights = [rng.choice([-1, 1], size=(dims[k], dims[k + 1])).astype(np.int8)
           for k in range(3)]
model = BinarizedModel(layer_dims=dims, weights=weights)

plans = plan_network(model, FabricConfig(256, 256, mram))
print()
print("plan text for the whole network on 256x256 subarrays")
print("-" * 64)
print(format_plan(plans), end="")

# uneven vertical splits are representable too: validate_plan accepts any
# tiling that covers the matrix exactly, planner-generated or not
print()
print("remainders go to the last partition:",
      [t.n_rows for t in plan_partitions(70, 16, FabricConfig(32, 32, mram)).tiles
       if t.v_index == 0])
