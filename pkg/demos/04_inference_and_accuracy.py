"""Deploying the trained network and reproducing the accuracy cliff.

Loads the reference binarized 400-120-84-10 model (training one first if
the weight file is missing), deploys it on fabrics of different subarray
sizes and evaluates classification accuracy with full parasitics and
amplifier noise.  Small subarrays stay near the digital accuracy; large
ones collapse, except on PCM whose high cell resistance starves the IR
drop.  Runs in a couple of minutes.
"""
import time
from pathlib import Path

from xbarsim import (BitcellType, FabricConfig, deploy, evaluate,
                     digital_accuracy, load_model, save_model,
                     technology_by_name, train)
from xbarsim.digits import ensure_dataset
from xbarsim.mnist import load_split
from xbarsim.training import TrainSpec

ROOT = Path(__file__).resolve().parent.parent
MODEL = ROOT / "models" / "reference-400x120x84x10.imacw"

data_dir = ensure_dataset(ROOT / "data")
train_data = load_split(data_dir, "train")
test_data = load_split(data_dir, "test")

if MODEL.is_file():
    model = load_model(MODEL)
else:
    print("training the reference model (seed 42)...")
    model = train(train_data, test_data, TrainSpec(seed=42))
    MODEL.parent.mkdir(exist_ok=True)
    save_model(model, MODEL)

print(f"digital reference accuracy: {digital_accuracy(model, test_data):.4f}")
print()
print("analog accuracy, 300 test images, parasitics + noise at defaults")
print("-" * 72)
for tech_name in ("MRAM", "CBRAM", "PCM"):
    tech = technology_by_name(tech_name)
    for side in (32, 64, 128, 256):
        fabric = FabricConfig(side, side, tech, BitcellType.ONE_T_1R,
                              parasitics_enabled=True)
        net = deploy(model, fabric)
        t0 = time.time()
        rep = evaluate(net, test_data, 300, seed=1)
        print(f"{tech_name:6s} {side:>3}x{side:<3}  acc={rep.accuracy:5.3f}  "
              f"power={rep.power_total:8.4f} W  "
              f"tiles={'/'.join(str(t) for t in rep.tile_counts):<9} "
              f"({time.time() - t0:4.1f}s)")
    print()
