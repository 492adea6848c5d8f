"""Command line front end: train / map / infer / snr / sweep.

Conventions: result CSV goes to stdout, diagnostics to stderr, so sweep
output can be piped.  Exit codes: 0 success, 2 usage or input error,
3 numerical failure.  All randomness flows from --seed (default 0,
never wall clock).  --config merges file settings underneath explicit
flags; the dataset directory comes from --data or $XBARSIM_DATA_DIR.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analysis import SweepSpec, measure_snr, run_sweep, rows_to_csv
from .circuit import SolverDivergenceError
from .config import ConfigError, fabric_overrides, load_config, resolve_technology
from .devices import BitcellType, FabricConfig, technology_by_name
from .mnist import IdxFormatError, load_split
from .partition import format_plan, plan_network
from .pipeline import deploy, evaluate
from .training import (ModelFormatError, TrainSpec, load_model, save_model,
                       digital_accuracy, train)

USAGE_ERROR = 2
NUMERIC_ERROR = 3


def _parse_subarray(text: str) -> tuple[int, int]:
    try:
        if "x" in text.lower():
            rows, cols = text.lower().split("x", 1)
            return int(rows), int(cols)
        side = int(text)
        return side, side
    except ValueError:
        raise ValueError(f"bad subarray spec {text!r}, expected N or NxM")


def _data_dir(args) -> Path:
    data = args.data or os.environ.get("XBARSIM_DATA_DIR")
    if not data:
        raise FileNotFoundError("no dataset directory: pass --data or set "
                                "XBARSIM_DATA_DIR")
    path = Path(data)
    if not path.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {path}")
    return path


def _resolve(args, need_fabric: bool = True):
    """Technology + fabric from flags with config merged underneath."""
    config = load_config(args.config) if getattr(args, "config", None) else {}
    base = technology_by_name(args.tech) if getattr(args, "tech", None) else None
    tech = resolve_technology(config, base)

    fabric = None
    if need_fabric:
        overrides = fabric_overrides(config)
        if getattr(args, "subarray", None):
            rows, cols = _parse_subarray(args.subarray)
            overrides["subarray_rows"] = rows
            overrides["subarray_cols"] = cols
        if getattr(args, "bitcell", None):
            overrides["bitcell"] = BitcellType.parse(args.bitcell)
        if getattr(args, "no_parasitics", False):
            overrides["parasitics_enabled"] = False
        overrides.setdefault("subarray_rows", 32)
        overrides.setdefault("subarray_cols", 32)
        fabric = FabricConfig(technology=tech, **overrides)
    return tech, fabric


def _log_run(args, tech, fabric=None) -> None:
    parts = [f"seed={getattr(args, 'seed', 0)}"]
    if fabric is not None:
        parts.append(f"fabric={fabric.subarray_rows}x{fabric.subarray_cols} "
                     f"bitcell={fabric.bitcell.value} "
                     f"parasitics={fabric.parasitics_enabled}")
    parts.append(f"tech={tech}")
    print("resolved:", " ".join(parts), file=sys.stderr)


def cmd_train(args) -> int:
    data_dir = _data_dir(args)
    train_ds = load_split(data_dir, "train")
    test_ds = load_split(data_dir, "test")
    spec = TrainSpec(epochs=args.epochs, batch_size=args.batch_size,
                     learning_rate=args.lr, momentum=args.momentum,
                     seed=args.seed)
    print(f"resolved: {spec}", file=sys.stderr)
    model = train(train_ds, test_ds, spec)
    save_model(model, args.out)
    accuracy = digital_accuracy(model, test_ds)
    print(f"digital test accuracy: {accuracy:.4f}")
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def cmd_map(args) -> int:
    model = load_model(args.weights)
    rows, cols = _parse_subarray(args.subarray)
    print(f"resolved: seed={args.seed} subarray={rows}x{cols} "
          f"model={'x'.join(str(d) for d in model.layer_dims)}",
          file=sys.stderr)
    fabric = FabricConfig(rows, cols, technology_by_name("MRAM"))
    plans = plan_network(model, fabric)
    sys.stdout.write(format_plan(plans))
    return 0


def cmd_infer(args) -> int:
    tech, fabric = _resolve(args)
    _log_run(args, tech, fabric)
    model = load_model(args.weights)
    dataset = load_split(_data_dir(args), "test")
    n_images = min(args.images, len(dataset))
    net = deploy(model, fabric)
    report = evaluate(net, dataset, n_images, seed=args.seed, jobs=args.jobs)
    print(report.CSV_HEADER)
    print(report.to_csv_row())
    print(report.summary(), file=sys.stderr)
    return 0


def cmd_snr(args) -> int:
    tech, fabric = _resolve(args)
    _log_run(args, tech, fabric)
    result = measure_snr(fabric)
    print("size,tech,bitcell,parasitics,signal_v,snr")
    print(f"{result.size},{result.tech},{result.bitcell},"
          f"{int(result.parasitics)},{result.signal:.10g},{result.snr:.10g}")
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config) if args.config else {}
    techs = []
    for name in args.techs.split(","):
        techs.append(resolve_technology(config, technology_by_name(name.strip())))
    sizes = [_parse_subarray(s.strip()) for s in args.sizes.split(",")]
    bitcells = [BitcellType.parse(b.strip()) for b in args.bitcells.split(",")]
    spec = SweepSpec(sizes=sizes, technologies=techs, bitcells=bitcells,
                     parasitics=not args.no_parasitics,
                     images_per_point=args.images, seed=args.seed,
                     per_tech_baseline=args.per_tech_baseline)
    print(f"resolved: {len(sizes)}x{len(techs)}x{len(bitcells)} points "
          f"seed={args.seed} images={args.images}", file=sys.stderr)

    model = dataset = None
    if args.images > 0:
        model = load_model(args.weights)
        dataset = load_split(_data_dir(args), "test")
    rows = run_sweep(spec, model, dataset, jobs=args.jobs, log=sys.stderr)
    sys.stdout.write(rows_to_csv(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xbarsim",
        description="Crossbar fabric simulator for binarized DNN inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fabric_flags=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON config file merged under flags")
        p.add_argument("--jobs", type=int, default=1)
        if fabric_flags:
            p.add_argument("--subarray", help="subarray size N or NxM")
            p.add_argument("--tech", help="technology name (MRAM, CBRAM, PCM)")
            p.add_argument("--bitcell", help="0T1R or 1T1R")
            p.add_argument("--no-parasitics", action="store_true")

    p = sub.add_parser("train", help="train the reference binarized model")
    p.add_argument("--data", help="dataset directory (IDX files)")
    p.add_argument("--out", required=True, help="output weight file")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.0)
    common(p, fabric_flags=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("map", help="print the tile plan for a weight file")
    p.add_argument("--weights", required=True)
    p.add_argument("--subarray", required=True, help="subarray size N or NxM")
    common(p, fabric_flags=False)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("infer", help="run analog inference and report accuracy")
    p.add_argument("--weights", required=True)
    p.add_argument("--data")
    p.add_argument("--images", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("snr", help="measure the all-ones-pattern SNR of a fabric")
    common(p)
    p.set_defaults(func=cmd_snr)

    p = sub.add_parser("sweep", help="sweep sizes x technologies x bitcells")
    p.add_argument("--sizes", default="32,64,128,256")
    p.add_argument("--techs", default="MRAM,CBRAM,PCM")
    p.add_argument("--bitcells", default="0T1R,1T1R")
    p.add_argument("--images", type=int, default=0)
    p.add_argument("--weights")
    p.add_argument("--data")
    p.add_argument("--per-tech-baseline", action="store_true")
    common(p, fabric_flags=False)
    p.add_argument("--no-parasitics", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverDivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except (ConfigError, IdxFormatError, ModelFormatError, FileNotFoundError,
            NotADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
