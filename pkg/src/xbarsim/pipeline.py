"""Deployment of a binarized model onto tiles and the analog forward pass.

Horizontal partitions of a layer form accumulation chains: each tile
contributes partial column currents that are summed tile-to-tile (current
mode, into virtual ground, hence lossless apart from an I^2*R routing
power term).  Vertical partitions are concatenated.  The sensed
differential voltage is thresholded to a full-swing {0, VDD} drive for
the next layer.

In ideal mode (parasitics disabled) tile currents are carried internally
as exact integer pair counts: with binary weights every mapped pair has
conductances {g_low, g_high}, so a column current is
VDD * (N+ * g_low + N- * g_high) with integer N+/N-.  Chain accumulation
then commutes exactly regardless of the split, which makes partition
invariance and agreement with the digital reference bit-exact instead of
merely close.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import SolverDivergenceError, TileOperator
from .devices import BinarizedModel, FabricConfig
from .neuron import NoiseStream
from .partition import PartitionPlan, Tile, plan_network


@dataclass(frozen=True)
class PeripheralInventory:
    """Counts of analog peripherals instantiated by a deployment."""

    neurons: int
    demuxes: int
    switches: int


@dataclass
class DeployedTile:
    tile: Tile
    weights: np.ndarray = field(repr=False)  # int8 (rows, outputs), {-1,+1}


@dataclass
class DeployedNetwork:
    """A binarized model mapped onto one fabric."""

    model: BinarizedModel
    fabric: FabricConfig
    plans: list[PartitionPlan]
    layer_tiles: list[list[DeployedTile]] = field(repr=False)
    inventory: PeripheralInventory

    def __post_init__(self) -> None:
        self._operators: dict[tuple[int, int], TileOperator] = {}

    @property
    def tile_counts(self) -> list[int]:
        return [p.n_tiles for p in self.plans]

    def cell_conductances(self) -> tuple[float, float]:
        return self.fabric.cell_resistances()

    def operator(self, layer: int, tile_index: int) -> TileOperator:
        """Per-tile linear response map, built on first use and cached."""
        key = (layer, tile_index)
        op = self._operators.get(key)
        if op is None:
            dt = self.layer_tiles[layer][tile_index]
            r_lo, r_hi = self.fabric.cell_resistances()
            g_lo, g_hi = 1.0 / r_lo, 1.0 / r_hi
            pos = dt.weights == 1
            g_plus = np.where(pos, g_lo, g_hi)
            g_minus = np.where(pos, g_hi, g_lo)
            try:
                op = TileOperator(g_plus, g_minus, self.fabric)
            except (RuntimeError, np.linalg.LinAlgError) as exc:
                raise SolverDivergenceError(
                    f"tile (layer {layer}, h {dt.tile.h_index}, "
                    f"v {dt.tile.v_index}) failed to solve: {exc}",
                    residual=float("nan"))
            self._operators[key] = op
        return op

    def build_operators(self) -> None:
        """Materialize every tile operator up front (single-threaded)."""
        for layer, tiles in enumerate(self.layer_tiles):
            for t_idx in range(len(tiles)):
                self.operator(layer, t_idx)


@dataclass
class EvaluationReport:
    """Accuracy and mean power of one deployment over an image subset."""

    accuracy: float
    images_evaluated: int
    power_total: float
    power_breakdown: dict[str, float]
    tile_counts: list[int]

    CSV_HEADER = "images,accuracy,p_total_w,p_xbar_w,p_neuron_w,p_demux_w,p_switch_w,tiles"

    def to_csv_row(self) -> str:
        b = self.power_breakdown
        tiles = "/".join(str(t) for t in self.tile_counts)
        return (f"{self.images_evaluated},{self.accuracy:.6f},"
                f"{self.power_total:.10g},{b['crossbar']:.10g},"
                f"{b['neurons']:.10g},{b['demux']:.10g},{b['switches']:.10g},"
                f"{tiles}")

    def summary(self) -> str:
        b = self.power_breakdown
        return (f"accuracy {self.accuracy:.4f} over {self.images_evaluated} images; "
                f"mean power {self.power_total * 1e3:.3f} mW "
                f"(crossbar {b['crossbar'] * 1e3:.3f}, neurons {b['neurons'] * 1e3:.3f}, "
                f"demux {b['demux'] * 1e3:.3f}, switches {b['switches'] * 1e3:.3f}); "
                f"tiles {'/'.join(str(t) for t in self.tile_counts)}")


def deploy(model: BinarizedModel, fabric: FabricConfig) -> DeployedNetwork:
    """Partition every layer and map its weights onto tiles."""
    plans = plan_network(model, fabric)
    layer_tiles = []
    demuxes = 0
    switches = 0
    for w, plan in zip(model.weights, plans):
        tiles = []
        for t in plan.tiles:
            block = w[t.row_range[0]:t.row_range[1], t.out_range[0]:t.out_range[1]]
            tiles.append(DeployedTile(tile=t, weights=np.ascontiguousarray(block)))
        layer_tiles.append(tiles)
        demuxes += (plan.h_p - 1) * plan.v_p
        switches += plan.n_tiles
    inventory = PeripheralInventory(neurons=sum(model.layer_dims[1:]),
                                    demuxes=demuxes, switches=switches)
    return DeployedNetwork(model=model, fabric=fabric, plans=plans,
                           layer_tiles=layer_tiles, inventory=inventory)


def forward_digital(model: BinarizedModel, image_bits: np.ndarray) -> int:
    """Integer reference forward pass for one {0,1} input vector."""
    return int(forward_digital_batch(model, np.asarray(image_bits)[None, :])[0])


def forward_digital_batch(model: BinarizedModel, bits: np.ndarray) -> np.ndarray:
    """Digital oracle over a (B, inputs) batch of {0,1} vectors.

    z = x @ W with exact integers; hidden activation is 1 at z >= 0,
    the output layer is argmax with ties to the lowest index.
    """
    x = np.asarray(bits).astype(np.int64)
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise ValueError(f"expected (batch, {model.n_inputs}) bits, got {x.shape}")
    for k, w in enumerate(model.weights):
        z = x @ w.astype(np.int64)
        if k < model.n_layers - 1:
            x = (z >= 0).astype(np.int64)
    return np.argmax(z, axis=1)


def forward_analog(net: DeployedNetwork, image: np.ndarray, seed: int = 0) -> int:
    """Analog forward pass of one image given as row drive voltages."""
    v = np.asarray(image, dtype=float)
    if v.shape != (net.model.n_inputs,):
        raise ValueError(f"expected {net.model.n_inputs} input voltages")
    bits = (v >= net.fabric.technology.vdd / 2).astype(np.uint8)
    classes, _ = _forward_batch(net, bits[None, :], base_seed=seed,
                                image_indices=np.array([0]))
    return int(classes[0])


def layer_currents(net: DeployedNetwork, layer: int, bits: np.ndarray):
    """Chained+concatenated differential currents of one layer.

    bits is a (B, layer_inputs) array of {0,1}; returns (i_plus, i_minus)
    in amperes, shape (B, layer_outputs), accumulated tile by tile in
    chain order exactly as the forward pass does.
    """
    x = np.asarray(bits).astype(np.int64)
    if net.fabric.parasitics_enabled:
        i_plus, i_minus, _, _, _ = _parasitic_layer(net, layer, x)
    else:
        i_plus, i_minus, _ = _ideal_layer(net, layer, x)
    return i_plus, i_minus


def _parasitic_layer(net: DeployedNetwork, layer: int, x: np.ndarray):
    """One layer through the tile operators; returns currents and powers."""
    tech = net.fabric.technology
    plan = net.plans[layer]
    batch = x.shape[0]
    v_in = x.astype(float) * tech.vdd
    i_plus = np.zeros((batch, plan.matrix_outputs))
    i_minus = np.zeros((batch, plan.matrix_outputs))
    p_xbar = np.zeros(batch)
    p_demux = np.zeros(batch)
    p_switch = np.zeros(batch)
    for v_idx in range(plan.v_p):
        for h_idx in range(plan.h_p):
            t_idx = h_idx * plan.v_p + v_idx
            dt = net.layer_tiles[layer][t_idx]
            r0, r1 = dt.tile.row_range
            o0, o1 = dt.tile.out_range
            op = net.operator(layer, t_idx)
            foot = op.foot_currents(v_in[:, r0:r1])
            ip_t = foot[:, 0::2]
            im_t = foot[:, 1::2]
            p_switch += (ip_t ** 2 + im_t ** 2).sum(axis=1) * tech.r_switch
            i_plus[:, o0:o1] += ip_t
            i_minus[:, o0:o1] += im_t
            if h_idx < plan.h_p - 1:
                # cumulative partial currents forwarded through the DEMUX
                p_demux += ((i_plus[:, o0:o1] ** 2 + i_minus[:, o0:o1] ** 2)
                            .sum(axis=1) * tech.r_demux)
            p_xbar += (v_in[:, r0:r1] *
                       op.input_currents(v_in[:, r0:r1])).sum(axis=1)
    return i_plus, i_minus, p_xbar, p_demux, p_switch


def _ideal_layer(net: DeployedNetwork, layer: int, x: np.ndarray):
    """One layer in the exact integer representation (no parasitics).

    Partial sums are the integers z = N+ - N- and s = N+ + N-, so the
    chain accumulation is associative and the result is bit-identical
    for every (h_p, v_p) split of the layer.
    """
    tech = net.fabric.technology
    r_lo, r_hi = net.fabric.cell_resistances()
    g_lo, g_hi = 1.0 / r_lo, 1.0 / r_hi
    plan = net.plans[layer]
    batch = x.shape[0]
    z = np.zeros((batch, plan.matrix_outputs), dtype=np.int64)
    s_total = np.zeros(batch, dtype=np.int64)
    for v_idx in range(plan.v_p):
        for h_idx in range(plan.h_p):
            t_idx = h_idx * plan.v_p + v_idx
            dt = net.layer_tiles[layer][t_idx]
            r0, r1 = dt.tile.row_range
            o0, o1 = dt.tile.out_range
            z[:, o0:o1] += x[:, r0:r1] @ dt.weights.astype(np.int64)
            if v_idx == 0:
                s_total += x[:, r0:r1].sum(axis=1)
    n_plus = (s_total[:, None] + z) // 2
    n_minus = (s_total[:, None] - z) // 2
    i_plus = tech.vdd * (n_plus * g_lo + n_minus * g_hi)
    i_minus = tech.vdd * (n_minus * g_lo + n_plus * g_hi)
    p_xbar = (tech.vdd ** 2 * (g_lo + g_hi) * s_total.astype(float)
              * plan.matrix_outputs)
    return i_plus, i_minus, p_xbar


def _forward_batch(net: DeployedNetwork, bits: np.ndarray, base_seed: int,
                   image_indices: np.ndarray):
    """Run a batch through every layer; returns (classes, per-image powers).

    Noise streams are keyed by base_seed ^ global image index and drawn
    layer-major, neuron-minor within each image, so results do not
    depend on how the batch was chunked.
    """
    fabric = net.fabric
    tech = fabric.technology
    sigma = tech.sigma_noise

    batch = bits.shape[0]
    streams = None
    if sigma > 0.0:
        streams = [NoiseStream.for_image(base_seed, int(i)) for i in image_indices]

    p_xbar = np.zeros(batch)
    p_demux_var = np.zeros(batch)
    p_switch_var = np.zeros(batch)

    x = bits.astype(np.int64)
    v_diff = None
    for layer in range(net.model.n_layers):
        d_out = net.plans[layer].matrix_outputs
        if fabric.parasitics_enabled:
            i_plus, i_minus, px, pd, ps = _parasitic_layer(net, layer, x)
            p_demux_var += pd
            p_switch_var += ps
        else:
            i_plus, i_minus, px = _ideal_layer(net, layer, x)
        p_xbar += px

        v_diff = (i_plus - i_minus) * tech.r_sense
        if streams is not None:
            eta = np.empty((batch, d_out))
            for b in range(batch):
                eta[b] = streams[b].normal(d_out)
            v_diff = v_diff + sigma * eta

        if layer < net.model.n_layers - 1:
            x = (v_diff >= 0.0).astype(np.int64)

    classes = np.argmax(v_diff, axis=1)
    inv = net.inventory
    powers = {
        "crossbar": p_xbar,
        "neurons": np.full(batch, inv.neurons * tech.p_neuron),
        "demux": p_demux_var + inv.demuxes * tech.p_demux,
        "switches": p_switch_var + inv.switches * tech.p_switch,
    }
    return classes, powers


_CHUNK = 64  # fixed so that results are independent of the worker count


def evaluate(net: DeployedNetwork, dataset, n_images: int, seed: int = 0,
             jobs: int = 1) -> EvaluationReport:
    """Accuracy and mean power over the first n_images of a dataset.

    Deterministic for a given seed: images are processed in dataset
    order in fixed-size chunks, each image owns its noise stream, and
    the reduction runs in chunk order whatever the worker count.
    """
    if n_images < 1:
        raise ValueError("need at least one image to evaluate")
    if n_images > len(dataset.labels):
        raise ValueError(f"dataset has only {len(dataset.labels)} images")
    images = np.asarray(dataset.images[:n_images], dtype=float)
    labels = np.asarray(dataset.labels[:n_images])
    bits = (images >= 0.5).astype(np.uint8)
    if net.fabric.parasitics_enabled:
        net.build_operators()

    chunks = [(start, min(start + _CHUNK, n_images))
              for start in range(0, n_images, _CHUNK)]

    def run(chunk):
        start, stop = chunk
        return _forward_batch(net, bits[start:stop], base_seed=seed,
                              image_indices=np.arange(start, stop))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]

    classes = np.concatenate([r[0] for r in results])
    breakdown = {}
    for key in ("crossbar", "neurons", "demux", "switches"):
        per_image = np.concatenate([r[1][key] for r in results])
        breakdown[key] = float(per_image.mean())

    return EvaluationReport(
        accuracy=float(np.mean(classes == labels)),
        images_evaluated=n_images,
        power_total=float(sum(breakdown.values())),
        power_breakdown=breakdown,
        tile_counts=net.tile_counts,
    )
