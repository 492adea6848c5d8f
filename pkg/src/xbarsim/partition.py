"""Tiling of weight matrices onto fixed-size crossbar subarrays.

A matrix of (inputs x outputs) is cut horizontally into row bands (each
band at most subarray_rows tall) and vertically into output groups (each
group at most subarray_cols/2 outputs wide, one differential column pair
per output).  Horizontal neighbours of one output form an accumulation
chain: partial currents flow tile-to-tile through DEMUX routing and are
summed; vertical groups are simply concatenated at the switch blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .devices import FabricConfig


@dataclass(frozen=True)
class Tile:
    """One subarray-sized piece of a weight matrix.

    row_range/out_range are half-open intervals into the original matrix;
    h_index is the tile's position along its accumulation chain, v_index
    the vertical group it belongs to.
    """

    row_range: tuple[int, int]
    out_range: tuple[int, int]
    h_index: int
    v_index: int

    @property
    def n_rows(self) -> int:
        return self.row_range[1] - self.row_range[0]

    @property
    def n_outputs(self) -> int:
        return self.out_range[1] - self.out_range[0]


@dataclass
class PartitionPlan:
    """Complete tiling of one weight matrix.

    tiles are indexed h-major: tile id = h_index * v_p + v_index.
    chains[o] lists, in accumulation order, the tile ids whose partial
    currents make up output o; the last chain element feeds the neuron.
    """

    matrix_rows: int
    matrix_outputs: int
    h_p: int
    v_p: int
    tiles: list[Tile]
    chains: list[list[int]] = field(repr=False)

    @property
    def n_tiles(self) -> int:
        return len(self.tiles)

    def tiles_in_group(self, v_index: int) -> list[int]:
        return [i for i, t in enumerate(self.tiles) if t.v_index == v_index]


def plan_partitions(matrix_rows: int, matrix_outputs: int,
                    fabric: FabricConfig) -> PartitionPlan:
    """Tile an (inputs x outputs) matrix onto fabric-sized subarrays.

    Splits are equal-sized except that remainders go to the last
    partition in each direction.  An output's differential column pair
    never straddles a vertical boundary.
    """
    if matrix_rows < 1 or matrix_outputs < 1:
        raise ValueError("matrix must have at least one row and one output")
    n = fabric.subarray_rows
    pairs = fabric.output_pairs
    h_p = -(-matrix_rows // n)
    v_p = -(-matrix_outputs // pairs)

    row_cuts = [min(i * n, matrix_rows) for i in range(h_p)] + [matrix_rows]
    out_cuts = [min(j * pairs, matrix_outputs) for j in range(v_p)] + [matrix_outputs]

    tiles = []
    for h in range(h_p):
        for v in range(v_p):
            tiles.append(Tile(row_range=(row_cuts[h], row_cuts[h + 1]),
                              out_range=(out_cuts[v], out_cuts[v + 1]),
                              h_index=h, v_index=v))

    chains = []
    for o in range(matrix_outputs):
        v = next(j for j in range(v_p) if out_cuts[j] <= o < out_cuts[j + 1])
        chains.append([h * v_p + v for h in range(h_p)])

    return PartitionPlan(matrix_rows=matrix_rows, matrix_outputs=matrix_outputs,
                         h_p=h_p, v_p=v_p, tiles=tiles, chains=chains)


def plan_network(model, fabric: FabricConfig) -> list[PartitionPlan]:
    """One partition plan per layer of a binarized model, in layer order."""
    return [plan_partitions(w.shape[0], w.shape[1], fabric) for w in model.weights]


def validate_plan(plan: PartitionPlan) -> list[str]:
    """All invariant violations of a plan; empty for planner output.

    Checks cell coverage/overlap, chain completeness and ordering, and
    that every tile sits inside the matrix.  Violations are returned as
    human-readable strings, not raised.
    """
    problems = []
    rows, outs = plan.matrix_rows, plan.matrix_outputs

    cover = [[0] * outs for _ in range(rows)]
    for idx, t in enumerate(plan.tiles):
        r0, r1 = t.row_range
        o0, o1 = t.out_range
        if r0 >= r1 or o0 >= o1:
            problems.append(f"tile {idx}: empty range")
            continue
        if r0 < 0 or r1 > rows or o0 < 0 or o1 > outs:
            problems.append(f"tile {idx}: range outside matrix")
            continue
        for r in range(r0, r1):
            for o in range(o0, o1):
                cover[r][o] += 1

    overlapped = sum(c > 1 for row in cover for c in row)
    uncovered = sum(c == 0 for row in cover for c in row)
    if overlapped:
        problems.append(f"{overlapped} cells covered by more than one tile")
    if uncovered:
        problems.append(f"{uncovered} cells not covered by any tile")

    if len(plan.chains) != outs:
        problems.append(f"expected {outs} chains, found {len(plan.chains)}")
    for o, chain in enumerate(plan.chains):
        if len(chain) != plan.h_p:
            problems.append(f"chain {o}: {len(chain)} tiles, expected h_p={plan.h_p}")
            continue
        bad = [i for i in chain if not 0 <= i < len(plan.tiles)]
        if bad:
            problems.append(f"chain {o}: unknown tile ids {bad}")
            continue
        h_seen = [plan.tiles[i].h_index for i in chain]
        if h_seen != sorted(set(h_seen)) or len(set(h_seen)) != plan.h_p:
            problems.append(f"chain {o}: h indices {h_seen} not 0..h_p-1 in order")
        for i in chain:
            t = plan.tiles[i]
            if not (t.out_range[0] <= o < t.out_range[1]):
                problems.append(f"chain {o}: tile {i} does not carry this output")

    group_span = sum(max((t.out_range[1] - t.out_range[0])
                         for t in plan.tiles if t.v_index == v)
                     for v in sorted({t.v_index for t in plan.tiles}))
    if plan.tiles and group_span != outs:
        problems.append(f"vertical group spans sum to {group_span}, expected {outs}")

    return problems


def format_plan(plans: list[PartitionPlan]) -> str:
    """Serialize plans to the one-tile-per-line text format.

    Columns: layer, h_index, v_index, row_range, out_range.  Ranges are
    half-open, printed as start:end.
    """
    lines = ["# layer h_index v_index rows outputs"]
    for layer, plan in enumerate(plans):
        lines.append(f"# layer {layer}: {plan.matrix_rows}x{plan.matrix_outputs} "
                     f"h_p={plan.h_p} v_p={plan.v_p} tiles={plan.n_tiles}")
        for t in plan.tiles:
            lines.append(f"{layer} {t.h_index} {t.v_index} "
                         f"{t.row_range[0]}:{t.row_range[1]} "
                         f"{t.out_range[0]}:{t.out_range[1]}")
    return "\n".join(lines) + "\n"
