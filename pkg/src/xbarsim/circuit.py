"""DC nodal analysis of one crossbar tile with interconnect parasitics.

The tile is an n x m grid of cells (m physical columns = m/2 differential
pairs).  Each row wire is a chain of per-segment resistances driven by an
ideal voltage source at its left end; each column wire is a chain ending
in a sense resistor to ground; every cell conductance bridges its row
node to its column node:

    src_i --r_seg-- (r i,0) --r_seg-- (r i,1) -- ... -- (r i,m-1)
                       |g(i,0)          |g(i,1)
                    (c 0,0)          (c 0,1)
                       |r_seg           |
                      ...              ...
                    (c n-1,0) --r_seg--+--r_sense-- gnd

Each column leaves the array through one final wire segment into its
sense resistor; the two appear as a single series conductance at the
foot node.  Unknowns are the 2*n*m node voltages.  The conductance matrix is
symmetric and diagonally dominant with strict dominance at the driven
and grounded nodes, hence positive definite.

When the wire segment resistance is zero (parasitics disabled) the wire
nodes collapse: every row node sits at its drive voltage and every
column node at the sense-node voltage, which has the closed form
v_j = r_sense * S_j / (1 + r_sense * D_j) with S_j = sum_i g_ij V_i and
D_j = sum_i g_ij.  No linear solve is needed in that case.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverDivergenceError(RuntimeError):
    """Iterative solve failed to reach tolerance within the iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def interleave_pairs(g_plus: np.ndarray, g_minus: np.ndarray) -> np.ndarray:
    """(n,k) differential pair conductances -> (n,2k) physical columns."""
    g_plus = np.asarray(g_plus, dtype=float)
    g_minus = np.asarray(g_minus, dtype=float)
    if g_plus.ndim != 2 or g_plus.shape != g_minus.shape:
        raise ValueError("g_plus and g_minus must be equal-shape 2-d arrays")
    n, k = g_plus.shape
    phys = np.empty((n, 2 * k))
    phys[:, 0::2] = g_plus
    phys[:, 1::2] = g_minus
    return phys


def ideal_mvm(g_plus: np.ndarray, g_minus: np.ndarray,
              inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parasitic-free column currents: I+ , I- and their difference.

    I_diff[o] = sum_k (g_plus[k,o] - g_minus[k,o]) * inputs[k], the pure
    analog dot product with every column at virtual ground.
    """
    g_plus = np.asarray(g_plus, dtype=float)
    g_minus = np.asarray(g_minus, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    if g_plus.shape != g_minus.shape:
        raise ValueError("g_plus and g_minus shapes differ")
    if inputs.shape != (g_plus.shape[0],):
        raise ValueError(f"inputs shape {inputs.shape} does not match "
                         f"{g_plus.shape[0]} rows")
    i_plus = inputs @ g_plus
    i_minus = inputs @ g_minus
    return i_plus, i_minus, i_plus - i_minus


@dataclass
class NodalSystem:
    """Assembled DC system of one tile.

    Node numbering: row node (i,j) -> i*m + j, column node (i,j) ->
    n*m + i*m + j.  `matrix` is None for the collapsed (zero wire
    resistance) case, where the solution is analytic.
    """

    n_rows: int
    n_cols: int
    cell_g: np.ndarray = field(repr=False)
    v_in: np.ndarray = field(repr=False)
    g_seg: float = 0.0
    r_sense: float = 10.0
    r_source: float = 0.0
    matrix: sp.csr_matrix | None = field(default=None, repr=False)
    rhs: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_unknowns(self) -> int:
        return 2 * self.n_rows * self.n_cols

    @property
    def collapsed(self) -> bool:
        return self.matrix is None

    @property
    def g_foot(self) -> float:
        """Series conductance of the foot segment plus sense resistor."""
        r_seg = 0.0 if self.g_seg == 0.0 else 1.0 / self.g_seg
        return 1.0 / (r_seg + self.r_sense)

    @property
    def g_drive(self) -> float:
        """Series conductance from a driver to its first row node."""
        r_seg = 0.0 if self.g_seg == 0.0 else 1.0 / self.g_seg
        return 1.0 / (self.r_source + r_seg)

    def row_node(self, i: int, j: int) -> int:
        return i * self.n_cols + j

    def col_node(self, i: int, j: int) -> int:
        return self.n_rows * self.n_cols + i * self.n_cols + j


@dataclass
class TileSolution:
    """Node voltages and column foot currents of one solved tile."""

    voltages: np.ndarray = field(repr=False)
    foot_currents: np.ndarray = field(repr=False)
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0


def build_network(g_plus: np.ndarray, g_minus: np.ndarray, fabric,
                  inputs: np.ndarray, r_source: float = 0.0) -> NodalSystem:
    """Assemble the nodal system of one tile under the given row drives.

    With fabric.parasitics_enabled=False the wire segment resistance is
    taken as zero and no matrix is assembled (the node voltages collapse
    analytically).  r_source adds a per-driver series resistance; the
    default 0 models ideal voltage sources.
    """
    tech = fabric.technology
    r_seg = tech.r_wire_seg if fabric.parasitics_enabled else 0.0
    return build_network_raw(interleave_pairs(g_plus, g_minus), inputs,
                             r_wire_seg=r_seg, r_sense=tech.r_sense,
                             r_source=r_source)


def build_network_raw(cell_g: np.ndarray, inputs: np.ndarray,
                      r_wire_seg: float, r_sense: float,
                      r_source: float = 0.0) -> NodalSystem:
    """build_network on a bare physical conductance grid (any column count)."""
    cell_g = np.asarray(cell_g, dtype=float)
    if cell_g.ndim != 2:
        raise ValueError("cell conductance grid must be 2-d")
    if not np.isfinite(cell_g).all() or (cell_g <= 0).any():
        raise ValueError("cell conductances must be finite and positive")
    inputs = np.asarray(inputs, dtype=float)
    n, m = cell_g.shape
    if inputs.shape != (n,):
        raise ValueError(f"need {n} input voltages, got shape {inputs.shape}")
    if not np.isfinite(inputs).all():
        raise ValueError("input voltages must be finite")

    system = NodalSystem(n_rows=n, n_cols=m, cell_g=cell_g, v_in=inputs,
                         g_seg=0.0 if r_wire_seg == 0.0 else 1.0 / r_wire_seg,
                         r_sense=r_sense, r_source=r_source)
    if r_wire_seg == 0.0:
        if r_source > 0.0:
            raise ValueError("source resistance needs the assembled (parasitic) "
                             "network; zero-wire tiles collapse around ideal "
                             "drivers only")
        return system

    system.matrix, system.rhs = _assemble(cell_g, inputs,
                                          system.g_seg, system.g_drive,
                                          1.0 / (r_wire_seg + r_sense))
    return system


def _assemble(cell_g, v_in, g_seg, g_drive, g_foot):
    n, m = cell_g.shape
    nm = n * m
    idx = np.arange(nm).reshape(n, m)
    row_nodes = idx
    col_nodes = nm + idx

    rows, cols, vals = [], [], []

    def two_node(a, b, g):
        rows.extend((a, b, a, b))
        cols.extend((a, b, b, a))
        vals.extend((g, g, -g, -g))

    # driven source through source resistance + first row segment:
    # diagonal + rhs only
    src = row_nodes[:, 0]
    rows.append(src)
    cols.append(src)
    vals.append(np.full(n, g_drive))

    seg = np.full((n, m - 1), g_seg).ravel()
    two_node(row_nodes[:, :-1].ravel(), row_nodes[:, 1:].ravel(), seg)

    seg = np.full((n - 1, m), g_seg).ravel()
    two_node(col_nodes[:-1, :].ravel(), col_nodes[1:, :].ravel(), seg)

    foot = col_nodes[-1, :]
    rows.append(foot)
    cols.append(foot)
    vals.append(np.full(m, g_foot))

    two_node(row_nodes.ravel(), col_nodes.ravel(), cell_g.ravel())

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(2 * nm, 2 * nm)).tocsr()

    rhs = np.zeros(2 * nm)
    rhs[src] = g_drive * v_in
    return matrix, rhs


def _solve_collapsed(system: NodalSystem) -> TileSolution:
    g = system.cell_g
    v = system.v_in
    s = v @ g
    d = g.sum(axis=0)
    v_col = system.r_sense * s / (1.0 + system.r_sense * d)
    foot = s - d * v_col

    n, m = g.shape
    voltages = np.empty(2 * n * m)
    voltages[:n * m] = np.repeat(v, m)
    voltages[n * m:] = np.tile(v_col, n)
    return TileSolution(voltages=voltages, foot_currents=foot,
                        converged=True, iterations=0, residual=0.0)


def solve_dc(system: NodalSystem, tolerance: float = 1e-12,
             max_iter: int | None = None) -> TileSolution:
    """Solve the tile to a relative residual <= tolerance.

    Uses Jacobi-preconditioned conjugate gradients on the assembled SPD
    system; the collapsed (zero wire resistance) case is returned
    analytically.  Raises SolverDivergenceError when the iteration cap
    is hit without convergence.  The tight default keeps even the
    smallest column currents accurate to well below 1e-6 relative on
    high-resistance technologies.
    """
    if system.collapsed:
        return _solve_collapsed(system)
    a, b = system.matrix, system.rhs
    if max_iter is None:
        max_iter = 20 * system.n_unknowns

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        zeros = np.zeros(system.n_unknowns)
        return TileSolution(voltages=zeros, foot_currents=np.zeros(system.n_cols))

    precond = sp.diags(1.0 / a.diagonal())
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = spla.cg(a, b, rtol=tolerance, atol=0.0, maxiter=max_iter,
                      M=precond, callback=count)
    residual = float(np.linalg.norm(b - a @ x) / b_norm)
    if info != 0:
        raise SolverDivergenceError(
            f"conjugate gradient did not reach {tolerance:g} within "
            f"{max_iter} iterations (residual {residual:.3e})", residual)
    return TileSolution(voltages=x, foot_currents=_foot_currents(system, x),
                        converged=True, iterations=iterations, residual=residual)


def solve_direct(system: NodalSystem) -> TileSolution:
    """Sparse-LU solve of the same system; bit-reproducible and fast.

    Used where one tile is solved for many right-hand sides or where
    iteration counts would dominate runtime; agrees with solve_dc to the
    solver tolerance (asserted in the test suite).
    """
    if system.collapsed:
        return _solve_collapsed(system)
    lu = spla.splu(system.matrix.tocsc())
    x = lu.solve(system.rhs)
    b_norm = np.linalg.norm(system.rhs)
    residual = 0.0
    if b_norm > 0:
        residual = float(np.linalg.norm(system.rhs - system.matrix @ x) / b_norm)
    return TileSolution(voltages=x, foot_currents=_foot_currents(system, x),
                        converged=True, iterations=0, residual=residual)


def dense_solve_oracle(system: NodalSystem) -> TileSolution:
    """Brute-force dense factorization of a small tile (tests only)."""
    if system.collapsed:
        raise ValueError("collapsed system has no assembled matrix to factor")
    if system.n_unknowns > 512:
        raise ValueError(f"oracle limited to 512 unknowns, got {system.n_unknowns}")
    x = np.linalg.solve(system.matrix.toarray(), system.rhs)
    return TileSolution(voltages=x, foot_currents=_foot_currents(system, x),
                        converged=True, iterations=0, residual=0.0)


def _foot_currents(system: NodalSystem, x: np.ndarray) -> np.ndarray:
    nm = system.n_rows * system.n_cols
    foot_v = x[nm:].reshape(system.n_rows, system.n_cols)[-1, :]
    return foot_v * system.g_foot


def crossbar_power(system: NodalSystem, solution: TileSolution) -> float:
    """Total dissipation: sum of (dV)^2 * G over every resistive element.

    Covers wire segments, cells and sense resistors; equals the power
    delivered by the row sources (energy conservation).
    """
    if not solution.converged:
        raise ValueError("cannot account power of an unconverged solution")
    n, m = system.n_rows, system.n_cols
    nm = n * m
    vr = solution.voltages[:nm].reshape(n, m)
    vc = solution.voltages[nm:].reshape(n, m)

    power = float(((vr - vc) ** 2 * system.cell_g).sum())
    if system.g_seg > 0.0 or system.r_sense > 0.0:
        power += float((vc[-1, :] ** 2).sum() * system.g_foot)
    if system.g_seg > 0.0:
        power += float(((system.v_in - vr[:, 0]) ** 2).sum() * system.g_drive)
        power += float(((vr[:, :-1] - vr[:, 1:]) ** 2).sum() * system.g_seg)
        power += float(((vc[:-1, :] - vc[1:, :]) ** 2).sum() * system.g_seg)
    return power


def source_power(system: NodalSystem, solution: TileSolution) -> float:
    """Power delivered by the row drivers, sum of V_in * I_in."""
    currents = input_currents(system, solution)
    return float(system.v_in @ currents)


def input_currents(system: NodalSystem, solution: TileSolution) -> np.ndarray:
    """Current drawn from each row driver."""
    n, m = system.n_rows, system.n_cols
    vr = solution.voltages[:n * m].reshape(n, m)
    if system.collapsed:
        vc = solution.voltages[n * m:].reshape(n, m)
        return ((system.v_in[:, None] - vc) * system.cell_g).sum(axis=1)
    return (system.v_in - vr[:, 0]) * system.g_drive


def dump_netlist(system: NodalSystem) -> str:
    """Tile as a text netlist (node_a, node_b, conductance in siemens).

    Nodes are named in{i} for driven inputs, r{i}_{j} / c{i}_{j} for row
    and column wire nodes and gnd for ground; sources appear as V lines
    so the listing can be fed to an external circuit simulator.  The
    G_foot line per column lumps the exit wire segment in series with
    the sense resistor.
    """
    n, m = system.n_rows, system.n_cols
    lines = [f"* crossbar tile {n}x{m}, "
             f"{'collapsed wires' if system.collapsed else 'parasitic wires'}"]
    for i in range(n):
        lines.append(f"V{i} in{i} gnd {system.v_in[i]:.17g}")
    if not system.collapsed:
        for i in range(n):
            lines.append(f"G_src{i} in{i} r{i}_0 {system.g_seg:.17g}")
            for j in range(m - 1):
                lines.append(f"G_row{i}_{j} r{i}_{j} r{i}_{j + 1} {system.g_seg:.17g}")
        for j in range(m):
            for i in range(n - 1):
                lines.append(f"G_col{i}_{j} c{i}_{j} c{i + 1}_{j} {system.g_seg:.17g}")
    for i in range(n):
        for j in range(m):
            a = f"in{i}" if system.collapsed else f"r{i}_{j}"
            lines.append(f"G_cell{i}_{j} {a} c{i}_{j} {system.cell_g[i, j]:.17g}")
    for j in range(m):
        lines.append(f"G_foot{j} c{n - 1}_{j} gnd {system.g_foot:.17g}")
    return "\n".join(lines) + "\n"


class TileOperator:
    """Precomputed linear response of one tile.

    The tile network is linear, so its column foot currents and row
    input currents are fixed linear maps of the drive vector.  The maps
    are extracted once per tile (one factorized solve per row for the
    parasitic case, closed form for the collapsed case) and evaluation
    reduces to dense matrix products.  Agreement with solve_dc is part
    of the test suite.
    """

    def __init__(self, g_plus: np.ndarray, g_minus: np.ndarray, fabric,
                 rhs_chunk: int = 64):
        cell_g = interleave_pairs(g_plus, g_minus)
        n, m = cell_g.shape
        self.n_rows = n
        self.n_cols = m
        tech = fabric.technology
        self.r_sense = tech.r_sense
        parasitic = fabric.parasitics_enabled and tech.r_wire_seg > 0.0

        if not parasitic:
            d = cell_g.sum(axis=0)
            scale = 1.0 / (1.0 + self.r_sense * d)
            # foot[j] = S_j * scale_j, with S = V @ cell_g
            self.foot_map = (cell_g * scale).T.copy()
            v_map = (self.r_sense * scale) * cell_g          # v_col per drive
            self.input_map = np.diag(cell_g.sum(axis=1)) - v_map @ cell_g.T
            return

        system = build_network(g_plus, g_minus, fabric, np.zeros(n))
        lu = spla.splu(system.matrix.tocsc())
        nm = n * m
        g_seg = system.g_seg
        g_foot = system.g_foot

        foot_map = np.empty((m, n))
        first_row_v = np.empty((n, n))
        for start in range(0, n, rhs_chunk):
            stop = min(start + rhs_chunk, n)
            rhs = np.zeros((2 * nm, stop - start))
            for k, i in enumerate(range(start, stop)):
                rhs[i * m, k] = g_seg
            x = lu.solve(rhs)
            foot_map[:, start:stop] = x[nm:].reshape(n, m, stop - start)[-1] * g_foot
            first_row_v[:, start:stop] = x[:nm].reshape(n, m, stop - start)[:, 0]
        self.foot_map = foot_map
        self.input_map = g_seg * (np.eye(n) - first_row_v)

    def foot_currents(self, v_in: np.ndarray) -> np.ndarray:
        """Column foot currents for one drive vector or a (B,n) batch."""
        return np.asarray(v_in, dtype=float) @ self.foot_map.T

    def input_currents(self, v_in: np.ndarray) -> np.ndarray:
        """Row driver currents for one drive vector or a (B,n) batch."""
        return np.asarray(v_in, dtype=float) @ self.input_map.T
