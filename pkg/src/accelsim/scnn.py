"""Cycle model of an SCNN-style Cartesian-product sparse accelerator.

Outputs are split over a PE grid in X/Y and each PE holds the input
activations at its outputs' coordinates; every PE holds all weights. Per input channel a PE walks its nonzero activations and nonzero
weights four at a time, multiplying each 4x4 pair of chunks in one cycle.
Products are steered to accumulator banks; two products landing in the same
bank in one cycle serialise. Partial sums for outputs owned by another PE
are shipped after compute at one per neighbour per cycle.

Non-unit strides are handled by splitting the layer into stride phase
groups, each of which is a unit-stride convolution.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .cycles import CycleReport, ceil_div
from .tensor import LayerSpec, check_shapes


@dataclass(frozen=True)
class ScnnConfig:
    pe_grid_x: int = 8
    pe_grid_y: int = 8
    mults_a: int = 4   # activations per Cartesian product
    mults_w: int = 4   # weights per Cartesian product
    accumulator_banks: int = 32
    halo_sends_per_cycle: int = 1

    @property
    def multipliers_per_pe(self) -> int:
        return self.mults_a * self.mults_w

    @property
    def total_multipliers(self) -> int:
        return self.pe_grid_x * self.pe_grid_y * self.multipliers_per_pe


@dataclass(frozen=True)
class StrideGroup:
    """One stride phase: taps with (fx % s, fy % s) == (px, py) and the
    activations at matching coordinates."""

    px: int
    py: int
    taps: tuple[tuple[int, int], ...]
    act_x: tuple[int, ...]
    act_y: tuple[int, ...]


def partition_stride_groups(layer: LayerSpec) -> list[StrideGroup]:
    s = layer.stride
    groups = []
    for px in range(s):
        for py in range(s):
            taps = tuple((fx, fy) for fx in range(px, layer.fx, s) for fy in range(py, layer.fy, s))
            if not taps:
                continue
            groups.append(StrideGroup(px, py, taps,
                                      tuple(range(px, layer.ax, s)), tuple(range(py, layer.ay, s))))
    return groups


def _tile_bounds(out_extent: int, act_extent: int, parts: int) -> list[int]:
    """Tile starts along one axis. Outputs are split into ``parts``
    near-equal tiles (extra parts stay empty) and each PE holds the
    activations at its outputs' coordinates; the border activations past
    the last output go to the last PE that owns outputs."""
    size = ceil_div(out_extent, parts)
    bounds = [min(out_extent, i * size) for i in range(parts + 1)]
    return [max(act_extent, b) if b == out_extent else b for b in bounds]


def _owner(coord: int, bounds: list[int]) -> int:
    for i in range(len(bounds) - 1):
        if bounds[i] <= coord < bounds[i + 1]:
            return i
    raise IndexError(coord)


@dataclass
class PeStats:
    compute: int = 0
    products: int = 0
    halo: int = 0
    halo_cycles: int = 0


def chunk_cost(acts: list[tuple[int, int]], wts: list[tuple[int, int, int]],
               layer: LayerSpec, banks: int) -> tuple[int, int]:
    """Cycles and valid products for one activation chunk x weight chunk.

    ``acts`` holds (x, y) in unit-stride group coordinates, ``wts`` holds
    (k, fx', fy'). Products whose output falls outside the layer are
    discarded before the crossbar.
    """
    ox_n, oy_n = layer.ox, layer.oy
    per_bank: Counter = Counter()
    for x, y in acts:
        for k, fx, fy in wts:
            ox, oy = x - fx, y - fy
            if 0 <= ox < ox_n and 0 <= oy < oy_n:
                per_bank[(ox + oy * ox_n + k * ox_n * oy_n) % banks] += 1
    products = sum(per_bank.values())
    return max(1, max(per_bank.values(), default=0)), products


def simulate_scnn(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray,
                  cfg: ScnnConfig = ScnnConfig(), dcnn_cycles: int = 0) -> CycleReport:
    check_shapes(layer, weights, activations)
    w = np.asarray(weights)
    a = np.asarray(activations)
    gx, gy = cfg.pe_grid_x, cfg.pe_grid_y
    pes = defaultdict(PeStats)

    for grp in partition_stride_groups(layer):
        s = layer.stride
        nx, ny = len(grp.act_x), len(grp.act_y)
        bx, by = _tile_bounds(layer.ox, nx, gx), _tile_bounds(layer.oy, ny, gy)
        # per PE: distinct remote partial sums, keyed by destination PE
        remote: dict[tuple[int, int], dict[tuple[int, int], set]] = defaultdict(lambda: defaultdict(set))
        for c in range(layer.c):
            wts = [(k, fx // s, fy // s) for k in range(layer.kk) for fx, fy in grp.taps
                   if w[k, fx, fy, c] != 0]
            if not wts:
                continue
            plane = a[grp.px::s, grp.py::s, c]
            for i in range(gx):
                for j in range(gy):
                    acts = [(x, y) for x in range(bx[i], bx[i + 1]) for y in range(by[j], by[j + 1])
                            if plane[x, y] != 0]
                    if not acts:
                        continue
                    pe = pes[(i, j)]
                    for ai in range(0, len(acts), cfg.mults_a):
                        achunk = acts[ai:ai + cfg.mults_a]
                        for wi in range(0, len(wts), cfg.mults_w):
                            cyc, prods = chunk_cost(achunk, wts[wi:wi + cfg.mults_w], layer,
                                                    cfg.accumulator_banks)
                            pe.compute += cyc
                            pe.products += prods
                    for x, y in acts:
                        for k, fx, fy in wts:
                            ox, oy = x - fx, y - fy
                            if not (0 <= ox < layer.ox and 0 <= oy < layer.oy):
                                continue
                            dest = (_owner(ox, bx), _owner(oy, by))
                            if dest != (i, j):
                                remote[(i, j)][dest].add((ox, oy, k))
        for src, dests in remote.items():
            count = sum(len(v) for v in dests.values())
            pes[src].halo += count
            pes[src].halo_cycles += ceil_div(count, len(dests) * cfg.halo_sends_per_cycle)

    cycles = max((p.compute + p.halo_cycles for p in pes.values()), default=0)
    products = sum(p.products for p in pes.values())
    return CycleReport(layer=layer.name, arch="scnn", cycles=cycles, dcnn_cycles=dcnn_cycles,
                       macs=products)
