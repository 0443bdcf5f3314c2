"""Cycle counts for the dense baseline and the weight-skipping designs.

Every design is ``tiles`` tiles of ``k`` filters x ``n`` weight lanes. Filters
are dealt to tiles in groups of ``k``; one *pass* runs ``tiles`` groups
side by side over the same window sequence, so a pass lasts as long as its
slowest tile. Activation memory bandwidth is treated as unlimited.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import coding
from .schedule import PromotionPattern, TileSchedule, schedule_layer
from .tensor import LayerSpec, check_precision, check_shapes, unsigned16, window_view

DCNN = "dcnn"
TCL_WS = "tclWS"
TCL_P = "tclP"
TCL_E = "tclE"
MODES = (DCNN, TCL_WS, TCL_P, TCL_E)

ARCH_LABELS = {DCNN: "dcnn", TCL_WS: "tcl-ws", TCL_P: "tclp", TCL_E: "tcle"}


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class ArchConfig:
    mode: str = DCNN
    n: int = 16
    k: int = 16
    tiles: int = 4
    windows_parallel: int = 16
    pattern: PromotionPattern = field(default_factory=lambda: PromotionPattern(0))
    # tclE only: max exponent gap per oneffset before padding cycles are paid
    max_shift: int | None = None
    # recorded for completeness, never consulted by the timing model
    am_bytes: int | None = None
    wm_bytes: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if min(self.n, self.k, self.tiles, self.windows_parallel) < 1:
            raise ValueError("n, k, tiles and windows_parallel must be >= 1")
        self.pattern.validate_lanes(self.n)

    @property
    def label(self) -> str:
        return ARCH_LABELS[self.mode]

    @property
    def lanes_total(self) -> int:
        return self.n * self.k * self.tiles


@dataclass
class CycleReport:
    layer: str
    arch: str
    cycles: int
    dcnn_cycles: int
    h: int = 0
    d: int = 0
    sites: int = 0
    columns: int = 0
    bubbles: int = 0
    columns_fetched: int = 0
    macs: int = 0
    bits_broadcast: int = 0
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def speedup(self) -> float:
        return self.dcnn_cycles / self.cycles if self.cycles else float("inf")


def passes(layer: LayerSpec, arch: ArchConfig) -> int:
    return ceil_div(layer.kk, arch.k * arch.tiles)


def dense_steps(layer: LayerSpec, n: int) -> int:
    return ceil_div(layer.filter_size, n)


def cycles_dcnn(layer: LayerSpec, arch: ArchConfig) -> int:
    return passes(layer, arch) * layer.windows * dense_steps(layer, arch.n)


def dcnn_report(layer: LayerSpec, arch: ArchConfig) -> CycleReport:
    cyc = cycles_dcnn(layer, arch)
    groups = ceil_div(layer.kk, arch.k)
    steps = dense_steps(layer, arch.n)
    return CycleReport(
        layer=layer.name, arch=ARCH_LABELS[DCNN], cycles=cyc, dcnn_cycles=cyc,
        columns=groups * steps, columns_fetched=groups * steps * layer.windows,
        macs=layer.macs, bits_broadcast=cyc * arch.n * 16)


def _pattern_fields(p: PromotionPattern) -> dict:
    return {"h": p.h, "d": p.lookaside, "sites": len(p.sites)}


def _by_pass(schedules: Sequence[TileSchedule], tiles: int) -> list[Sequence[TileSchedule]]:
    return [schedules[i:i + tiles] for i in range(0, len(schedules), tiles)]


def layer_schedules(layer: LayerSpec, weights: np.ndarray, arch: ArchConfig) -> list[TileSchedule]:
    check_shapes(layer, weights)
    return schedule_layer(layer, weights, arch.pattern, arch.n, arch.k)


def cycles_tcl_ws(layer: LayerSpec, weights: np.ndarray, arch: ArchConfig,
                  schedules: list[TileSchedule] | None = None) -> CycleReport:
    """Weight skipping with bit-parallel multipliers."""
    if schedules is None:
        schedules = layer_schedules(layer, weights, arch)
    per_window = sum(max(ts.cycles for ts in grp) for grp in _by_pass(schedules, arch.tiles))
    cyc = layer.windows * per_window
    columns = sum(ts.compute_columns for ts in schedules)
    steps = dense_steps(layer, arch.n)
    return CycleReport(
        layer=layer.name, arch=ARCH_LABELS[TCL_WS], cycles=cyc,
        dcnn_cycles=cycles_dcnn(layer, arch), **_pattern_fields(arch.pattern),
        columns=columns, bubbles=sum(ts.bubbles for ts in schedules),
        columns_fetched=columns * layer.windows,
        macs=int(np.count_nonzero(weights)) * layer.windows,
        bits_broadcast=passes(layer, arch) * layer.windows * steps * arch.n * 16)


def im2col(layer: LayerSpec, activations: np.ndarray, n: int) -> np.ndarray:
    """Activations as [windows, steps, n] in dense-schedule order, zero padded.

    Windows are ordered row-major over (ox, oy).
    """
    steps = dense_steps(layer, n)
    out = np.zeros((layer.ox, layer.oy, steps * n), dtype=np.int64)
    # linear index = fy + Fy * (fx + Fx * c)
    c_base = np.arange(layer.c) * layer.fx * layer.fy
    for fx in range(layer.fx):
        for fy in range(layer.fy):
            out[:, :, c_base + fx * layer.fy + fy] = window_view(layer, activations, fx, fy)
    return out.reshape(layer.windows, steps, n)


def cycles_serial(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray,
                  arch: ArchConfig, schedules: list[TileSchedule] | None = None) -> CycleReport:
    """Weight skipping with bit-serial activations (precision or oneffsets).

    Each column waits for the slowest activation in its synchronisation
    group: every activation of the lookahead window (steps b..b+h, all n
    lanes) across the windows processed in parallel.
    """
    if arch.mode not in (TCL_P, TCL_E):
        raise ValueError("cycles_serial needs mode tclP or tclE")
    check_shapes(layer, weights, activations)
    check_precision(layer, activations)
    if schedules is None:
        schedules = layer_schedules(layer, weights, arch)
    serial_mode = coding.PRECISION_SERIAL if arch.mode == TCL_P else coding.ONEFFSET_SERIAL
    table = coding.cost_table(serial_mode, arch.max_shift if arch.mode == TCL_E else None)

    n, h, wp = arch.n, arch.pattern.h, arch.windows_parallel
    steps = dense_steps(layer, n)
    acts = im2col(layer, unsigned16(activations), n)
    cost = table[acts]  # [W, steps, n]; padding positions cost 0
    if arch.mode == TCL_E:
        bits_cost = coding.terms_table(None)[acts].sum(axis=2)
    else:
        bits_cost = None

    nwin = layer.windows
    ngroups = ceil_div(nwin, wp)
    pad = ngroups * wp - nwin
    step_max = cost.max(axis=2)
    if pad:
        step_max = np.concatenate([step_max, np.zeros((pad, steps), dtype=step_max.dtype)])
    group_max = step_max.reshape(ngroups, wp, steps).max(axis=1)  # [G, steps]
    group_windows = np.full(ngroups, wp)
    group_windows[-1] = nwin - (ngroups - 1) * wp
    real_lanes = np.minimum(n, layer.filter_size - np.arange(steps) * n)
    if bits_cost is not None:
        if pad:
            bits_cost = np.concatenate([bits_cost, np.zeros((pad, steps), dtype=bits_cost.dtype)])
        group_terms = bits_cost.reshape(ngroups, wp, steps).sum(axis=1)

    total = 0
    bits = 0
    hist: Counter = Counter()
    for grp in _by_pass(schedules, arch.tiles):
        tile_costs = []
        for ts in grp:
            per_group = np.zeros(ngroups, dtype=np.int64)
            b = 0
            for col in ts.columns:
                if col.bubble:
                    per_group += 1
                    hist[1] += ngroups
                else:
                    hi = min(b + h, steps - 1) + 1
                    c = np.maximum(1, group_max[:, b:hi].max(axis=1))
                    per_group += c
                    hist.update(c.tolist())
                    if arch.mode == TCL_P:
                        bits += int((c * group_windows).sum()) * int(real_lanes[b:hi].sum())
                    else:
                        bits += int(group_terms[:, b:hi].sum())
                b += col.alc
            tile_costs.append(per_group)
        total += int(np.max(tile_costs, axis=0).sum())

    columns = sum(ts.compute_columns for ts in schedules)
    return CycleReport(
        layer=layer.name, arch=ARCH_LABELS[arch.mode], cycles=total,
        dcnn_cycles=cycles_dcnn(layer, arch), **_pattern_fields(arch.pattern),
        columns=columns, bubbles=sum(ts.bubbles for ts in schedules),
        columns_fetched=columns * ngroups,
        macs=int(np.count_nonzero(weights)) * layer.windows,
        bits_broadcast=bits, histogram=dict(sorted(hist.items())))


def simulate_layer(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray,
                   arch: ArchConfig, schedules: list[TileSchedule] | None = None) -> CycleReport:
    if arch.mode == DCNN:
        return dcnn_report(layer, arch)
    if arch.mode == TCL_WS:
        return cycles_tcl_ws(layer, weights, arch, schedules)
    return cycles_serial(layer, weights, activations, arch, schedules)
