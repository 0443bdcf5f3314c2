"""Static weight scheduling with lookahead / lookaside promotion.

A filter is laid out in a dense schedule of ``n`` lanes by ``steps`` time
steps. The scheduler packs the effectual (nonzero) weights of ``k`` filters
into shared columns; each slot may pull a weight from a later step (and
possibly a neighbouring lane) as long as the (lane, step) offset is one of
the promotion sites wired into its multiplexer. All filters in a tile share
one sliding lookahead window, advanced by the per-column ALC count.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .tensor import LayerSpec, ShapeError

Site = tuple[int, int]


class CorruptScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class PromotionPattern:
    """Mux connections of a weight slot as (lane delta, step delta) pairs.

    The no-promotion input (0, 0) is implicit. ``h`` is the lookahead depth,
    i.e. how many extra activation steps the window holds.
    """

    h: int
    sites: tuple[Site, ...] = ()

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("lookahead h must be >= 0")
        sites = tuple(sorted({(int(dl), int(ds)) for dl, ds in self.sites}))
        for dl, ds in sites:
            if dl < 0 or not 1 <= ds <= self.h:
                raise ValueError(f"site ({dl},{ds}) outside window of depth {self.h}")
        object.__setattr__(self, "sites", sites)

    @property
    def choices(self) -> tuple[Site, ...]:
        """Mux inputs in select order; index 0 means no promotion."""
        return ((0, 0),) + self.sites

    @property
    def mux_inputs(self) -> int:
        return len(self.sites) + 1

    @property
    def select_bits(self) -> int:
        return math.ceil(math.log2(self.mux_inputs))

    @property
    def lookaside(self) -> int:
        return sum(1 for dl, _ in self.sites if dl > 0)

    def validate_lanes(self, n: int) -> None:
        for dl, _ in self.sites:
            if dl > n - 1:
                raise ValueError(f"lane delta {dl} needs more than {n} lanes")

    def without(self, site: Site) -> "PromotionPattern":
        return PromotionPattern(self.h, tuple(s for s in self.sites if s != site))

    def with_site(self, site: Site) -> "PromotionPattern":
        return PromotionPattern(self.h, self.sites + (site,))


def contiguous_pattern(h: int, d: int, n: int = 16) -> PromotionPattern:
    """Lookahead ``h`` along the lane plus lookaside ``d`` lanes one step ahead."""
    if h < 0 or d < 0:
        raise ValueError("h and d must be non-negative")
    if d > n - 1:
        raise ValueError(f"lookaside {d} exceeds {n - 1} neighbouring lanes")
    if d > 0 and h == 0:
        raise ValueError("lookaside needs a lookahead of at least 1")
    sites = [(0, s) for s in range(1, h + 1)] + [(j, 1) for j in range(1, d + 1)]
    return PromotionPattern(h, tuple(sites))


@dataclass
class DenseSchedule:
    """One filter laid out lane-by-step. ``values[step, lane]``; positions at or
    past ``size`` are empty padding, zero values are ineffectual."""

    filter_id: int
    n: int
    values: np.ndarray
    size: int
    filter_dims: tuple[int, int, int]  # (fx, fy, c)

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    def is_empty(self, lane: int, step: int) -> bool:
        return step * self.n + lane >= self.size

    def source_coord(self, lane: int, step: int) -> tuple[int, int, int]:
        """(c, fx, fy) of the weight at a dense position."""
        fx_dim, fy_dim, _ = self.filter_dims
        idx = step * self.n + lane
        if idx >= self.size:
            raise IndexError(f"({lane},{step}) is padding")
        fy = idx % fy_dim
        fx = (idx // fy_dim) % fx_dim
        c = idx // (fy_dim * fx_dim)
        return c, fx, fy

    def effectual(self) -> set[tuple[int, int, int, int]]:
        steps, lanes = np.nonzero(self.values)
        return {(self.filter_id, int(l), int(s), int(self.values[s, l]))
                for s, l in zip(steps, lanes)}


def linear_filter(weights: np.ndarray) -> np.ndarray:
    """Flatten [Fx, Fy, C] so that index = fy + Fy * (fx + Fx * c)."""
    return np.asarray(weights).transpose(2, 0, 1).reshape(-1)


def build_dense_schedule(weights: np.ndarray, n: int, layer: LayerSpec | None = None,
                         filter_id: int = 0) -> DenseSchedule:
    if n < 1:
        raise ValueError("lane count n must be >= 1")
    w = np.asarray(weights)
    if w.ndim != 3:
        raise ShapeError(f"filter must be [Fx, Fy, C], got shape {w.shape}")
    if layer is not None and w.shape != (layer.fx, layer.fy, layer.c):
        raise ShapeError(f"filter {w.shape} does not match layer {(layer.fx, layer.fy, layer.c)}")
    flat = linear_filter(w)
    size = flat.size
    steps = -(-size // n)
    grid = np.zeros(steps * n, dtype=flat.dtype)
    grid[:size] = flat
    return DenseSchedule(filter_id, n, grid.reshape(steps, n), size, tuple(w.shape))


def build_dense_schedules(layer: LayerSpec, weights: np.ndarray, n: int) -> list[DenseSchedule]:
    return [build_dense_schedule(weights[f], n, layer, filter_id=f) for f in range(layer.kk)]


class Slot(NamedTuple):
    value: int
    select: int
    src_lane: int
    src_step: int


@dataclass
class Column:
    alc: int
    slots: tuple[tuple[Slot | None, ...], ...] = ()
    bubble: bool = False


@dataclass
class TileSchedule:
    n: int
    steps: int
    pattern: PromotionPattern
    filter_ids: tuple[int, ...]
    columns: list[Column] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.filter_ids)

    @property
    def compute_columns(self) -> int:
        return sum(1 for c in self.columns if not c.bubble)

    @property
    def bubbles(self) -> int:
        return sum(1 for c in self.columns if c.bubble)

    @property
    def cycles(self) -> int:
        """Columns plus advance-only bubbles: cycles per window."""
        return len(self.columns)

    def bases(self) -> list[int]:
        out, b = [], 0
        for col in self.columns:
            out.append(b)
            b += col.alc
        return out


@dataclass(frozen=True)
class ScheduleStats:
    columns: int
    bubbles: int
    per_lane_occupancy: tuple[float, ...]


def _candidates(pattern: PromotionPattern) -> list[tuple[int, int, int]]:
    # oldest source step first, then own lane before lookaside
    cands = [(sel, dl, ds) for sel, (dl, ds) in enumerate(pattern.choices)]
    cands.sort(key=lambda c: (c[2], c[1]))
    return cands


def schedule_tile(dense: Sequence[DenseSchedule], pattern: PromotionPattern) -> TileSchedule:
    """Greedily pack the effectual weights of ``dense`` into shared columns."""
    if not dense:
        raise ValueError("need at least one filter")
    n, steps = dense[0].n, dense[0].steps
    for ds_ in dense:
        if ds_.n != n or ds_.steps != steps:
            raise ShapeError("all filters in a tile must share n and steps")
    pattern.validate_lanes(n)
    h = pattern.h
    cands = _candidates(pattern)

    values = [d.values.tolist() for d in dense]
    pending = [[[v != 0 for v in row] for row in vals] for vals in values]
    left = [[sum(row) for row in pend] for pend in pending]

    ts = TileSchedule(n, steps, pattern, tuple(d.filter_id for d in dense))
    b = 0
    while b < steps:
        took = False
        col_slots = []
        for f in range(len(dense)):
            pend, cnt, vals = pending[f], left[f], values[f]
            slots: list[Slot | None] = [None] * n
            for lane in range(n):
                for sel, dl, dstep in cands:
                    st = b + dstep
                    if st >= steps:
                        continue
                    src = (lane - dl) % n
                    if pend[st][src]:
                        pend[st][src] = False
                        cnt[st] -= 1
                        slots[lane] = Slot(vals[st][src], sel, src, st)
                        took = True
                        break
            col_slots.append(tuple(slots))
        alc = 0
        while alc <= h and b + alc < steps and all(c[b + alc] == 0 for c in left):
            alc += 1
        if took:
            ts.columns.append(Column(alc, tuple(col_slots)))
        else:
            ts.columns.append(Column(alc, bubble=True))
        b += alc
    return ts


def schedule_layer(layer: LayerSpec, weights: np.ndarray, pattern: PromotionPattern,
                   n: int, k: int) -> list[TileSchedule]:
    """Schedule every group of ``k`` consecutive filters of a layer."""
    dense = build_dense_schedules(layer, weights, n)
    return [schedule_tile(dense[g:g + k], pattern) for g in range(0, len(dense), k)]


def decode_schedule(ts: TileSchedule, pattern: PromotionPattern) -> set[tuple[int, int, int, int]]:
    """Recover (filter, lane, step, value) for every occupied slot.

    The source position is rebuilt from the running window base and the mux
    select alone; stored provenance is only cross-checked.
    """
    choices = pattern.choices
    out: set[tuple[int, int, int, int]] = set()
    b = 0
    for i, col in enumerate(ts.columns):
        if not col.bubble:
            if len(col.slots) != len(ts.filter_ids):
                raise CorruptScheduleError(f"column {i}: wrong filter count")
            for fid, slots in zip(ts.filter_ids, col.slots):
                for lane, slot in enumerate(slots):
                    if slot is None:
                        continue
                    if not 0 <= slot.select < len(choices):
                        raise CorruptScheduleError(
                            f"column {i} filter {fid} lane {lane}: select {slot.select} "
                            f"not wired in a {len(choices)}-input mux")
                    dl, ds = choices[slot.select]
                    src = ((lane - dl) % ts.n, b + ds)
                    if src != (slot.src_lane, slot.src_step):
                        raise CorruptScheduleError(
                            f"column {i} filter {fid} lane {lane}: select points at {src}, "
                            f"slot records {(slot.src_lane, slot.src_step)}")
                    entry = (fid, src[0], src[1], slot.value)
                    if entry in out:
                        raise CorruptScheduleError(f"weight {entry} scheduled twice")
                    out.add(entry)
        b += col.alc
    return out


def effectual_set(dense: Iterable[DenseSchedule]) -> set[tuple[int, int, int, int]]:
    out: set[tuple[int, int, int, int]] = set()
    for d in dense:
        out |= d.effectual()
    return out


def schedule_stats(ts: TileSchedule) -> ScheduleStats:
    occupied = [0] * ts.n
    compute = [c for c in ts.columns if not c.bubble]
    for col in compute:
        for slots in col.slots:
            for lane, slot in enumerate(slots):
                if slot is not None:
                    occupied[lane] += 1
    denom = max(1, len(compute) * ts.k)
    return ScheduleStats(len(compute), ts.bubbles, tuple(o / denom for o in occupied))


def dump_schedule(ts: TileSchedule) -> str:
    lines = []
    choices = ts.pattern.choices
    for i, col in enumerate(ts.columns):
        parts = [f"col {i} alc={col.alc}"]
        if col.bubble:
            parts.append("bubble")
        else:
            for fid, slots in zip(ts.filter_ids, col.slots):
                for lane, s in enumerate(slots):
                    if s is None:
                        continue
                    dl, ds = choices[s.select]
                    parts.append(f"f{fid} l{lane}: w={s.value} sel=({dl},{ds}) "
                                 f"src=({s.src_lane},{s.src_step})")
        lines.append(" | ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def format_pattern(pattern: PromotionPattern) -> str:
    return "".join([f"h={pattern.h}\n"] + [f"{dl},{ds}\n" for dl, ds in pattern.sites])


_SITE_RE = re.compile(r"^\s*(\d+)\s*,\s*(\d+)\s*$")


def parse_pattern(text: str) -> PromotionPattern:
    h = None
    sites = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("h="):
            h = int(line[2:])
            continue
        m = _SITE_RE.match(line)
        if not m:
            raise ValueError(f"pattern line {no}: cannot parse {raw!r}")
        sites.append((int(m.group(1)), int(m.group(2))))
    if h is None:
        raise ValueError("pattern file lacks an h=<int> header")
    return PromotionPattern(h, tuple(sites))


def read_pattern(path: str | os.PathLike) -> PromotionPattern:
    with open(path) as fh:
        return parse_pattern(fh.read())


def write_pattern(path: str | os.PathLike, pattern: PromotionPattern) -> None:
    with open(path, "w") as fh:
        fh.write(format_pattern(pattern))
