"""Ideal speedups from removing each category of ineffectual work.

Work is counted per MAC of the dense layer. A: skip zero activations.
W: skip zero weights. WA: skip both. WAp: skip zero weights and pay
needed_bits(a)/16 per remaining MAC. WAe: skip zero weights and pay
oneffsets(a)/16 per remaining MAC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, astuple
from fractions import Fraction

import numpy as np

from .coding import bits_table, terms_table
from .tensor import LayerSpec, check_shapes, unsigned16, window_view

CATEGORIES = ("A", "W", "WA", "WAp", "WAe")
INF = math.inf


@dataclass(frozen=True)
class PotentialReport:
    """Each speedup is a Fraction, or math.inf when no work remains."""

    speedup_a: Fraction | float
    speedup_w: Fraction | float
    speedup_wa: Fraction | float
    speedup_wap: Fraction | float
    speedup_wae: Fraction | float

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class WorkCounts:
    """Work in sixteenths of a MAC so every category stays integral."""

    total: int
    a: int
    w: int
    wa: int
    wap: int
    wae: int

    def __add__(self, other: "WorkCounts") -> "WorkCounts":
        return WorkCounts(*(x + y for x, y in zip(astuple(self), astuple(other))))

    def report(self) -> PotentialReport:
        return PotentialReport(*(ratio(self.total, x) for x in
                                 (self.a, self.w, self.wa, self.wap, self.wae)))


def ratio(total: int, work: int) -> Fraction | float:
    return INF if work == 0 else Fraction(total, work)


def work_counts(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray) -> WorkCounts:
    check_shapes(layer, weights, activations)
    acts = unsigned16(activations)
    bits, terms = bits_table(), terms_table()
    a_nz = w_nz = wa = wap = wae = 0
    for fx in range(layer.fx):
        for fy in range(layer.fy):
            view = window_view(layer, acts, fx, fy).reshape(-1, layer.c)   # [W, C]
            w_tap = np.asarray(weights)[:, fx, fy, :] != 0                  # [K, C]
            nz_per_c = np.count_nonzero(view, axis=0)                       # [C]
            wk_per_c = w_tap.sum(axis=0)                                    # [C]
            a_nz += int(nz_per_c.sum()) * layer.kk
            w_nz += int(wk_per_c.sum()) * layer.windows
            wa += int((nz_per_c * wk_per_c).sum())
            wap += int((bits[view].sum(axis=0) * wk_per_c).sum())
            wae += int((terms[view].sum(axis=0) * wk_per_c).sum())
    total = layer.macs
    return WorkCounts(16 * total, 16 * a_nz, 16 * w_nz, 16 * wa, wap, wae)


def ideal_speedups(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray) -> PotentialReport:
    return work_counts(layer, weights, activations).report()


def format_speedup(x: Fraction | float) -> str:
    if x == INF:
        return "inf"
    return f"{float(x):.4f}"


def mean_speedups(reports: list[PotentialReport]) -> PotentialReport:
    """Arithmetic mean over layers; any infinite entry makes the mean infinite."""
    cols = zip(*(r.values() for r in reports))
    out = []
    for col in cols:
        col = list(col)
        out.append(INF if any(v == INF for v in col) else sum(col, Fraction(0)) / len(col))
    return PotentialReport(*out)
