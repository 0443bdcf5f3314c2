"""Sparse promotion patterns and greedy connection pruning."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cycles import TCL_WS, ArchConfig, cycles_tcl_ws
from .schedule import PromotionPattern, Site
from .tensor import LayerSpec

# lane delta -> step delta for h=2; step parity alternates with lane distance
CHECKERS_SITES = ((0, 1), (0, 2), (1, 1), (2, 2), (3, 1), (4, 2), (5, 1))


def full_window_pattern(h: int, max_lane_distance: int, n: int = 16) -> PromotionPattern:
    """Every site within lookahead ``h`` and ``max_lane_distance`` lanes."""
    if not 1 <= max_lane_distance <= n - 1:
        raise ValueError(f"lane distance must be in 1..{n - 1}")
    sites = [(0, s) for s in range(1, h + 1)]
    sites += [(j, s) for j in range(1, max_lane_distance + 1) for s in range(1, h + 1)]
    return PromotionPattern(h, tuple(sites))


def checkers_pattern(h: int = 2) -> PromotionPattern:
    if h != 2:
        raise ValueError("the checkerboard layout is defined for h=2 only")
    return PromotionPattern(2, CHECKERS_SITES)


@dataclass(frozen=True)
class SearchTrace:
    initial_cycles: int
    steps: tuple[tuple[Site, int], ...]
    final_pattern: PromotionPattern

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["step", "removed_dl", "removed_ds", "cycles"])
        for i, ((dl, ds), cyc) in enumerate(self.steps, 1):
            out.writerow([i, dl, ds, cyc])
        return buf.getvalue()


Network = Sequence[tuple[LayerSpec, np.ndarray]]


def network_ws_cycles(network: Network, pattern: PromotionPattern,
                      arch: ArchConfig = ArchConfig()) -> int:
    cfg = replace(arch, mode=TCL_WS, pattern=pattern)
    return sum(cycles_tcl_ws(layer, w, cfg).cycles for layer, w in network)


def removal_costs(network: Network, pattern: PromotionPattern,
                  arch: ArchConfig = ArchConfig()) -> dict[Site, int]:
    """Weight-skip cycles of the network after removing each site in turn."""
    return {s: network_ws_cycles(network, pattern.without(s), arch) for s in pattern.sites}


def greedy_prune_search(network: Network, h: int, max_lane_distance: int, target_sites: int,
                        arch: ArchConfig = ArchConfig()) -> SearchTrace:
    """Start from the full window and repeatedly drop the site whose removal
    hurts least; ties remove the lexicographically largest site."""
    pattern = full_window_pattern(h, max_lane_distance, arch.n)
    if not 0 <= target_sites <= len(pattern.sites):
        raise ValueError(f"target must be in 0..{len(pattern.sites)}")
    initial = network_ws_cycles(network, pattern, arch)
    steps = []
    while len(pattern.sites) > target_sites:
        costs = removal_costs(network, pattern, arch)
        site = min(costs, key=lambda s: (costs[s], (-s[0], -s[1])))
        pattern = pattern.without(site)
        steps.append((site, costs[site]))
    return SearchTrace(initial, tuple(steps), pattern)
