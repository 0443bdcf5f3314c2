"""Cycle-level models of sparsity-exploiting CNN accelerators.

Covers a dense inner-product baseline, static weight skipping with
lookahead/lookaside promotion, precision-serial and oneffset-serial
activation back-ends, an SCNN-style Cartesian-product model and the ideal
work-removal potential of a layer.
"""

from .coding import group_cost, needed_bits, oneffsets
from .cycles import ArchConfig, CycleReport, cycles_dcnn, cycles_serial, cycles_tcl_ws
from .potential import PotentialReport, ideal_speedups
from .schedule import (PromotionPattern, build_dense_schedule, contiguous_pattern,
                       decode_schedule, schedule_tile)
from .scnn import ScnnConfig, partition_stride_groups, simulate_scnn
from .search import checkers_pattern, full_window_pattern, greedy_prune_search
from .tensor import LayerSpec, dense_conv, gen_synthetic, sparsity_stats
from .tensorio import load_tensor, store_tensor

__version__ = "0.1.0"
