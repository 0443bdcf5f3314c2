import random

import numpy as np
import pytest

from accelsim.potential import work_counts
from accelsim.scnn import (ScnnConfig, _owner, _tile_bounds, chunk_cost, partition_stride_groups,
                           simulate_scnn)
from accelsim.tensor import LayerSpec, gen_synthetic

ONE_PE = ScnnConfig(pe_grid_x=1, pe_grid_y=1)


def test_default_config_has_1024_multipliers():
    assert ScnnConfig().total_multipliers == 1024


def test_stride_one_single_group():
    groups = partition_stride_groups(LayerSpec(9, 9, 2, 3, 3, 4))
    assert len(groups) == 1 and len(groups[0].taps) == 9


def test_stride_two_groups():
    groups = partition_stride_groups(LayerSpec(9, 9, 2, 3, 3, 4, stride=2))
    assert sorted(len(g.taps) for g in groups) == [1, 2, 2, 4]


@pytest.mark.parametrize("ax,f,s", [(9, 3, 2), (11, 5, 3), (8, 2, 2), (10, 4, 3), (7, 1, 2)])
def test_groups_cover_every_mac_once(ax, f, s):
    layer = LayerSpec(ax, ax, 1, f, f, 1, stride=s)
    dense = {(ox, oy, fx, fy, ox * s + fx, oy * s + fy)
             for ox in range(layer.ox) for oy in range(layer.oy)
             for fx in range(f) for fy in range(f)}
    seen = []
    for g in partition_stride_groups(layer):
        for fx, fy in g.taps:
            for i, x in enumerate(g.act_x):
                for j, y in enumerate(g.act_y):
                    ox, oy = i - fx // s, j - fy // s
                    if 0 <= ox < layer.ox and 0 <= oy < layer.oy:
                        seen.append((ox, oy, fx, fy, x, y))
    assert len(seen) == len(set(seen))
    assert set(seen) == dense


def test_zero_inputs_cost_nothing():
    layer = LayerSpec(10, 10, 3, 3, 3, 8)
    w, a = gen_synthetic(layer, 0.5, seed=1)
    assert simulate_scnn(layer, np.zeros_like(w), a).cycles == 0
    assert simulate_scnn(layer, w, np.zeros_like(a)).cycles == 0


def test_sixteen_distinct_banks_one_cycle():
    layer = LayerSpec(8, 1, 1, 1, 1, 4)
    w = np.ones(layer.weight_dims, dtype=np.int16)
    a = np.zeros(layer.activation_dims, dtype=np.int16)
    a[0:4, 0, 0] = 5
    r = simulate_scnn(layer, w, a, ONE_PE)
    assert (r.cycles, r.macs) == (1, 16)


def test_sixteen_products_one_bank():
    layer = LayerSpec(128, 1, 1, 1, 1, 4)
    w = np.ones(layer.weight_dims, dtype=np.int16)
    a = np.zeros(layer.activation_dims, dtype=np.int16)
    a[[0, 32, 64, 96], 0, 0] = 5
    r = simulate_scnn(layer, w, a, ONE_PE)
    assert (r.cycles, r.macs) == (16, 16)


def test_chunk_cost_drops_out_of_range_products():
    layer = LayerSpec(4, 4, 1, 3, 3, 1)      # 2x2 output
    cyc, prods = chunk_cost([(0, 0), (3, 3)], [(0, 0, 0), (0, 2, 2)], layer, 32)
    assert prods == 2 and cyc == 1           # (0,0)x(0,0) and (3,3)x(2,2) survive
    cyc, prods = chunk_cost([(2, 2)], [(0, 1, 1), (0, 2, 2)], layer, 32)
    assert prods == 2 and cyc == 1


@pytest.mark.parametrize("seed", range(6))
def test_products_conserved(seed):
    rng = random.Random(seed)
    f = rng.randint(1, 3)
    layer = LayerSpec(f + rng.randint(2, 14), f + rng.randint(2, 14), rng.randint(1, 6), f, f,
                      rng.randint(1, 12), stride=rng.randint(1, 2))
    w, a = gen_synthetic(layer, rng.choice([0.0, 0.5, 0.8]), seed=seed)
    # zero some activations too
    a = np.where(np.random.default_rng(seed).random(a.shape) < 0.4, 0, a).astype(np.int16)
    r = simulate_scnn(layer, w, a)
    assert r.macs * 16 == work_counts(layer, w, a).wa
    assert r.cycles >= -(-r.macs // 1024)


def test_dense_layer_never_beats_peak_throughput():
    layer = LayerSpec(18, 18, 4, 3, 3, 16)
    w = np.ones(layer.weight_dims, dtype=np.int16)
    a = np.ones(layer.activation_dims, dtype=np.int16)
    r = simulate_scnn(layer, w, a)
    assert r.macs == layer.macs
    assert r.cycles * 1024 >= layer.macs


def test_seven_by_seven_output_one_position_per_pe():
    layer = LayerSpec(9, 9, 2, 3, 3, 4)
    assert (layer.ox, layer.oy) == (7, 7)
    bx = _tile_bounds(layer.ox, layer.ax, 8)
    owners = [_owner(ox, bx) for ox in range(layer.ox)]
    assert len(set(owners)) == len(owners)
    # every activation column still lands on some PE
    assert bx[0] == 0 and bx[-1] == layer.ax


def test_halo_adds_cycles_across_pes():
    layer = LayerSpec(16, 16, 1, 3, 3, 4)
    w = np.ones(layer.weight_dims, dtype=np.int16)
    a = np.ones(layer.activation_dims, dtype=np.int16)
    split = simulate_scnn(layer, w, a, ScnnConfig(pe_grid_x=2, pe_grid_y=1))
    one = simulate_scnn(layer, w, a, ONE_PE)
    assert split.macs == one.macs
    assert split.cycles < one.cycles


def test_report_fields():
    layer = LayerSpec(10, 10, 3, 3, 3, 8, name="c")
    w, a = gen_synthetic(layer, 0.5, seed=1)
    r = simulate_scnn(layer, w, a, dcnn_cycles=123)
    assert (r.layer, r.arch, r.dcnn_cycles) == ("c", "scnn", 123)
