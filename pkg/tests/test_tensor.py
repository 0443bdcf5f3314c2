import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from accelsim.tensor import (LayerSpec, ShapeError, as_tensor16, dense_conv, gen_synthetic,
                             sparsity_stats)


def loop_conv(layer, w, a):
    """Six nested loops, no numpy arithmetic."""
    out = [[[0] * layer.kk for _ in range(layer.oy)] for _ in range(layer.ox)]
    for k in range(layer.kk):
        for x in range(layer.ox):
            for y in range(layer.oy):
                acc = 0
                for c in range(layer.c):
                    for i in range(layer.fx):
                        for j in range(layer.fy):
                            acc += int(w[k, i, j, c]) * int(a[x * layer.stride + i, y * layer.stride + j, c])
                out[x][y][k] = max(acc, 0) if layer.relu else acc
    return np.array(out)


def rand_layer(rng, relu=False):
    ax, ay = rng.integers(1, 7, size=2)
    fx, fy = rng.integers(1, ax + 1), rng.integers(1, ay + 1)
    return LayerSpec(int(ax), int(ay), int(rng.integers(1, 4)), int(fx), int(fy),
                     int(rng.integers(1, 4)), stride=int(rng.integers(1, 3)), relu=relu,
                     precision_bits=8)


def test_layer_geometry():
    layer = LayerSpec(ax=7, ay=5, c=3, fx=3, fy=3, kk=2, stride=2)
    assert (layer.ox, layer.oy) == (3, 2)
    assert layer.macs == 3 * 2 * 27 * 2
    with pytest.raises(ShapeError):
        LayerSpec(ax=2, ay=2, c=1, fx=3, fy=1, kk=1)
    with pytest.raises(ShapeError):
        LayerSpec(ax=2, ay=2, c=0, fx=1, fy=1, kk=1)
    with pytest.raises(ShapeError):
        LayerSpec(ax=2, ay=2, c=1, fx=1, fy=1, kk=1, precision_bits=17)


def test_fully_connected_is_single_window():
    fc = LayerSpec(ax=4, ay=4, c=8, fx=4, fy=4, kk=10)
    assert fc.windows == 1 and fc.is_fully_connected
    assert LayerSpec.fully_connected(64, 10).windows == 1


def test_single_mac():
    layer = LayerSpec(1, 1, 1, 1, 1, 1)
    out = dense_conv(layer, np.array([[[[5]]]], dtype=np.int16), np.array([[[3]]], dtype=np.int16))
    assert out.tolist() == [[[15]]]


def test_zero_weights_annihilate():
    layer = LayerSpec(5, 4, 3, 2, 2, 4, stride=1)
    _, a = gen_synthetic(layer, 0.0, seed=1)
    out = dense_conv(layer, np.zeros(layer.weight_dims, np.int16), a)
    assert not out.any()


def test_random_layer_matches_nested_loops():
    layer = LayerSpec(ax=6, ay=6, c=3, fx=3, fy=3, kk=4, stride=1, precision_bits=8)
    rng = np.random.default_rng(7)
    w = rng.integers(-128, 128, size=layer.weight_dims).astype(np.int16)
    a = rng.integers(0, 256, size=layer.activation_dims).astype(np.int16)
    np.testing.assert_array_equal(dense_conv(layer, w, a), loop_conv(layer, w, a))


@pytest.mark.parametrize("seed", range(25))
def test_random_geometry_matches_nested_loops(seed):
    rng = np.random.default_rng(seed)
    layer = rand_layer(rng, relu=bool(seed % 2))
    w = rng.integers(-50, 50, size=layer.weight_dims).astype(np.int16)
    a = rng.integers(0, 200, size=layer.activation_dims).astype(np.int16)
    np.testing.assert_array_equal(dense_conv(layer, w, a), loop_conv(layer, w, a))


def test_relu_clamps_only_outputs():
    layer = LayerSpec(1, 1, 2, 1, 1, 1, relu=True)
    w = np.array([[[[1, -3]]]], np.int16)
    a = np.array([[[2, 1]]], np.int16)
    assert dense_conv(layer, w, a).item() == 0
    assert dense_conv(LayerSpec(1, 1, 2, 1, 1, 1), w, a).item() == -1


def test_shape_mismatch():
    layer = LayerSpec(3, 3, 2, 2, 2, 1)
    with pytest.raises(ShapeError):
        dense_conv(layer, np.zeros((1, 2, 2, 3), np.int16), np.zeros((3, 3, 2), np.int16))
    with pytest.raises(ShapeError):
        dense_conv(layer, np.zeros((1, 2, 2, 2), np.int16), np.zeros((3, 2, 2), np.int16))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_linear_in_activations(seed):
    rng = np.random.default_rng(seed)
    layer = rand_layer(rng)
    w = rng.integers(-100, 100, size=layer.weight_dims).astype(np.int16)
    a1 = rng.integers(0, 1000, size=layer.activation_dims).astype(np.int16)
    a2 = rng.integers(0, 1000, size=layer.activation_dims).astype(np.int16)
    lhs = dense_conv(layer, w, (a1 + a2).astype(np.int16)).astype(np.int64)
    rhs = dense_conv(layer, w, a1).astype(np.int64) + dense_conv(layer, w, a2)
    np.testing.assert_array_equal(lhs, rhs)


@pytest.mark.parametrize("seed", range(5))
def test_mac_order_irrelevant(seed):
    rng = np.random.default_rng(seed)
    layer = rand_layer(rng)
    w = rng.integers(-100, 100, size=layer.weight_dims)
    a = rng.integers(0, 300, size=layer.activation_dims)
    taps = list(itertools.product(range(layer.c), range(layer.fx), range(layer.fy)))
    order = rng.permutation(len(taps))
    out = np.zeros(layer.output_dims, dtype=np.int64)
    for idx in order:
        c, i, j = taps[idx]
        for x in range(layer.ox):
            for y in range(layer.oy):
                out[x, y, :] += w[:, i, j, c] * a[x * layer.stride + i, y * layer.stride + j, c]
    np.testing.assert_array_equal(dense_conv(layer, w.astype(np.int16), a.astype(np.int16)), out)


def test_sparsity_stats_examples():
    layer = LayerSpec(4, 4, 1, 2, 2, 4)
    s = sparsity_stats([(layer, np.zeros(layer.weight_dims))])
    assert (s.static_sparsity, s.effective_sparsity) == (1.0, 1.0)
    w = np.ones(16)
    w[:8] = 0
    s = sparsity_stats([(layer, w.reshape(layer.weight_dims))])
    assert (s.static_sparsity, s.effective_sparsity) == (0.5, 0.5)


def test_sparsity_stats_two_layers_by_enumeration():
    l1 = LayerSpec(5, 5, 1, 2, 2, 2)     # 16 windows, 8 weights
    l2 = LayerSpec(3, 3, 2, 3, 3, 1)     # 1 window, 18 weights
    w1 = np.ones(l1.weight_dims)
    w1[0, 0, 0, 0] = 0
    w2 = np.zeros(l2.weight_dims)
    w2[0, 0, 0, 0] = 3
    zero_mults = total_mults = 0
    for layer, w in ((l1, w1), (l2, w2)):
        for k, i, j, c in itertools.product(*(range(d) for d in layer.weight_dims)):
            for _ in range(layer.windows):
                total_mults += 1
                zero_mults += w[k, i, j, c] == 0
    s = sparsity_stats([(l1, w1), (l2, w2)])
    assert s.static_sparsity == pytest.approx(18 / 26)
    assert s.effective_sparsity == pytest.approx(zero_mults / total_mults)
    assert zero_mults / total_mults == pytest.approx(33 / 146)


def test_sparsity_stats_single_layer_effective_equals_static():
    rng = np.random.default_rng(3)
    for _ in range(20):
        layer = rand_layer(rng)
        w = rng.integers(-1, 2, size=layer.weight_dims)
        s = sparsity_stats([(layer, w)])
        assert s.static_sparsity == s.effective_sparsity


def test_sparsity_stats_needs_layers():
    with pytest.raises(ValueError):
        sparsity_stats([])


def test_gen_synthetic_deterministic():
    layer = LayerSpec(6, 6, 4, 3, 3, 5, precision_bits=10)
    a = gen_synthetic(layer, 0.5, "clustered", seed=42)
    b = gen_synthetic(layer, 0.5, "clustered", seed=42)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = gen_synthetic(layer, 0.5, "clustered", seed=43)
    assert not np.array_equal(a[0], c[0])


def test_gen_synthetic_zero_counts():
    layer = LayerSpec(4, 4, 10, 2, 2, 4)            # 160 weights
    w, _ = gen_synthetic(layer, 0.9, seed=0)
    assert w.size == 160 and np.count_nonzero(w == 0) == 144
    w, _ = gen_synthetic(layer, 1.0, seed=0)
    assert not w.any()
    w, _ = gen_synthetic(layer, 0.0, seed=0)
    assert np.count_nonzero(w == 0) == 0


@pytest.mark.parametrize("model", ["uniform", "clustered"])
@pytest.mark.parametrize("bits", [1, 5, 12, 16])
def test_gen_synthetic_activations_fit_precision(model, bits):
    layer = LayerSpec(8, 8, 4, 3, 3, 8, precision_bits=bits)
    w, a = gen_synthetic(layer, 0.3, model, seed=bits, scale=50.0)
    assert a.dtype == np.int16 and a.min() >= 0 and a.max() < 2 ** bits
    dense_conv(layer, w, a)     # stays inside int32


def test_gen_synthetic_rejects_bad_args():
    layer = LayerSpec(2, 2, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        gen_synthetic(layer, 1.5)
    with pytest.raises(ValueError):
        gen_synthetic(layer, 0.5, "gaussian")


def test_as_tensor16_rejects_overflow():
    with pytest.raises(ValueError):
        as_tensor16([40000])
    assert as_tensor16([[1, -2]], (1, 2)).dtype == np.int16
