"""Layer geometry, 16-bit tensors, the reference convolution and synthetic data."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class PrecisionError(ValueError):
    """An activation does not fit the precision declared for its layer."""


@dataclass(frozen=True)
class LayerSpec:
    ax: int
    ay: int
    c: int
    fx: int
    fy: int
    kk: int
    stride: int = 1
    relu: bool = False
    precision_bits: int = 16
    name: str = ""

    def __post_init__(self):
        for field in ("ax", "ay", "c", "fx", "fy", "kk", "stride"):
            if getattr(self, field) < 1:
                raise ShapeError(f"{field} must be >= 1, got {getattr(self, field)}")
        if self.ax < self.fx or self.ay < self.fy:
            raise ShapeError(
                f"filter {self.fx}x{self.fy} larger than input {self.ax}x{self.ay}")
        if not 1 <= self.precision_bits <= 16:
            raise ShapeError(f"precision_bits must be in 1..16, got {self.precision_bits}")

    @classmethod
    def fully_connected(cls, inputs: int, outputs: int, **kw) -> "LayerSpec":
        """An FC layer is a convolution with a single 1x1xC window."""
        return cls(ax=1, ay=1, c=inputs, fx=1, fy=1, kk=outputs, stride=1, **kw)

    @property
    def ox(self) -> int:
        return (self.ax - self.fx) // self.stride + 1

    @property
    def oy(self) -> int:
        return (self.ay - self.fy) // self.stride + 1

    @property
    def windows(self) -> int:
        return self.ox * self.oy

    @property
    def filter_size(self) -> int:
        return self.fx * self.fy * self.c

    @property
    def is_fully_connected(self) -> bool:
        return self.fx == self.ax and self.fy == self.ay

    @property
    def weight_dims(self) -> tuple[int, int, int, int]:
        return (self.kk, self.fx, self.fy, self.c)

    @property
    def activation_dims(self) -> tuple[int, int, int]:
        return (self.ax, self.ay, self.c)

    @property
    def output_dims(self) -> tuple[int, int, int]:
        return (self.ox, self.oy, self.kk)

    @property
    def macs(self) -> int:
        return self.windows * self.filter_size * self.kk

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SparsityStats:
    static_sparsity: float
    effective_sparsity: float


def as_tensor16(data, dims: Sequence[int] | None = None) -> np.ndarray:
    """Coerce ``data`` to an int16 array, optionally checking its extents.

    Values outside the signed 16-bit range raise rather than wrap.
    """
    arr = np.asarray(data)
    if arr.dtype != np.int16:
        wide = arr.astype(np.int64)
        if wide.size and (wide.min() < -(1 << 15) or wide.max() >= (1 << 15)):
            raise ValueError("values do not fit in signed 16 bits")
        arr = wide.astype(np.int16)
    if dims is not None and tuple(arr.shape) != tuple(dims):
        raise ShapeError(f"expected dims {tuple(dims)}, got {tuple(arr.shape)}")
    return arr


def unsigned16(activations: np.ndarray) -> np.ndarray:
    """Reinterpret the int16 bit pattern as unsigned 16-bit, the form the
    serial back-ends see."""
    return np.asarray(activations).astype(np.int64) & 0xFFFF


def check_precision(layer: LayerSpec, activations: np.ndarray) -> None:
    u = unsigned16(activations)
    if u.size and int(u.max()) >= (1 << layer.precision_bits):
        raise PrecisionError(
            f"activation value {int(u.max())} needs more than "
            f"{layer.precision_bits} bits (layer {layer.name or '?'})")


def check_shapes(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray | None = None):
    if tuple(np.shape(weights)) != layer.weight_dims:
        raise ShapeError(f"weights {tuple(np.shape(weights))} != {layer.weight_dims}")
    if activations is not None and tuple(np.shape(activations)) != layer.activation_dims:
        raise ShapeError(
            f"activations {tuple(np.shape(activations))} != {layer.activation_dims}")


def window_view(layer: LayerSpec, activations: np.ndarray, fx: int, fy: int) -> np.ndarray:
    """Activations multiplied by filter tap (fx, fy) for every window, shape [Ox, Oy, C]."""
    s = layer.stride
    return activations[fx:fx + s * (layer.ox - 1) + 1:s, fy:fy + s * (layer.oy - 1) + 1:s, :]


def dense_conv(layer: LayerSpec, weights: np.ndarray, activations: np.ndarray) -> np.ndarray:
    """Bit-exact integer convolution; returns int32 outputs [Ox, Oy, K]."""
    check_shapes(layer, weights, activations)
    w = np.asarray(weights, dtype=np.int64)
    a = np.asarray(activations, dtype=np.int64)
    out = np.zeros(layer.output_dims, dtype=np.int64)
    for fx in range(layer.fx):
        for fy in range(layer.fy):
            out += np.einsum("xyc,kc->xyk", window_view(layer, a, fx, fy), w[:, fx, fy, :])
    if layer.relu:
        np.maximum(out, 0, out=out)
    if out.size and (out.min() < -(1 << 31) or out.max() >= (1 << 31)):
        raise OverflowError("accumulator exceeded 32 bits")
    return out.astype(np.int32)


def sparsity_stats(network: Iterable[tuple[LayerSpec, np.ndarray]]) -> SparsityStats:
    zeros = total = zero_mults = total_mults = 0
    seen = False
    for layer, weights in network:
        seen = True
        check_shapes(layer, weights)
        z = int(np.count_nonzero(np.asarray(weights) == 0))
        t = int(np.size(weights))
        zeros += z
        total += t
        zero_mults += z * layer.windows
        total_mults += t * layer.windows
    if not seen:
        raise ValueError("network must contain at least one layer")
    return SparsityStats(zeros / total, zero_mults / total_mults)


VALUE_MODELS = ("uniform", "clustered")


def weight_bound(layer: LayerSpec) -> int:
    """Largest weight magnitude that keeps every accumulator inside int32."""
    amax = min((1 << layer.precision_bits) - 1, (1 << 15) - 1)
    return int(max(1, min(127, ((1 << 31) - 1) // (amax * layer.filter_size))))


def gen_synthetic(layer: LayerSpec, weight_sparsity: float, value_model: str = "uniform",
                  seed: int = 0, scale: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Random sparse weights and non-negative activations for ``layer``.

    Exactly ``round(weight_sparsity * count)`` weights are zero. ``uniform``
    draws activations uniformly over the layer precision; ``clustered``
    draws floor(Exp(scale)), so most values sit near zero.
    """
    if not 0.0 <= weight_sparsity <= 1.0:
        raise ValueError("weight_sparsity must lie in [0, 1]")
    if value_model not in VALUE_MODELS:
        raise ValueError(f"unknown value model {value_model!r}")
    rng = np.random.default_rng(seed)

    count = layer.kk * layer.filter_size
    nzeros = int(round(weight_sparsity * count))
    bound = weight_bound(layer)
    mags = rng.integers(1, bound + 1, size=count)
    signs = rng.choice(np.array([-1, 1]), size=count)
    flat = mags * signs
    flat[rng.permutation(count)[:nzeros]] = 0
    weights = flat.reshape(layer.weight_dims).astype(np.int16)

    amax = min((1 << layer.precision_bits) - 1, (1 << 15) - 1)
    shape = layer.activation_dims
    if value_model == "uniform":
        acts = rng.integers(0, amax + 1, size=shape)
    else:
        acts = np.minimum(np.floor(rng.exponential(scale, size=shape)), amax)
    return weights, acts.astype(np.int16)
