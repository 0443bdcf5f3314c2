"""Network manifests: layer geometry plus where each layer's tensors come from.

A manifest is a JSON document::

    {"network": "toy",
     "layers": [
        {"name": "conv1", "ax": 16, "ay": 16, "c": 8, "fx": 3, "fy": 3, "kk": 32,
         "stride": 1, "relu": true, "precisionBits": 8,
         "weights": "conv1.w.tclt", "activations": "conv1.a.tclt"},
        {"name": "conv2", ...,
         "generator": {"weightSparsity": 0.7, "valueModel": "clustered",
                       "scale": 6.0, "seed": 11}}]}

Relative tensor paths resolve against the manifest's directory. A layer
may name files, a generator, or both (files win).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor import LayerSpec, as_tensor16, check_precision, gen_synthetic
from .tensorio import load_tensor, store_tensor


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    weight_sparsity: float
    value_model: str = "uniform"
    seed: int = 0
    scale: float = 8.0

    def to_dict(self) -> dict:
        return {"weightSparsity": self.weight_sparsity, "valueModel": self.value_model,
                "seed": self.seed, "scale": self.scale}


@dataclass
class ManifestLayer:
    spec: LayerSpec
    weights_path: Path | None = None
    activations_path: Path | None = None
    generator: GeneratorSpec | None = None

    def load(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights [K,Fx,Fy,C] and activations [Ax,Ay,C] for this layer."""
        gen = None
        if self.weights_path is None or self.activations_path is None:
            if self.generator is None:
                raise ManifestError(f"layer {self.spec.name}: no tensor files and no generator")
            g = self.generator
            gen = gen_synthetic(self.spec, g.weight_sparsity, g.value_model, g.seed, g.scale)
        weights = _read(self.weights_path) if self.weights_path else gen[0]
        acts = _read(self.activations_path) if self.activations_path else gen[1]
        weights = as_tensor16(weights, self.spec.weight_dims)
        acts = as_tensor16(acts, self.spec.activation_dims)
        check_precision(self.spec, acts)
        return weights, acts


def _read(path: Path) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"tensor file not found: {path}")
    return load_tensor(path)


@dataclass
class Manifest:
    network: str
    layers: list[ManifestLayer] = field(default_factory=list)
    source: Path | None = None

    def to_dict(self) -> dict:
        base = self.source.parent if self.source else None
        out = []
        for ml in self.layers:
            s = ml.spec
            d = {"name": s.name, "ax": s.ax, "ay": s.ay, "c": s.c, "fx": s.fx, "fy": s.fy,
                 "kk": s.kk, "stride": s.stride, "relu": s.relu,
                 "precisionBits": s.precision_bits}
            for key, p in (("weights", ml.weights_path), ("activations", ml.activations_path)):
                if p is not None:
                    d[key] = os.path.relpath(p, base) if base else str(p)
            if ml.generator is not None:
                d["generator"] = ml.generator.to_dict()
            out.append(d)
        return {"network": self.network, "layers": out}


_GEOMETRY = ("ax", "ay", "c", "fx", "fy", "kk")


def parse_manifest(doc: dict, base: Path | None = None) -> Manifest:
    if not isinstance(doc, dict) or "layers" not in doc:
        raise ManifestError("manifest must be an object with a 'layers' list")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        missing = [f for f in _GEOMETRY if f not in entry]
        if missing:
            raise ManifestError(f"layer {i}: missing fields {missing}")
        try:
            spec = LayerSpec(**{f: int(entry[f]) for f in _GEOMETRY},
                             stride=int(entry.get("stride", 1)),
                             relu=bool(entry.get("relu", False)),
                             precision_bits=int(entry.get("precisionBits", 16)),
                             name=str(entry.get("name", f"layer{i}")))
        except ValueError as exc:
            raise ManifestError(f"layer {i}: {exc}") from exc

        def resolve(key):
            if key not in entry:
                return None
            p = Path(entry[key])
            return p if p.is_absolute() or base is None else base / p

        gen = None
        if "generator" in entry:
            g = entry["generator"]
            gen = GeneratorSpec(float(g["weightSparsity"]), g.get("valueModel", "uniform"),
                                int(g.get("seed", 0)), float(g.get("scale", 8.0)))
        layers.append(ManifestLayer(spec, resolve("weights"), resolve("activations"), gen))
    if not layers:
        raise ManifestError("manifest has no layers")
    return Manifest(str(doc.get("network", "network")), layers)


def load_manifest(path: str | os.PathLike) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: {exc}") from exc
    m = parse_manifest(doc, path.parent)
    m.source = path
    return m


# a small CNN-shaped network for desk-scale experiments
PRESETS: dict[str, list[dict]] = {
    "tiny": [
        dict(name="conv1", ax=18, ay=18, c=8, fx=3, fy=3, kk=32, stride=1, precisionBits=9),
        dict(name="conv2", ax=16, ay=16, c=32, fx=3, fy=3, kk=32, stride=2, precisionBits=8),
        dict(name="conv3", ax=7, ay=7, c=32, fx=3, fy=3, kk=64, stride=1, precisionBits=8),
        dict(name="fc", ax=5, ay=5, c=64, fx=5, fy=5, kk=16, stride=1, precisionBits=7),
    ],
}


def write_synthetic(out_dir: str | os.PathLike, preset: str = "tiny", network: str | None = None,
                    weight_sparsity: float = 0.6, value_model: str = "clustered",
                    scale: float = 8.0, seed: int = 0) -> Path:
    """Generate tensors for a preset network and write them plus a manifest."""
    if preset not in PRESETS:
        raise ManifestError(f"unknown preset {preset!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    for i, geo in enumerate(PRESETS[preset]):
        geo = dict(geo)
        pb = geo.pop("precisionBits")
        spec = LayerSpec(**geo, relu=True, precision_bits=pb)
        gen = GeneratorSpec(weight_sparsity, value_model, seed + i, scale)
        w, a = gen_synthetic(spec, weight_sparsity, value_model, gen.seed, scale)
        wp, ap = out / f"{spec.name}.w.tclt", out / f"{spec.name}.a.tclt"
        store_tensor(wp, w)
        store_tensor(ap, a)
        layers.append(ManifestLayer(spec, wp, ap, gen))
    path = out / "manifest.json"
    m = Manifest(network or preset, layers, path)
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh, indent=2)
        fh.write("\n")
    return path
