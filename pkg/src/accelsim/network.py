"""Whole-network simulation and report emission (CSV / JSON)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

from .cycles import DCNN, ArchConfig, CycleReport, cycles_dcnn, layer_schedules, simulate_layer
from .manifest import Manifest
from .potential import format_speedup
from .scnn import ScnnConfig, simulate_scnn

Arch = Union[ArchConfig, ScnnConfig]

CSV_FIELDS = ("network", "layer", "arch", "h", "d", "sites", "cycles", "dcnn_cycles",
              "speedup", "columns", "bubbles", "macs", "bits_broadcast")


def arch_label(arch: Arch) -> str:
    return "scnn" if isinstance(arch, ScnnConfig) else arch.label


@dataclass
class ArchSummary:
    arch: str
    cycles: int
    dcnn_cycles: int
    mean_speedup: float
    geomean_speedup: float

    @property
    def speedup(self) -> float:
        return self.dcnn_cycles / self.cycles if self.cycles else math.inf


@dataclass
class NetworkReport:
    network: str
    rows: list[CycleReport] = field(default_factory=list)

    def summaries(self) -> list[ArchSummary]:
        order: list[str] = []
        by_arch: dict[str, list[CycleReport]] = {}
        for r in self.rows:
            if r.arch not in by_arch:
                order.append(r.arch)
                by_arch[r.arch] = []
            by_arch[r.arch].append(r)
        out = []
        for arch in order:
            rs = by_arch[arch]
            sp = [r.speedup for r in rs]
            geo = math.exp(sum(math.log(s) for s in sp) / len(sp)) if all(
                0 < s < math.inf for s in sp) else math.nan
            out.append(ArchSummary(arch, sum(r.cycles for r in rs), sum(r.dcnn_cycles for r in rs),
                                   sum(sp) / len(sp), geo))
        return out


def simulate_network(manifest: Manifest, archs: Sequence[Arch]) -> NetworkReport:
    """One row per (layer, arch) in manifest order; a dcnn row always leads.

    The dcnn baseline uses the lane/filter/tile geometry of the first
    ArchConfig given (defaults otherwise). SCNN skips fully-connected layers.
    """
    tcl = [a for a in archs if isinstance(a, ArchConfig)]
    base = replace(tcl[0] if tcl else ArchConfig(), mode=DCNN)
    archs = [a for a in archs if not (isinstance(a, ArchConfig) and a.mode == DCNN)]

    report = NetworkReport(manifest.network)
    for ml in manifest.layers:
        layer = ml.spec
        weights, acts = ml.load()
        report.rows.append(simulate_layer(layer, weights, acts, base))
        dcnn = cycles_dcnn(layer, base)
        cache: dict = {}
        for arch in archs:
            if isinstance(arch, ScnnConfig):
                if layer.is_fully_connected:
                    continue
                report.rows.append(simulate_scnn(layer, weights, acts, arch, dcnn_cycles=dcnn))
                continue
            key = (arch.pattern, arch.n, arch.k)
            if key not in cache:
                cache[key] = layer_schedules(layer, weights, arch)
            row = simulate_layer(layer, weights, acts, arch, cache[key])
            row.dcnn_cycles = dcnn
            report.rows.append(row)
    return report


def _row_values(network: str, r: CycleReport) -> list:
    return [network, r.layer, r.arch, r.h, r.d, r.sites, r.cycles, r.dcnn_cycles,
            f"{r.speedup:.4f}", r.columns, r.bubbles, r.macs, r.bits_broadcast]


def to_csv(report: NetworkReport) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_FIELDS)
    for r in report.rows:
        out.writerow(_row_values(report.network, r))
    return buf.getvalue()


def to_json(report: NetworkReport) -> str:
    rows = [dict(zip(CSV_FIELDS, _row_values(report.network, r)), histogram=r.histogram)
            for r in report.rows]
    for row in rows:
        row["speedup"] = float(row["speedup"])
        row["histogram"] = {str(k): v for k, v in row["histogram"].items()}
    summaries = [{"arch": s.arch, "cycles": s.cycles, "dcnn_cycles": s.dcnn_cycles,
                  "speedup": round(s.speedup, 6), "mean_speedup": round(s.mean_speedup, 6),
                  "geomean_speedup": round(s.geomean_speedup, 6)}
                 for s in report.summaries()]
    return json.dumps({"network": report.network, "rows": rows, "summary": summaries},
                      indent=2, sort_keys=False) + "\n"


def parse_csv(text: str) -> tuple[str, list[CycleReport]]:
    """Inverse of :func:`to_csv`; returns (network, rows)."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    network = ""
    rows = []
    for rec in reader:
        network = rec["network"]
        rows.append(CycleReport(
            layer=rec["layer"], arch=rec["arch"], cycles=int(rec["cycles"]),
            dcnn_cycles=int(rec["dcnn_cycles"]), h=int(rec["h"]), d=int(rec["d"]),
            sites=int(rec["sites"]), columns=int(rec["columns"]), bubbles=int(rec["bubbles"]),
            macs=int(rec["macs"]), bits_broadcast=int(rec["bits_broadcast"])))
    return network, rows


def potential_csv(names: Iterable[str], reports: Iterable) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["layer", "A", "W", "WA", "WAp", "WAe"])
    for name, rep in zip(names, reports):
        out.writerow([name] + [format_speedup(v) for v in rep.values()])
    return buf.getvalue()
