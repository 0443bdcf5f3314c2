"""Command-line entry point.

Exit status: 0 on success, 2 on usage errors, 1 on data errors (missing
files, malformed tensors or manifests, precision violations).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .cycles import DCNN, TCL_E, TCL_P, TCL_WS, ArchConfig, layer_schedules
from .manifest import ManifestError, PRESETS, load_manifest, write_synthetic
from .network import potential_csv, simulate_network, to_csv, to_json
from .potential import WorkCounts, mean_speedups, work_counts
from .scnn import ScnnConfig
from .schedule import (CorruptScheduleError, contiguous_pattern, dump_schedule, read_pattern,
                       write_pattern)
from .search import greedy_prune_search
from .tensor import PrecisionError, ShapeError, VALUE_MODELS
from .tensorio import TensorFormatError

ARCHS = {"dcnn": DCNN, "tcl-ws": TCL_WS, "tclp": TCL_P, "tcle": TCL_E, "scnn": "scnn"}
DATA_ERRORS = (OSError, ManifestError, TensorFormatError, PrecisionError, ShapeError,
               CorruptScheduleError, ValueError)


class UsageError(Exception):
    pass


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_geometry(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lanes", type=int, default=16, help="weight lanes per filter (N)")
    p.add_argument("--filters-per-tile", type=int, default=16, help="filters per tile (k)")
    p.add_argument("--tiles", type=int, default=4)
    p.add_argument("--windows-parallel", type=int, default=16)


def _add_pattern(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h", type=int, default=None, help="lookahead depth (default 2)")
    p.add_argument("--d", type=int, default=None, help="lookaside lanes (default 5)")
    p.add_argument("--pattern", default=None, help="pattern file, exclusive with --h/--d")


def _pattern_from(args):
    if args.pattern is not None:
        if args.h is not None or args.d is not None:
            raise UsageError("--pattern cannot be combined with --h/--d")
        return read_pattern(args.pattern)
    h = 2 if args.h is None else args.h
    d = (5 if args.h is None else 0) if args.d is None else args.d
    try:
        return contiguous_pattern(h, d, args.lanes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="accelsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write a synthetic manifest and tensors")
    g.add_argument("--out-dir", required=True)
    g.add_argument("--preset", choices=sorted(PRESETS), default="tiny")
    g.add_argument("--network", default=None)
    g.add_argument("--sparsity", type=float, default=0.6)
    g.add_argument("--value-model", choices=VALUE_MODELS, default="clustered")
    g.add_argument("--scale", type=float, default=8.0)
    g.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("potential", help="ideal speedups per layer")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)

    s = sub.add_parser("schedule", help="dump the compiled schedule of one filter group")
    s.add_argument("--manifest", required=True)
    s.add_argument("--layer", default=None, help="layer name (default: first)")
    s.add_argument("--group", type=int, default=0, help="filter group index")
    s.add_argument("--out", default=None)
    _add_pattern(s)
    _add_geometry(s)

    m = sub.add_parser("sim", help="simulate a network")
    m.add_argument("--manifest", required=True)
    m.add_argument("--arch", required=True, choices=sorted(ARCHS))
    m.add_argument("--format", choices=("csv", "json"), default="csv")
    m.add_argument("--out", default=None)
    m.add_argument("--max-shift", type=int, default=None,
                   help="tcle: pad cycles when oneffset exponents are further apart")
    m.add_argument("--am-bytes", type=int, default=None, help="recorded only, not timed")
    m.add_argument("--wm-bytes", type=int, default=None, help="recorded only, not timed")
    _add_pattern(m)
    _add_geometry(m)

    r = sub.add_parser("search", help="greedy promotion-site pruning")
    r.add_argument("--manifest", required=True)
    r.add_argument("--h", type=int, default=2)
    r.add_argument("--distance", type=int, default=7)
    r.add_argument("--target", type=int, default=7)
    r.add_argument("--pattern-out", default=None)
    r.add_argument("--out", default=None)
    _add_geometry(r)
    return ap


def _arch_config(args, mode: str) -> ArchConfig:
    return ArchConfig(mode=mode, n=args.lanes, k=args.filters_per_tile, tiles=args.tiles,
                      windows_parallel=args.windows_parallel, pattern=_pattern_from(args),
                      max_shift=getattr(args, "max_shift", None),
                      am_bytes=getattr(args, "am_bytes", None),
                      wm_bytes=getattr(args, "wm_bytes", None))


def cmd_gen(args) -> dict:
    path = write_synthetic(args.out_dir, args.preset, args.network, args.sparsity,
                           args.value_model, args.scale, args.seed)
    print(path)
    return vars(args)


def cmd_potential(args) -> dict:
    man = load_manifest(args.manifest)
    names, reps = [], []
    total = WorkCounts(0, 0, 0, 0, 0, 0)
    for ml in man.layers:
        w, a = ml.load()
        wc = work_counts(ml.spec, w, a)
        total = total + wc
        names.append(ml.spec.name)
        reps.append(wc.report())
    names += ["mean", "weighted"]
    reps += [mean_speedups(reps), total.report()]
    _emit(potential_csv(names, reps), args.out)
    return {"cmd": "potential", "manifest": man.to_dict()}


def cmd_schedule(args) -> dict:
    man = load_manifest(args.manifest)
    layers = {ml.spec.name: ml for ml in man.layers}
    ml = man.layers[0] if args.layer is None else layers.get(args.layer)
    if ml is None:
        raise UsageError(f"no layer named {args.layer!r}")
    arch = _arch_config(args, TCL_WS)
    w, _ = ml.load()
    schedules = layer_schedules(ml.spec, w, arch)
    if not 0 <= args.group < len(schedules):
        raise UsageError(f"group must be in 0..{len(schedules) - 1}")
    _emit(dump_schedule(schedules[args.group]), args.out)
    return {"cmd": "schedule", "layer": ml.spec.name, "group": args.group,
            "arch": _describe(arch)}


def _describe(arch: ArchConfig) -> dict:
    return {"mode": arch.mode, "n": arch.n, "k": arch.k, "tiles": arch.tiles,
            "windows_parallel": arch.windows_parallel, "h": arch.pattern.h,
            "sites": [list(s) for s in arch.pattern.sites], "max_shift": arch.max_shift,
            "am_bytes": arch.am_bytes, "wm_bytes": arch.wm_bytes}


def cmd_sim(args) -> dict:
    mode = ARCHS[args.arch]
    if mode == "scnn":
        if args.pattern is not None or args.h is not None or args.d is not None:
            raise UsageError("scnn takes no promotion pattern")
        base = ArchConfig(mode=DCNN, n=args.lanes, k=args.filters_per_tile, tiles=args.tiles,
                          windows_parallel=args.windows_parallel)
        archs = [base, ScnnConfig()]
        desc = {"mode": "scnn", "baseline": _describe(base)}
    elif mode == DCNN:
        base = ArchConfig(mode=DCNN, n=args.lanes, k=args.filters_per_tile, tiles=args.tiles,
                          windows_parallel=args.windows_parallel)
        archs = [base]
        desc = _describe(base)
    else:
        cfg = _arch_config(args, mode)
        archs = [cfg]
        desc = _describe(cfg)
    man = load_manifest(args.manifest)
    report = simulate_network(man, archs)
    _emit(to_csv(report) if args.format == "csv" else to_json(report), args.out)
    return {"cmd": "sim", "arch": desc, "format": args.format, "manifest": man.to_dict()}


def cmd_search(args) -> dict:
    man = load_manifest(args.manifest)
    network = [(ml.spec, ml.load()[0]) for ml in man.layers]
    arch = ArchConfig(mode=TCL_WS, n=args.lanes, k=args.filters_per_tile, tiles=args.tiles,
                      windows_parallel=args.windows_parallel)
    trace = greedy_prune_search(network, args.h, args.distance, args.target, arch)
    if args.pattern_out:
        write_pattern(args.pattern_out, trace.final_pattern)
    _emit(trace.to_csv(), args.out)
    return {"cmd": "search", "h": args.h, "distance": args.distance, "target": args.target,
            "arch": _describe(arch), "manifest": man.to_dict()}


COMMANDS = {"gen": cmd_gen, "potential": cmd_potential, "schedule": cmd_schedule,
            "sim": cmd_sim, "search": cmd_search}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = COMMANDS[args.cmd](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"accelsim: error: {exc}", file=sys.stderr)
        return 2
    except DATA_ERRORS as exc:
        print(f"accelsim: {exc}", file=sys.stderr)
        return 1
    print(f"config {config_digest(config)}", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run_cli())
