"""Command-line front end: ``kfsim run | sweep | validate | lattice dump``.

Exit codes: 0 success, 1 failed validation, 2 schema error, 3 runtime invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys

from kfsim.config import SchemaError, load_config, load_preset, parse_config, preset_names, set_dotted

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_INVARIANT = 0, 1, 2, 3
_UNSET = object()  # distinguishes "flag absent" from an explicit "none"


def _nonneg_or_none(s: str):
    if s.lower() in ("none", "null", "off"):
        return None
    return int(s)


def _add_run_flags(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--preset", help="bundled configuration: " + ", ".join(preset_names()))
    p.add_argument("--out-dir", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: $KFS_THREADS or 1)")
    p.add_argument("--loss-radius", type=_nonneg_or_none, default=_UNSET, help="loss postselection radius, or 'none'")
    p.add_argument("--decoding-threshold", type=_nonneg_or_none, default=_UNSET,
                   help="max column-parity violations kept, or 'none'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kfsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    _add_run_flags(sub.add_parser("run", help="run one configuration"))
    sw = sub.add_parser("sweep", help="run the grid in the config's sweep section")
    _add_run_flags(sw)
    sw.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2",
                    help="add or replace a sweep axis, values parsed as JSON")
    va = sub.add_parser("validate", help="run the invariant suite")
    va.add_argument("--fast", action="store_true", help="fewer random circuits, skip the slow checks")
    lat = sub.add_parser("lattice", help="lattice utilities")
    lsub = lat.add_subparsers(dest="lattice_cmd", required=True)
    d = lsub.add_parser("dump", help="print the lattice as JSON")
    d.add_argument("--rows", type=int, default=4)
    d.add_argument("--cols", type=int, default=8)
    d.add_argument("--boundary", default="cylinder")
    d.add_argument("--config", help="take the lattice section from this config")
    d.add_argument("--preset")
    return ap


def _load(args) -> dict:
    data = load_preset(args.preset) if args.preset else load_config(args.config)
    if not isinstance(data, dict):
        raise SchemaError("config must be a JSON object")
    for flag, key in (("seed", "seed"), ("trajectories", "trajectories"), ("workers", "workers")):
        v = getattr(args, flag)
        if v is not None:
            data[key] = v
    if args.out_dir is not None:
        data = set_dotted(data, "output.dir", args.out_dir)
    for flag, key in (("loss_radius", "postselection.loss_radius"),
                      ("decoding_threshold", "postselection.decoding_threshold")):
        if getattr(args, flag) is not _UNSET:
            data = set_dotted(data, key, getattr(args, flag))
    return data


def _parse_axis(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise SchemaError(f"--axis {spec!r}: expected KEY=V1,V2,...")
    key, vals = spec.split("=", 1)
    try:
        return key, [json.loads(v) for v in vals.split(",")]
    except json.JSONDecodeError as e:
        raise SchemaError(f"--axis {spec!r}: {e}") from e


def cmd_run(args) -> int:
    from kfsim.runner import run

    cfg = parse_config(_load(args))
    res = run(cfg, args.out_dir, args.workers)
    for f in res.files:
        print(f)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from kfsim.runner import sweep

    data = _load(args)
    if args.axis:
        axes = dict((data.get("sweep") or {}).get("axes", {}))
        for spec in args.axis:
            k, v = _parse_axis(spec)
            axes[k] = v
        data["sweep"] = {**(data.get("sweep") or {}), "axes": axes}
    if not data.get("sweep"):
        data["sweep"] = {"axes": {"seed": [data.get("seed", 0)]}}  # a one-point sweep
    res = sweep(parse_config(data), args.out_dir, args.workers)
    for f in res.files:
        print(f)
    return EXIT_OK


def cmd_validate(args) -> int:
    from kfsim.checks import run_suite

    res = run_suite(fast=args.fast)
    for r in res:
        print(r.line())
    bad = sum(not r.ok for r in res)
    print(f"{len(res) - bad}/{len(res)} checks passed")
    return EXIT_OK if bad == 0 else EXIT_FAIL


def cmd_lattice(args) -> int:
    from kfsim.config import LatticeConfig

    if args.config or args.preset:
        data = load_preset(args.preset) if args.preset else load_config(args.config)
        lc = parse_config(data).lattice
    else:
        lc = LatticeConfig(args.rows, args.cols, args.boundary)
    try:
        lat = lc.build()
    except ValueError as e:
        raise SchemaError(str(e)) from e
    print(lat.to_json())
    return EXIT_OK


def main(argv=None) -> int:
    from kfsim.gaussian import InvariantBreach

    ap = build_parser()
    args = ap.parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "lattice": cmd_lattice}
    try:
        return handlers[args.cmd](args)
    except SchemaError as e:
        print(f"kfsim: schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (InvariantBreach, ArithmeticError) as e:
        print(f"kfsim: invariant breach: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
