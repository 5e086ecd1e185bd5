"""Run every bundled preset (or the named ones) and print the headline rows.

    python3 scripts/run_presets.py [--out-dir runs] [--workers N] [--trajectories N] [preset ...]
"""
import argparse
import csv
import time
from pathlib import Path

from kfsim.config import load_preset, parse_config, preset_names

HEADLINE = ("plaquette", "zz_link", "loop", "chern", "contrast", "asymmetry", "nonconservation", "m_s_round",
            "n_depth")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*")
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--trajectories", type=int, help="override for a quick pass")
    args = ap.parse_args()

    from kfsim.runner import run

    for name in args.presets or preset_names():
        data = load_preset(name)
        if args.trajectories:
            data["trajectories"] = args.trajectories
        cfg = parse_config(data)
        out = Path(args.out_dir) / name
        t0 = time.perf_counter()
        res = run(cfg, out, args.workers)
        print(f"== {name} ({time.perf_counter() - t0:.1f}s) -> {res.files[0]}")
        print(f"   {cfg.description}")
        with res.files[0].open() as f:
            for row in csv.DictReader(f):
                if row["observable"].startswith(HEADLINE):
                    print("   " + ", ".join(f"{k}={v}" for k, v in row.items()))


if __name__ == "__main__":
    main()
