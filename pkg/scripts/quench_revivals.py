"""Noiseless excitation number after the pair quench for several theta_z / theta_xy ratios.

    python3 scripts/quench_revivals.py [--depth 12]
"""
import argparse

from kfsim.config import parse_config
from kfsim.runner import simulate, summary_rows


def trace(theta_xy, theta_z, depth):
    cfg = parse_config({"protocol": {"kind": "quench", "theta_xy": theta_xy, "theta_z": theta_z, "depth": depth},
                        "noise": None, "trajectories": 1})
    exp, snaps = simulate(cfg)
    rows = {r.observable: r.mean for r in summary_rows(exp, snaps, cfg.postselection)}
    return [rows[f"n_depth{d}"] for d in range(depth + 1)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--theta-xy", type=float, default=-0.125)
    args = ap.parse_args()
    for ratio in (-1, -2, -4, -8):
        tz = ratio * args.theta_xy
        n = trace(args.theta_xy, tz, args.depth)
        print(f"theta_z={tz:+.3f}  " + " ".join(f"{v:.3f}" for v in n))


if __name__ == "__main__":
    main()
