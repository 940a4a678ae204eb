#!/usr/bin/env python3
"""Ridge atlas: curved soliton ridge positions over a y-grid and t-list.

Emits one CSV with (t, n, y, x_ridge, x_refined, u_peak) and one JSON with
the minimizer-frame trajectory (k0, speed, amplitude) along Y.

Usage: python scripts/ridge_atlas.py [--out OUT] [--N 3] [--t 1000,10000]
"""

import argparse
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from kplab.asymptotics import ridge_curves
from kplab.domain import default_domain
from kplab.phase import FrameCache


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--t", default="1000,10000")
    ap.add_argument("--y-span", type=float, default=0.8,
                    help="y ranges over [-span, span] * t")
    ap.add_argument("--n-y", type=int, default=17)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    domain = default_domain()
    cache = FrameCache(domain)
    n_max = (args.N + 1) // 2

    path = os.path.join(args.out, "ridge_atlas.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,n,y,x_ridge,x_refined,u_peak\n")
        for t in (float(v) for v in args.t.split(",")):
            ys = np.linspace(-args.y_span * t, args.y_span * t, args.n_y)
            for n in range(1, n_max + 1):
                curve = ridge_curves(domain, t, n, ys, N=args.N, cache=cache)
                for p in curve.points:
                    fh.write(f"{t:.16e},{n},{p.y:.16e},{p.x_ridge:.16e},"
                             f"{p.x_refined:.16e},{p.u_peak:.16e}\n")
                for y, reason in curve.gaps:
                    print(f"gap at t={t}, n={n}, y={y}: {reason}")

    frames = {repr(Y): fr.as_dict() for Y, fr in sorted(cache._frames.items())}
    fpath = os.path.join(args.out, "frame_trajectory.json")
    with open(fpath, "w", encoding="utf-8") as fh:
        json.dump(frames, fh, indent=2, sort_keys=True)
    print(f"wrote {path} and {fpath}")


if __name__ == "__main__":
    main()
