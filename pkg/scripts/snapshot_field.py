#!/usr/bin/env python3
"""Dump stream-function and speed fields for one protocol snapshot.

    python scripts/snapshot_field.py --word "1 -2" --time 0.5 --n 201 --out out/
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from stirflow.braid import parse_braid
from stirflow.field import FlowConditions, SolverOptions
from stirflow.protocol import build_protocol
from stirflow.transport import ProtocolFlow


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--word", default="1 -2")
    ap.add_argument("--time", type=float, default=0.5)
    ap.add_argument("--omega", type=float, default=0.0)
    ap.add_argument("--n", type=int, default=201)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()

    protocol = build_protocol(parse_braid(args.word))
    eps = protocol.config.radius
    area = math.pi * (1 - 3 * eps**2)
    cond = FlowConditions(args.omega, (args.omega * area, 0.0, 0.0, 0.0), area)
    flow = ProtocolFlow(protocol, cond, SolverOptions())
    model = flow.model_at(args.time)
    print(f"t = {args.time}: max normal residual {model.report.max_normal_residual:.2e}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    xs = np.linspace(-1, 1, args.n)
    with open(out / "snapshot.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "psi", "speed"])
        for yv in xs:
            row_z = xs + 1j * yv
            inside = model.snapshot.contains(row_z)
            psi = np.where(inside, model.stream(row_z, check=False), np.nan)
            speed = np.where(inside, np.abs(model.velocity(row_z, check=False)), np.nan)
            for xv, p, s in zip(xs, psi, speed):
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(p)), repr(float(s))])
    print(f"wrote {out / 'snapshot.csv'}")


if __name__ == "__main__":
    main()
