#!/usr/bin/env python3
"""Doped-Clifford scan: m_1 and magic capacity against T-gate density.

Produces results/acceptance/cliffordt.csv (per-seed rows) and
cliffordt_agg.csv (per-(N,z) means with the dm1/dz column) for the
desk-scale doping phenomenology and the doping-scan figure.
"""

import argparse
import json
import tempfile

from magiclab.cli import main as cli_main

CONFIG = {
    "n_list": [8, 10, 12],
    "z_grid": {"start": 0.0, "stop": 4.0, "step": 0.25},
    "seeds": 50,
    "samples": 2048,
}


def run(out_dir: str, seed: int, threads: int) -> int:
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        path = fh.name
    return cli_main(
        [
            "cliffordt",
            "--config",
            path,
            "--seed",
            str(seed),
            "--threads",
            str(threads),
            "--out",
            out_dir,
        ]
    )


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/acceptance")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=2)
    args = ap.parse_args()
    raise SystemExit(run(args.out, args.seed, args.threads))
