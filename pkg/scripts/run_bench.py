#!/usr/bin/env python3
"""Scaling smoke benchmarks: hybrid sampler time/memory against N and MPS
sampling time against chain length at fixed bond dimension."""

import argparse
import json
import tempfile

from magiclab.cli import main as cli_main

CONFIG = {
    "hybrid_n": [10, 12],
    "mps_n": [8, 12, 16, 20],
    "chi": 16,
    "samples": 512,
    "memory_n": [12, 14],
    "filename": "bench.json",
}

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/acceptance")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        path = fh.name
    raise SystemExit(
        cli_main(["bench", "--config", path, "--seed", str(args.seed), "--out", args.out])
    )
