#!/usr/bin/env python3
"""Render the standard figure panels from the acceptance scan outputs.

Requires the magiclab-figures package; consumes only the CSV/JSON files in
the results directory (run the scan scripts first).
"""

import argparse
import json
import os
import subprocess
import sys

PANELS = [
    {"kind": "doping-scan", "inputs": ["cliffordt_agg.csv"], "out": "doping_m1.png", "metric": "m1"},
    {"kind": "doping-scan", "inputs": ["cliffordt_agg.csv"], "out": "doping_dm1dz.png", "metric": "dm1_dz"},
    {"kind": "doping-scan", "inputs": ["cliffordt_agg.csv"], "out": "doping_cm.png", "metric": "c_m"},
    {"kind": "doping-scan", "inputs": ["cliffordt_agg.csv"], "out": "doping_cm_per_site.png", "metric": "c_m", "rescale": "per_site"},
    {"kind": "ground-scan", "inputs": ["tfim_scan.csv"], "out": "tfim_m1.png", "metric": "m1", "rescale": "per_site"},
    {"kind": "ground-scan", "inputs": ["tfim_scan.csv"], "out": "tfim_cm_per_site.png", "metric": "c_m", "rescale": "per_site"},
    {"kind": "ground-scan", "inputs": ["tfim_rotated_scan.csv"], "out": "tfim_rot_m2.png", "metric": "m2", "rescale": "per_site"},
    {"kind": "ground-scan", "inputs": ["tfim_rotated_scan.csv"], "out": "tfim_rot_i2.png", "metric": "i2"},
    {"kind": "mutual-compare", "inputs": ["tfim_scan.csv"], "out": "tfim_mutual_compare.png"},
    {"kind": "ground-scan", "inputs": ["xxz_scan.csv"], "out": "xxz_cm_per_site_sq.png", "metric": "c_m", "rescale": "per_site_sq"},
    {"kind": "ground-scan", "inputs": ["xxz_scan.csv"], "out": "xxz_i1q.png", "metric": "i1q"},
    {"kind": "bench", "inputs": ["bench.json"], "out": "bench.png"},
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--results", default="results/acceptance")
    args = ap.parse_args()
    failures = 0
    for panel in PANELS:
        spec = dict(panel)
        spec["inputs"] = [os.path.join(args.results, f) for f in spec["inputs"]]
        spec["out"] = os.path.join(args.results, spec["out"])
        if not all(os.path.exists(p) for p in spec["inputs"]):
            print(f"skip {spec['out']} (missing inputs)")
            continue
        spec_path = spec["out"] + ".spec.json"
        with open(spec_path, "w") as fh:
            json.dump(spec, fh)
        code = subprocess.call([sys.executable, "-m", "figures.cli", "--spec", spec_path])
        failures += code != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
