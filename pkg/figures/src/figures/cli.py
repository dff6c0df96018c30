"""figures --spec FILE: render one figure described by a JSON spec.

The spec mirrors FigureSpec: {"kind": "doping-scan" | "ground-scan" |
"mutual-compare" | "bench", "inputs": [csv...], "out": "plot.png",
"metric": "m1", "rescale": "none" | "per_site" | "per_site_sq"}.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, MissingColumns, SchemaMismatch, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("--spec", required=True, help="JSON figure spec")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec.from_json(args.spec)
        series = render(spec)
    except (SchemaMismatch, MissingColumns, ValueError, OSError) as exc:
        print(f"figures error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.out} ({len(series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
