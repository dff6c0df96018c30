"""CSV-driven figure rendering.

Each figure kind maps directly onto the scan CSVs:

    doping-scan     cliffordt aggregate CSV; metric vs z, one curve per N
    ground-scan     groundstate CSV(s); metric vs the scan parameter
    mutual-compare  groundstate CSV; every mutual-SRE series it carries
    bench           bench JSON; per-sample time vs qubit count

Capacity rescalings (C_M, C_M/N, C_M/N^2) are axis options applied at plot
time; the CSVs stay untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

SCHEMA = "magiclab-csv v1"

KINDS = ("doping-scan", "ground-scan", "mutual-compare", "bench")

RESCALES = {"none": 0, "per_site": 1, "per_site_sq": 2}

MUTUAL_COLUMNS = {
    "i2": "mutual 2-SRE",
    "i1q": "mutual von-Neumann SRE (q)",
    "i1p_oracle": "mutual von-Neumann SRE (p, exact)",
    "i1q_oracle": "mutual von-Neumann SRE (q, exact)",
    "i2_oracle": "mutual 2-SRE (exact)",
}


class SchemaMismatch(ValueError):
    pass


class MissingColumns(ValueError):
    def __init__(self, names, path):
        super().__init__(f"columns {sorted(names)} missing from {path}")
        self.names = sorted(names)


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    out: str
    metric: str = "m1"
    rescale: str = "none"
    title: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.rescale not in RESCALES:
            raise ValueError(f"unknown rescale {self.rescale!r}")
        if not self.inputs:
            raise ValueError("need at least one input file")

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(**payload)


def load_csv(path):
    """Parse a magiclab CSV; returns (meta, columns dict of float arrays)."""
    meta = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, val = body.split(":", 1)
                    meta[key.strip()] = val.strip()
                else:
                    meta.setdefault("schema", body)
                continue
            if header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    if meta.get("schema") != SCHEMA:
        raise SchemaMismatch(
            f"{path}: schema {meta.get('schema')!r} does not match {SCHEMA!r}"
        )
    cols = {}
    for i, name in enumerate(header):
        vals = []
        for row in rows:
            try:
                vals.append(float(row[i]))
            except ValueError:
                vals.append(np.nan)
        cols[name] = np.asarray(vals)
    return meta, cols


def _require(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise MissingColumns(missing, path)


def _apply_rescale(values, n_qubits, rescale):
    return values / np.power(n_qubits, RESCALES[rescale])


def _render_doping(spec, ax):
    series = {}
    for path in spec.inputs:
        _, cols = load_csv(path)
        metric_col = {"m1": "m1_mean", "c_m": "c_m_mean", "dm1_dz": "dm1_dz"}.get(
            spec.metric, spec.metric
        )
        _require(cols, ["N", "z", metric_col], path)
        for n in np.unique(cols["N"]):
            mask = cols["N"] == n
            z = cols["z"][mask]
            y = _apply_rescale(cols[metric_col][mask], n, spec.rescale)
            order = np.argsort(z)
            label = f"N={int(n)}"
            series[label] = (z[order], y[order])
            ax.plot(z[order], y[order], marker="o", ms=3, label=label)
    ax.set_xlabel("T-gate density z")
    ax.set_ylabel(_axis_label(spec))
    ax.legend()
    return series


def _render_ground(spec, ax):
    series = {}
    for path in spec.inputs:
        _, cols = load_csv(path)
        _require(cols, ["N", "parameter", spec.metric], path)
        keep = cols.get("failed")
        mask_ok = keep == 0 if keep is not None else np.ones(len(cols["N"]), bool)
        for n in np.unique(cols["N"][mask_ok]):
            mask = mask_ok & (cols["N"] == n)
            x = cols["parameter"][mask]
            y = _apply_rescale(cols[spec.metric][mask], n, spec.rescale)
            order = np.argsort(x)
            label = f"N={int(n)}"
            if len(spec.inputs) > 1:
                label += f" [{path.rsplit('/', 1)[-1]}]"
            series[label] = (x[order], y[order])
            ax.plot(x[order], y[order], marker="o", ms=3, label=label)
    ax.set_xlabel("coupling")
    ax.set_ylabel(_axis_label(spec))
    ax.legend()
    return series


def _render_mutual_compare(spec, ax):
    series = {}
    for path in spec.inputs:
        _, cols = load_csv(path)
        _require(cols, ["parameter"], path)
        present = [c for c in MUTUAL_COLUMNS if c in cols and np.isfinite(cols[c]).any()]
        if not present:
            raise MissingColumns(list(MUTUAL_COLUMNS), path)
        keep = cols.get("failed")
        mask_ok = keep == 0 if keep is not None else np.ones(len(cols["parameter"]), bool)
        x = cols["parameter"][mask_ok]
        order = np.argsort(x)
        for name in present:
            y = cols[name][mask_ok][order]
            if not np.isfinite(y).any():
                continue
            label = MUTUAL_COLUMNS[name]
            series[label] = (x[order], y)
            ax.plot(x[order], y, marker="o", ms=3, label=label)
    ax.set_xlabel("coupling")
    ax.set_ylabel("mutual SRE")
    ax.legend()
    return series


def _render_bench(spec, ax):
    series = {}
    for path in spec.inputs:
        with open(path) as fh:
            payload = json.load(fh)
        for group in ("hybrid", "mps"):
            rows = payload.get(group, [])
            if not rows:
                continue
            n = np.array([r["n_qubits"] for r in rows], dtype=float)
            t = np.array([r["seconds_per_sample"] for r in rows])
            series[group] = (n, t)
            ax.plot(n, t, marker="o", label=group)
    ax.set_yscale("log")
    ax.set_xlabel("qubits")
    ax.set_ylabel("seconds per sample")
    ax.legend()
    return series


def _axis_label(spec):
    suffix = {"none": "", "per_site": " / N", "per_site_sq": " / N^2"}[spec.rescale]
    return spec.metric + suffix


_RENDERERS = {
    "doping-scan": _render_doping,
    "ground-scan": _render_ground,
    "mutual-compare": _render_mutual_compare,
    "bench": _render_bench,
}


def render(spec: FigureSpec):
    """Render the figure, write the image, and return the plotted series.

    The returned dict maps series label to (x, y) arrays exactly as drawn,
    so callers can diff them against the CSV contents.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.6), dpi=150)
    try:
        series = _RENDERERS[spec.kind](spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        fig.savefig(spec.out)
    finally:
        plt.close(fig)
    return series
