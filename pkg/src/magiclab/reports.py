"""Shared estimator report container, seeded streams, and jackknife errors.

Reproducibility contract: sample streams are keyed by (seed, batch index)
with a fixed internal batch size, so results are identical no matter how
batches are distributed over workers; grid drivers derive per-point seeds
the same way from (master seed, point index).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

DEFAULT_BATCH = 4096


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Deterministic child stream for (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def derived_seed(seed: int, index: int) -> int:
    """A plain integer seed derived from (seed, index), for worker dispatch."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


@dataclass
class EstimateReport:
    """A sampled estimate with its standard error and provenance."""

    estimator: str
    value: float
    stderr: float
    n_samples: int
    seed: int
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("need at least 2 samples for an error bar")

    def to_json(self) -> dict:
        out = {
            "estimator": self.estimator,
            "value": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "wall_time": self.wall_time,
        }
        out.update(self.extras)
        return out


def mean_report(
    name: str, values: np.ndarray, seed: int, t0: float, keep_samples=False, **extras
) -> EstimateReport:
    values = np.asarray(values, dtype=float)
    k = values.size
    return EstimateReport(
        estimator=name,
        value=float(values.mean()),
        stderr=float(values.std(ddof=1) / np.sqrt(k)),
        n_samples=k,
        seed=seed,
        wall_time=time.perf_counter() - t0,
        extras=extras,
        samples=values if keep_samples else None,
    )


def variance_report(
    name: str, values: np.ndarray, seed: int, t0: float, **extras
) -> EstimateReport:
    """Bias-corrected sample variance with a fourth-moment standard error."""
    values = np.asarray(values, dtype=float)
    k = values.size
    var = float(values.var(ddof=1))
    m4 = float(np.mean((values - values.mean()) ** 4))
    se = float(np.sqrt(max(m4 - (k - 3) / (k - 1) * var**2, 0.0) / k))
    return EstimateReport(
        estimator=name,
        value=var,
        stderr=se,
        n_samples=k,
        seed=seed,
        wall_time=time.perf_counter() - t0,
        extras=extras,
    )


def jackknife_log_mean(values: np.ndarray, n_blocks: int = 50):
    """Bias-corrected estimate and error of -ln(mean(values)) by block jackknife."""
    values = np.asarray(values, dtype=float)
    n_blocks = min(n_blocks, values.size)
    blocks = np.array_split(values, n_blocks)
    sums = np.array([b.sum() for b in blocks])
    sizes = np.array([b.size for b in blocks])
    total, count = sums.sum(), sizes.sum()
    theta_full = -np.log(total / count)
    theta_drop = -np.log((total - sums) / (count - sizes))
    theta_bar = theta_drop.mean()
    estimate = n_blocks * theta_full - (n_blocks - 1) * theta_bar
    err = np.sqrt((n_blocks - 1) / n_blocks * np.sum((theta_drop - theta_bar) ** 2))
    return float(estimate), float(err)
