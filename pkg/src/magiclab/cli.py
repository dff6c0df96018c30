"""Experiment driver CLI.

    magiclab <command> --config FILE [--seed S] [--threads T] [--out DIR]

Commands: spectrum, sre, capacity, mutual, mc-i2, groundstate, cliffordt,
bench. Configs are JSON; tables come out as CSV with a provenance header
(schema version, config hash, seed), reports as JSON. Grid points get
their seeds from (master seed, point index), and scan workers only ever
split work across points, so any --threads value produces byte-identical
data files. Exit codes: 0 success, 2 config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import tracemalloc
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import oracle
from .hybrid import HybridSampler, draw_paulis
from .models import CliffordTSpec, clifford_t_state
from .mps import DmrgConfig, DmrgNonConvergence, MatrixProductState, dmrg_ground_state, from_dense
from .mps_sampling import (
    draw_paulis_mps,
    estimate_mutual_q,
    _log_sq_expectations_mps,
)
from .montecarlo import McConfig, estimate_I2
from .paulis import PauliString, Region
from .reports import derived_seed
from .statevec import (
    DenseState,
    HamiltonianSpec,
    NumericalAbortError,
    ghz_state,
    haar_state,
    load_state,
    product_state,
    rotation_gate,
    zero_state,
)

SCHEMA_VERSION = "magiclab-csv v1"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Builders


def build_state(spec: dict, seed: int) -> DenseState:
    kind = spec.get("kind")
    n = int(spec.get("n_qubits", 1))
    if kind == "zeros":
        return zero_state(n)
    if kind == "ghz":
        return ghz_state(n)
    if kind == "plus":
        return product_state(np.array([1.0, 1.0]) / np.sqrt(2.0), n)
    if kind == "haar":
        return haar_state(n, np.random.default_rng(seed))
    if kind == "tstack":  # (T H |0>)^{xN}
        single = np.array([1.0, np.exp(-1j * np.pi / 4)]) / np.sqrt(2.0)
        return product_state(single, n)
    if kind == "product":
        theta = float(spec.get("theta", np.pi / 3))
        phi = float(spec.get("phi", 0.0))
        single = np.array(
            [np.cos(theta / 2), np.exp(-1j * phi) * np.sin(theta / 2)]
        )
        return product_state(single, n)
    if kind == "clifford_t":
        return clifford_t_state(
            CliffordTSpec(n, int(spec["n_tgates"]), int(spec.get("seed", seed)))
        )
    if kind == "file":
        return load_state(spec["path"])
    raise ConfigError(f"unknown state kind {kind!r}")


def build_hamiltonian_spec(spec: dict) -> HamiltonianSpec:
    rotation = None
    if spec.get("rotation"):
        rot = spec["rotation"]
        rotation = rotation_gate(rot["axis"], float(rot["theta"]))
    try:
        return HamiltonianSpec(
            model=spec["model"],
            n_qubits=int(spec["n_qubits"]),
            coupling=float(spec["coupling"]),
            rotation=rotation,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad hamiltonian spec: {exc}") from exc


def ground_state_mps(hspec: HamiltonianSpec, chi: int, sweeps: int = 16):
    return dmrg_ground_state(hspec, DmrgConfig(max_bond=chi, sweeps=sweeps))


# ---------------------------------------------------------------------------
# Output plumbing


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_csv(path, command, config, seed, header, rows):
    with open(path, "w") as fh:
        fh.write(f"# {SCHEMA_VERSION}\n")
        fh.write(f"# command: {command}\n")
        fh.write(f"# config-sha256: {config_hash(config)}\n")
        fh.write(f"# seed: {seed}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Shared sampling helper: one draw set feeds every moment of ln <P>^2


def sre_stats_state(state: DenseState, n_samples: int, seed: int) -> dict:
    codes, _ = draw_paulis(state, n_samples, seed)
    from .hybrid import _log_sq_expectations

    vals = _log_sq_expectations(state, codes)
    return _sre_stats(vals, n_samples)


def sre_stats_mps(mps: MatrixProductState, n_samples: int, seed: int) -> dict:
    codes, _ = draw_paulis_mps(mps, n_samples, seed)
    vals = _log_sq_expectations_mps(mps, codes)
    return _sre_stats(vals, n_samples)


def _sre_stats(vals: np.ndarray, k: int) -> dict:
    m1 = float(-vals.mean())
    m1_err = float(vals.std(ddof=1) / np.sqrt(k))
    cm = float(vals.var(ddof=1))
    m4 = float(np.mean((vals - vals.mean()) ** 4))
    cm_err = float(np.sqrt(max(m4 - (k - 3) / (k - 1) * cm**2, 0.0) / k))
    sq = np.exp(vals)
    m2 = float(-np.log(sq.mean()))
    m2_err = float(sq.std(ddof=1) / np.sqrt(k) / sq.mean())
    return {
        "m1": m1,
        "m1_err": m1_err,
        "c_m": cm,
        "c_m_err": cm_err,
        "m2": m2,
        "m2_err": m2_err,
        "K": k,
    }


# ---------------------------------------------------------------------------
# Commands


def cmd_spectrum(config, seed, threads, out_dir):
    state = build_state(config["state"], seed)
    if state.n_qubits > oracle.PURE_MAX_QUBITS:
        raise ConfigError("spectrum command limited to 10 qubits")
    path = os.path.join(out_dir, config.get("filename", "spectrum.csv"))
    spec = oracle.pauli_spectrum(state)
    p = spec.p()
    q = (
        oracle.q_spectrum(state).values
        if state.n_qubits <= oracle.MIXED_MAX_QUBITS
        else p
    )
    pi = oracle.pi_distribution(spec)
    rows = [
        (
            PauliString.from_index(m, state.n_qubits).render(),
            spec.values[m],
            p[m],
            q[m],
            pi[m],
        )
        for m in range(4**state.n_qubits)
    ]
    write_csv(
        path, "spectrum", config, seed, ["pauli_text", "trP_sq", "p", "q", "pi"], rows
    )
    return {"rows": len(rows), "path": path}


def _write_samples(path, codes):
    n = codes.shape[1]
    with open(path, "w") as fh:
        for row in codes:
            fh.write(PauliString.from_codes(row).render() + "\n")


def cmd_sre(config, seed, threads, out_dir):
    method = config.get("method", "hybrid")
    k = int(config.get("samples", 10000))
    samples_file = config.get("samples_file")
    if method == "oracle":
        state = build_state(config["state"], seed)
        spec = oracle.pauli_spectrum(state)
        payload = {
            "m1": oracle.von_neumann_sre(spec),
            "c_m": oracle.magic_capacity(spec),
            "method": "oracle",
        }
    elif method == "hybrid":
        state = build_state(config["state"], seed)
        payload = dict(sre_stats_state(state, k, seed), method="hybrid")
        if samples_file:
            codes, _ = draw_paulis(state, k, seed)
            _write_samples(os.path.join(out_dir, samples_file), codes)
    elif method == "mps":
        hspec = build_hamiltonian_spec(config["model"])
        res = ground_state_mps(hspec, int(config.get("chi", 32)))
        payload = dict(sre_stats_mps(res.mps, k, seed), method="mps", energy=res.energy)
        if samples_file:
            codes, _ = draw_paulis_mps(res.mps, k, seed)
            _write_samples(os.path.join(out_dir, samples_file), codes)
    else:
        raise ConfigError(f"unknown method {method!r}")
    payload["seed"] = seed
    path = os.path.join(out_dir, config.get("filename", "sre.json"))
    write_json(path, payload)
    return payload


def cmd_capacity(config, seed, threads, out_dir):
    payload = cmd_sre(
        dict(config, filename=config.get("filename", "capacity.json")),
        seed,
        threads,
        out_dir,
    )
    return payload


def cmd_mutual(config, seed, threads, out_dir):
    k = int(config.get("samples", 10000))
    paper_sign = bool(config.get("paper_sign", False))
    if "model" in config:
        hspec = build_hamiltonian_spec(config["model"])
        res = ground_state_mps(hspec, int(config.get("chi", 32)))
        mps = res.mps
        n = hspec.n_qubits
    else:
        state = build_state(config["state"], seed)
        mps, _ = from_dense(state, int(config.get("chi", 2 ** (state.n_qubits // 2))))
        n = state.n_qubits
    cut = int(config.get("cut", n // 2))
    rep = estimate_mutual_q(
        mps, Region.prefix(cut, n), k, seed, paper_sign=paper_sign
    )
    payload = rep.to_json()
    write_json(os.path.join(out_dir, config.get("filename", "mutual.json")), payload)
    return payload


def cmd_mc_i2(config, seed, threads, out_dir):
    hspec = build_hamiltonian_spec(config["model"])
    res = ground_state_mps(hspec, int(config.get("chi", 8)))
    n = hspec.n_qubits
    region_a = Region.of(config.get("region_a", range(n // 2)), n)
    region_b = Region.of(config.get("region_b", range(n // 2, n)), n)
    cfg = McConfig(
        prior=config.get("prior", "perfect-p"),
        chi_prime=int(config.get("chi_prime", 2)),
        n_samples=int(config.get("samples", 10000)),
        burn_in=int(config.get("burn_in", 1000)),
        seed=seed,
    )
    trace_path = (
        os.path.join(out_dir, config["trace_file"]) if config.get("trace_file") else None
    )
    rep = estimate_I2(res.mps, region_a, region_b, cfg, trace_path=trace_path)
    payload = dict(rep.to_json(), energy=res.energy)
    write_json(os.path.join(out_dir, config.get("filename", "mc_i2.json")), payload)
    return payload


# -- scans -------------------------------------------------------------------


def _grid(spec) -> list[float]:
    if isinstance(spec, list):
        return [float(v) for v in spec]
    start, stop = float(spec["start"]), float(spec["stop"])
    step = float(spec.get("step", 0.25))
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def _cliffordt_point(args):
    (n, z_idx, z, seed_idx, point_seed, k) = args
    n_t = int(round(z * n))
    state = clifford_t_state(CliffordTSpec(n, n_t, point_seed))
    stats = sre_stats_state(state, k, point_seed)
    return (n, z_idx, seed_idx, z, stats)


def cmd_clifford_t_scan(config, seed, threads, out_dir):
    n_list = [int(n) for n in config.get("n_list", [8, 10, 12])]
    z_grid = _grid(config.get("z_grid", {"start": 0.0, "stop": 4.0, "step": 0.25}))
    n_seeds = int(config.get("seeds", 50))
    k = int(config.get("samples", 2048))
    if max(n_list) > 14:
        raise ConfigError("cliffordt scan limited to 14 qubits at desk scale")

    tasks = []
    index = 0
    for n in n_list:
        for z_idx, z in enumerate(z_grid):
            for seed_idx in range(n_seeds):
                tasks.append((n, z_idx, z, seed_idx, derived_seed(seed, index), k))
                index += 1
    results = _run_parallel(_cliffordt_point, tasks, threads)

    rows = [
        (n, z, seed_idx, s["m1"] / n, s["m1_err"] / n, s["c_m"], s["c_m_err"], s["K"])
        for (n, z_idx, seed_idx, z, s) in results
    ]
    raw_path = os.path.join(out_dir, config.get("filename", "cliffordt.csv"))
    write_csv(
        raw_path,
        "cliffordt",
        config,
        seed,
        ["N", "z", "seed", "m1", "m1_err", "c_m", "c_m_err", "K"],
        rows,
    )

    # per-(N, z) aggregation and the doping derivative of m1
    agg_rows = []
    for n in n_list:
        m1_means = []
        for z_idx, z in enumerate(z_grid):
            vals = [
                s
                for (nn, zi, _, _, s) in results
                if nn == n and zi == z_idx
            ]
            m1s = np.array([v["m1"] for v in vals]) / n
            cms = np.array([v["c_m"] for v in vals])
            m1_means.append(m1s.mean())
            agg_rows.append(
                [
                    n,
                    z,
                    m1s.mean(),
                    m1s.std(ddof=1) / np.sqrt(len(m1s)),
                    cms.mean(),
                    cms.std(ddof=1) / np.sqrt(len(cms)),
                    len(vals),
                    0.0,  # dm1_dz placeholder, filled below
                ]
            )
        # central differences on the z grid
        base = len(agg_rows) - len(z_grid)
        for i in range(len(z_grid)):
            lo, hi = max(i - 1, 0), min(i + 1, len(z_grid) - 1)
            dz = z_grid[hi] - z_grid[lo]
            agg_rows[base + i][7] = (
                (m1_means[hi] - m1_means[lo]) / dz if dz > 0 else 0.0
            )
    agg_path = os.path.join(
        out_dir, config.get("aggregate_filename", "cliffordt_agg.csv")
    )
    write_csv(
        agg_path,
        "cliffordt",
        config,
        seed,
        ["N", "z", "m1_mean", "m1_sem", "c_m_mean", "c_m_sem", "n_seeds", "dm1_dz"],
        agg_rows,
    )
    return {"rows": len(rows), "path": raw_path, "aggregate": agg_path}


def _ground_point(args):
    (model, n, chi, param, rotation, point_seed, k, mutual_k, mc_cfg, oracle_mutual,
     exact_m2) = args
    rot = rotation_gate(rotation["axis"], rotation["theta"]) if rotation else None
    hspec = HamiltonianSpec(model, n, param, rotation=rot)
    try:
        res = dmrg_ground_state(hspec, DmrgConfig(max_bond=chi, sweeps=24))
    except DmrgNonConvergence as exc:
        return dict(param=param, failed=True, trace=exc.trace)
    mps = res.mps
    stats = sre_stats_mps(mps, k, point_seed)
    if exact_m2:
        from .mps import mutual_sre2_exact, sre2_exact

        stats["m2"] = sre2_exact(mps)
        stats["m2_err"] = 0.0
    cut = n // 2
    mut = estimate_mutual_q(mps, Region.prefix(cut, n), mutual_k, point_seed + 1)
    out = dict(
        param=param,
        failed=False,
        energy=res.energy,
        trace=res.sweep_energies,
        i1q=mut.value,
        i1q_err=mut.stderr,
        **stats,
    )
    if exact_m2 and mc_cfg is None:
        out["i2"] = mutual_sre2_exact(mps, Region.prefix(cut, n))
        out["i2_err"] = 0.0
    if mc_cfg is not None:
        cfg = McConfig(
            prior=mc_cfg.get("prior", "perfect-p"),
            chi_prime=int(mc_cfg.get("chi_prime", 2)),
            n_samples=int(mc_cfg.get("samples", 10000)),
            burn_in=int(mc_cfg.get("burn_in", 1000)),
            seed=point_seed + 2,
        )
        region_a = Region.prefix(cut, n)
        rep = estimate_I2(mps, region_a, region_a.complement(), cfg)
        out["i2"] = rep.value
        out["i2_err"] = rep.stderr
    if oracle_mutual and n <= oracle.MIXED_MAX_QUBITS:
        dense = mps.to_dense()
        out["i1p_oracle"] = oracle.mutual_sre(dense, Region.prefix(cut, n), 1, "p")
        out["i1q_oracle"] = oracle.mutual_sre(dense, Region.prefix(cut, n), 1, "q")
        out["i2_oracle"] = oracle.mutual_sre(dense, Region.prefix(cut, n), 2, "q")
    return out


def cmd_ground_scan(config, seed, threads, out_dir):
    model = config.get("model", "tfim")
    if model not in ("tfim", "xxz"):
        raise ConfigError(f"unknown model {model!r}")
    n = int(config.get("n_qubits", 16))
    chi = int(config.get("chi", 16))
    grid = _grid(config.get("grid", {"start": 0.0, "stop": 2.0, "step": 0.1}))
    k = int(config.get("samples", 4096))
    mutual_k = int(config.get("mutual_samples", max(k // 2, 2048)))
    rotation = config.get("rotation")
    mc_cfg = config.get("mc_i2")
    oracle_mutual = bool(config.get("oracle_mutual", False))
    exact_m2 = bool(config.get("exact_m2", False))

    tasks = [
        (
            model,
            n,
            chi,
            param,
            rotation,
            derived_seed(seed, i),
            k,
            mutual_k,
            mc_cfg,
            oracle_mutual,
            exact_m2,
        )
        for i, param in enumerate(grid)
    ]
    results = _run_parallel(_ground_point, tasks, threads)

    header = [
        "N",
        "chi",
        "parameter",
        "failed",
        "energy",
        "m1",
        "m1_err",
        "c_m",
        "c_m_err",
        "m2",
        "m2_err",
        "i1q",
        "i1q_err",
        "i2",
        "i2_err",
        "K",
    ]
    if oracle_mutual:
        header += ["i1p_oracle", "i1q_oracle", "i2_oracle"]
    rows = []
    traces = {}
    for r in results:
        traces[f"{r['param']:.6g}"] = r.get("trace", [])
        if r.get("failed"):
            rows.append(
                [n, chi, r["param"], 1] + [float("nan")] * (len(header) - 4)
            )
            continue
        row = [
            n,
            chi,
            r["param"],
            0,
            r["energy"],
            r["m1"],
            r["m1_err"],
            r["c_m"],
            r["c_m_err"],
            r["m2"],
            r["m2_err"],
            r["i1q"],
            r["i1q_err"],
            r.get("i2", float("nan")),
            r.get("i2_err", float("nan")),
            r["K"],
        ]
        if oracle_mutual:
            row += [
                r.get("i1p_oracle", float("nan")),
                r.get("i1q_oracle", float("nan")),
                r.get("i2_oracle", float("nan")),
            ]
        rows.append(row)
    path = os.path.join(out_dir, config.get("filename", "groundstate.csv"))
    write_csv(path, "groundstate", config, seed, header, rows)
    write_json(
        os.path.join(out_dir, config.get("trace_filename", "groundstate_dmrg.json")),
        traces,
    )
    return {"rows": len(rows), "path": path}


def cmd_bench(config, seed, threads, out_dir):
    payload = {"hybrid": [], "mps": [], "memory": []}
    k = int(config.get("samples", 256))
    for n in config.get("hybrid_n", [8, 10, 12]):
        state = haar_state(int(n), np.random.default_rng(seed))
        sampler = HybridSampler(state)
        rng = np.random.default_rng(seed + 1)
        sampler.sample_batch(8, rng)  # warm-up
        t0 = time.perf_counter()
        sampler.sample_batch(k, rng)
        dt = (time.perf_counter() - t0) / k
        payload["hybrid"].append({"n_qubits": int(n), "seconds_per_sample": dt})
    chi = int(config.get("chi", 16))
    for n in config.get("mps_n", [8, 12, 16, 20]):
        hspec = HamiltonianSpec("tfim", int(n), 1.0)
        res = ground_state_mps(hspec, chi, sweeps=8)
        t0 = time.perf_counter()
        draw_paulis_mps(res.mps, k, seed, batch_size=k)
        dt = (time.perf_counter() - t0) / k
        payload["mps"].append(
            {"n_qubits": int(n), "chi": chi, "seconds_per_sample": dt}
        )
    for n in config.get("memory_n", [12, 14]):
        state = haar_state(int(n), np.random.default_rng(seed))
        tracemalloc.start()
        sampler = HybridSampler(state)
        sampler.sample_batch(1, np.random.default_rng(seed))
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        payload["memory"].append({"n_qubits": int(n), "peak_bytes": int(peak)})
    path = os.path.join(out_dir, config.get("filename", "bench.json"))
    write_json(path, payload)
    return payload


# ---------------------------------------------------------------------------


def _run_parallel(fn, tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sre": cmd_sre,
    "capacity": cmd_capacity,
    "mutual": cmd_mutual,
    "mc-i2": cmd_mc_i2,
    "groundstate": cmd_ground_scan,
    "cliffordt": cmd_clifford_t_scan,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="magiclab", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=".")
    parser.add_argument(
        "--paper-sign",
        action="store_true",
        help="mutual command: use the opposite sign of the expectation term",
    )
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.paper_sign:
        config["paper_sign"] = True
    os.makedirs(args.out, exist_ok=True)
    try:
        result = COMMANDS[args.command](config, args.seed, args.threads, args.out)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalAbortError, DmrgNonConvergence) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    summary = {k: v for k, v in result.items() if not isinstance(v, (list, dict))}
    print(json.dumps(summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
