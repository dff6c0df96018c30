"""Metropolis-Hastings sampling of Pi(P) propto tr(rho P)^4 and the mutual
2-SRE estimator built from it.

Both priors are independence proposals (they ignore the current chain
state), so every proposal, its density, and the integrand factors are
precomputed in vectorized batches; the accept/reject recursion is then a
cheap scalar sweep. Priors:

    perfect-p      draws P ~ p(P) = 2^-N <P>^2 with the perfect sampler
                   (complementary bipartitions, where p is known exactly);
    truncated-mps  draws P ~ Pi~(P) propto <psi'|P|psi'>^4 by exact
                   ancestral contraction over a bond-truncated copy psi',
                   also for spatially separated subsystems.

The truncated prior density is evaluated with the same four-layer transfer
tensors that generate the draws, so the Metropolis ratio uses exactly the
sampling density.

The mutual 2-SRE follows from I_2 = (2-Renyi mutual information) - B with

    B = -ln E_{P~Pi}[ tr(rho_A P_A)^4 tr(rho_B P_B)^4 / tr(rho P)^4 ],

a ratio of means inside a log; the estimator therefore carries a jackknife
bias correction and error bar.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .mps import (
    MatrixProductState,
    left_canonicalize,
    renyi2_entropy,
    subsystem_pauli_purity,
    truncate,
)
from .mps_sampling import PerfectSampler, pauli_expectations_batch
from .paulis import PauliString, Region, single_qubit_matrix
from .reports import EstimateReport, jackknife_log_mean, stream
from .statevec import NumericalAbortError

CHI_PRIME_MAX = 4


@dataclass
class McConfig:
    prior: str = "perfect-p"  # or "truncated-mps"
    chi_prime: int = 2
    n_samples: int = 10000
    burn_in: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.prior not in ("perfect-p", "truncated-mps"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.n_samples < 100:
            raise ValueError("need at least 100 kept samples")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not 1 <= self.chi_prime <= CHI_PRIME_MAX:
            raise ValueError(f"chi_prime must lie in [1, {CHI_PRIME_MAX}]")


@dataclass
class ChainDiagnostics:
    acceptance_rate: float
    integrand: np.ndarray
    jackknife_error: float = 0.0
    lag1_autocorr: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance rate outside [0, 1]")


class TruncatedPiSampler:
    """Exact ancestral sampling of Pi~(P) propto <psi'|P|psi'>^4 over the
    Paulis supported on ``support`` (identity elsewhere)."""

    def __init__(self, mps_trunc: MatrixProductState, support):
        work = left_canonicalize(mps_trunc)
        self.n_qubits = work.n_qubits
        self.support = sorted(support)
        in_support = set(self.support)
        chi = work.max_bond
        if chi > CHI_PRIME_MAX:
            raise ValueError("truncated prior limited to chi' <= 4")
        # Four-layer transfer per site and Pauli: G_m = single-sandwich
        # transfer, T_m = G_m applied on each of the four sandwich axes.
        self.g = []  # [site][m] -> (D_l, D_r) with D = chi_l * chi_r per layer
        for k, a in enumerate(work.tensors):
            mats = []
            for m in range(4):
                op = single_qubit_matrix(m)
                g = np.einsum("xwa,ws,ysb->xyab", a.conj(), op, a)
                dl = a.shape[0] ** 2
                dr = a.shape[2] ** 2
                mats.append(g.reshape(dl, dr))
            self.g.append(mats)
        self.site_codes = [
            (0, 1, 2, 3) if k in in_support else (0,) for k in range(self.n_qubits)
        ]
        # Right environments of the code-summed transfer.
        self.right = [None] * (self.n_qubits + 1)
        env = np.ones((1, 1, 1, 1))
        self.right[self.n_qubits] = env
        for k in range(self.n_qubits - 1, -1, -1):
            acc = 0.0
            for m in self.site_codes[k]:
                acc = acc + self._apply(self.g[k][m], self.right[k + 1])
            self.right[k] = acc
        self.log_z = float(np.log(self.right[0].reshape(-1)[0].real))

    @staticmethod
    def _apply(g, env):
        # env has four right-bond axes; apply the (D_l, D_r) transfer on each.
        for axis in range(4):
            env = np.moveaxis(np.tensordot(g, env, axes=([1], [axis])), 0, axis)
        return env

    @staticmethod
    def _apply_batch(g, env):
        # env (batch, D, D, D, D); transfer applied on each sandwich axis
        for axis in range(1, 5):
            env = np.moveaxis(np.tensordot(env, g, axes=([axis], [0])), 4, axis)
        return env

    def sample_batch(self, batch: int, rng: np.random.Generator):
        codes = np.zeros((batch, self.n_qubits), dtype=np.int64)
        log_scale = np.zeros(batch)
        uniforms = rng.random((batch, self.n_qubits))
        env = np.ones((batch, 1, 1, 1, 1), dtype=complex)
        rows = np.arange(batch)
        for k in range(self.n_qubits):
            options = self.site_codes[k]
            if len(options) == 1:
                env = self._apply_batch(self.g[k][0], env)
                continue
            branches = [self._apply_batch(self.g[k][m], env) for m in options]
            closing = self.right[k + 1].reshape(-1)
            weights = np.stack(
                [b.reshape(batch, -1) @ closing for b in branches], axis=1
            ).real
            np.clip(weights, 0.0, None, out=weights)
            totals = weights.sum(axis=1)
            if totals.min() <= 0.0:
                raise NumericalAbortError("truncated prior has no support left")
            probs = weights / totals[:, None]
            cum = np.cumsum(probs, axis=1)
            choice = (uniforms[:, k, None] > cum).sum(axis=1)
            np.clip(choice, 0, 3, out=choice)
            codes[:, k] = choice
            env = np.stack(branches, axis=1)[rows, choice]
            # rescale to dodge underflow over long chains
            norms = np.abs(env.reshape(batch, -1)).max(axis=1)
            if norms.min() <= 0.0:
                raise NumericalAbortError("truncated prior weight vanished")
            env /= norms[:, None, None, None, None]
            log_scale += np.log(norms)
        final = env.reshape(batch, -1)[:, 0].real
        if final.min() <= 0.0:
            raise NumericalAbortError("truncated prior weight vanished")
        return codes, np.log(final) + log_scale - self.log_z

    def log_density(self, codes_row: np.ndarray) -> float:
        env = np.ones((1, 1, 1, 1, 1), dtype=complex)
        for k in range(self.n_qubits):
            env = self._apply_batch(self.g[k][codes_row[k]], env)
        val = float(env.reshape(-1)[0].real)
        if val <= 0.0:
            return -np.inf
        return float(np.log(val) - self.log_z)


def _padded_codes(codes: np.ndarray, sites, n: int) -> np.ndarray:
    out = np.zeros((codes.shape[0], n), dtype=np.int64)
    out[:, list(sites)] = codes
    return out


@dataclass
class _Proposals:
    codes: np.ndarray  # (K, |support|) codes on the support sites
    log_g: np.ndarray
    log_pi: np.ndarray  # unnormalized: 4 ln |<P>|
    a4: np.ndarray
    b4: np.ndarray
    f4: np.ndarray


def _make_proposals(mps, region_a, region_b, cfg, total):
    n = mps.n_qubits
    sites_a, sites_b = list(region_a.sites), list(region_b.sites)
    support = sorted(sites_a + sites_b)
    complementary = len(support) == n
    work = left_canonicalize(mps)

    if cfg.prior == "perfect-p":
        if not complementary:
            raise ValueError(
                "perfect-p prior needs complementary regions; use truncated-mps"
            )
        sampler = PerfectSampler(work)
    else:
        trunc, _ = truncate(work, cfg.chi_prime)
        sampler = TruncatedPiSampler(trunc, support)
    codes = np.empty((total, n), dtype=np.int64)
    log_g = np.empty(total)
    for bi, start in enumerate(range(0, total, 4096)):
        stop = min(start + 4096, total)
        codes[start:stop], log_g[start:stop] = sampler.sample_batch(
            stop - start, stream(cfg.seed, bi)
        )

    full = _padded_codes(codes[:, support], support, n)
    vals_full = pauli_expectations_batch(work.tensors, full)
    vals_a = pauli_expectations_batch(
        work.tensors, _padded_codes(codes[:, sites_a], sites_a, n)
    )
    vals_b = pauli_expectations_batch(
        work.tensors, _padded_codes(codes[:, sites_b], sites_b, n)
    )
    with np.errstate(divide="ignore"):
        log_pi = 4.0 * np.log(np.abs(vals_full))
    return _Proposals(
        codes=codes[:, support],
        log_g=log_g,
        log_pi=log_pi,
        a4=vals_a**4,
        b4=vals_b**4,
        f4=vals_full**4,
    ), support


def mh_chain(
    mps: MatrixProductState,
    cfg: McConfig,
    region_a: Region | None = None,
    region_b: Region | None = None,
):
    """Run the chain; returns (kept proposal indices, proposals, diagnostics).

    With no regions given the chain targets Pi over the full chain with the
    halves as A/B (used by distribution tests).
    """
    n = mps.n_qubits
    if region_a is None:
        region_a = Region.prefix(n // 2, n)
    if region_b is None:
        region_b = region_a.complement()
    if set(region_a.sites) & set(region_b.sites):
        raise ValueError("regions A and B must be disjoint")
    total = cfg.burn_in + cfg.n_samples
    props, support = _make_proposals(mps, region_a, region_b, cfg, total)

    rng = stream(cfg.seed, 10**9)
    uniforms = rng.random(total)
    kept = np.empty(total, dtype=np.int64)
    current = -1
    # start from the first proposal with nonzero target weight
    for i in range(total):
        if np.isfinite(props.log_pi[i]):
            current = i
            break
    if current < 0:
        raise NumericalAbortError("no proposal hit the support of Pi")
    accepted = 0
    attempted = 0
    log_g, log_pi = props.log_g, props.log_pi
    log_u = np.log(uniforms)
    for t in range(total):
        if t != current:
            attempted += 1
            if np.isfinite(log_pi[t]):
                if not np.isfinite(log_g[t]):
                    raise NumericalAbortError(
                        "prior assigns zero density inside the support of Pi"
                    )
                log_ratio = (log_g[current] - log_g[t]) + (
                    log_pi[t] - log_pi[current]
                )
                if log_u[t] < min(0.0, log_ratio):
                    current = t
                    accepted += 1
        kept[t] = current
    kept = kept[cfg.burn_in :]
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = props.a4[kept] * props.b4[kept] / props.f4[kept]
    if not np.all(np.isfinite(integrand)):
        raise NumericalAbortError("non-finite integrand in B estimator")
    series = integrand
    if series.size > 1 and series.std() > 0:
        lag1 = float(
            np.corrcoef(series[:-1], series[1:])[0, 1]
        )
    else:
        lag1 = 0.0
    diag = ChainDiagnostics(
        acceptance_rate=accepted / max(attempted, 1),
        integrand=integrand,
        lag1_autocorr=lag1,
    )
    return kept, props, diag


def estimate_B(
    mps: MatrixProductState,
    region_a: Region,
    region_b: Region,
    cfg: McConfig,
    trace_path=None,
) -> EstimateReport:
    """B(rho) = -ln E_Pi[tr(rho_A P_A)^4 tr(rho_B P_B)^4 / tr(rho P)^4]."""
    t0 = time.perf_counter()
    kept, props, diag = mh_chain(mps, cfg, region_a, region_b)
    if trace_path is not None:
        support = sorted(region_a.sites + region_b.sites)
        n = mps.n_qubits

        def to_text(row):
            codes = np.zeros(n, dtype=np.int64)
            codes[support] = row
            return PauliString.from_codes(codes).render()

        export_chain_trace(trace_path, kept, props, cfg.burn_in, to_text)
    if np.all(diag.integrand == 0.0):
        raise NumericalAbortError("all-zero integrand batch in B estimator")
    value, err = jackknife_log_mean(diag.integrand)
    diag.jackknife_error = err
    return EstimateReport(
        estimator="b_term_mc",
        value=value,
        stderr=err,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        wall_time=time.perf_counter() - t0,
        extras={
            "acceptance_rate": diag.acceptance_rate,
            "lag1_autocorr": diag.lag1_autocorr,
            "prior": cfg.prior,
        },
    )


def renyi2_mutual_information_mps(
    mps: MatrixProductState, region_a: Region, region_b: Region
) -> float:
    """S_2(A) + S_2(B) - S_2(AB) from bond entropies / interval purities."""
    n = mps.n_qubits
    support = sorted(region_a.sites + region_b.sites)
    if len(support) == n:
        cut = region_a.sites[-1] + 1 if region_a.sites[0] == 0 else region_b.sites[-1] + 1
        s2 = renyi2_entropy(mps, cut)
        return 2.0 * s2
    s2a = -np.log(
        subsystem_pauli_purity(
            mps, region_a, PauliString.from_codes([0] * region_a.size)
        )
    )
    s2b = -np.log(
        subsystem_pauli_purity(
            mps, region_b, PauliString.from_codes([0] * region_b.size)
        )
    )
    gap = [s for s in range(n) if s not in set(support)]
    gap_region = Region.of(gap, n)
    # purity of rho_AB equals the purity of the complementary (gap) interval
    s2ab = -np.log(
        subsystem_pauli_purity(
            mps, gap_region, PauliString.from_codes([0] * gap_region.size)
        )
    )
    return float(s2a + s2b - s2ab)


def estimate_I2(
    mps: MatrixProductState,
    region_a: Region,
    region_b: Region,
    cfg: McConfig,
    trace_path=None,
) -> EstimateReport:
    """Mutual 2-SRE I_2 = (2-Renyi mutual information) - B."""
    rep = estimate_B(mps, region_a, region_b, cfg, trace_path=trace_path)
    i2_info = renyi2_mutual_information_mps(mps, region_a, region_b)
    return EstimateReport(
        estimator="mutual_2sre_mc",
        value=i2_info - rep.value,
        stderr=rep.stderr,
        n_samples=rep.n_samples,
        seed=rep.seed,
        wall_time=rep.wall_time,
        extras=dict(rep.extras, renyi2_mutual_information=i2_info, b_term=rep.value),
    )


def export_chain_trace(path, kept, props, burn_in: int, codes_to_text):
    """CSV trace of the kept chain (post burn-in): (step, pauli_text,
    log_pi, accepted, integrand). ``accepted`` marks steps whose fresh
    proposal was taken; ``kept`` indexes proposals as mh_chain returns it."""
    with open(path, "w") as fh:
        fh.write("step,pauli_text,log_pi,accepted,integrand\n")
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = props.a4[kept] * props.b4[kept] / props.f4[kept]
        for t in range(kept.size):
            idx = kept[t]
            fh.write(
                f"{t},{codes_to_text(props.codes[idx])},"
                f"{props.log_pi[idx]:.12g},{int(idx == t + burn_in)},"
                f"{integrand[t]:.12g}\n"
            )


def kl_check(mps: MatrixProductState, n_samples: int = 0, seed: int = 0) -> float:
    """D_KL(p || Pi) = M_1 - M_2, the chain-difficulty diagnostic.

    At N <= 8 this is evaluated exactly from the dense state; otherwise it
    is estimated as M_1 - M_2 by perfect sampling with ``n_samples`` draws.
    """
    from . import oracle

    if mps.n_qubits <= oracle.MIXED_MAX_QUBITS:
        spec = oracle.pauli_spectrum(mps.to_dense())
        return oracle.kl_divergence(spec.p(), oracle.pi_distribution(spec))
    from .mps_sampling import estimate_m1_mps, estimate_m2_mps

    if n_samples < 1000:
        n_samples = 10000
    m1 = estimate_m1_mps(mps, n_samples, seed)
    m2 = estimate_m2_mps(mps, n_samples, seed + 1)
    return m1.value - m2.value
