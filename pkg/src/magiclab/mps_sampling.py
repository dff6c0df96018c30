"""Perfect (ancestral) Pauli sampling for MPS and the estimators built on it.

A draw from q_rho(P) = 2^-N tr(rho P rho P) -- which for the pure states
represented here equals p(P) = 2^-N <psi|P|psi>^2 -- proceeds site by site:
the two-copy object conj(psi) x psi is treated as a fused chain whose site
tensor pairs the original tensor with its conjugate, the fused physical
pair is rotated into the Bell basis, and outcomes are drawn like a plain
computational-basis MPS measurement. With right-canonical tails the
conditional probabilities come from the running left bond vector alone, so
one draw costs O(N chi^3) and the reduced density matrices of the chain
prefixes are never materialized. The outcome bit pair at a site is the
Pauli code of that site, and the accumulated log-probability is ln q(P).

The mutual von-Neumann SRE estimator works in the Schmidt basis of the
cut: with |psi> = sum_i lambda_i |L_i>|R_i>, the per-sample terms are

    tr(rho_A P_A rho_A P_A) = sum_ij lambda_i^2 lambda_j^2 |<L_i|P_A|L_j>|^2
    <P> = sum_ij lambda_i lambda_j <L_i|P_A|L_j> <R_i|P_B|R_j>

so a single O(N chi^3) transfer sweep per sample yields the integrand
ln tr_A + ln tr_B - ln <P>^2, and

    I_1^[q] = S_2(rho_A) + S_2(rho_B) + E_q[integrand].

This is the difference form of the mutual SRE: it vanishes on a Bell pair
(each sample contributes exactly -2 ln 2 against the two entropies). The
opposite sign choice, which flips the expectation term, is kept available
for comparison plots.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .paulis import PauliString, Region, single_qubit_matrix
from .reports import DEFAULT_BATCH, EstimateReport, mean_report, stream, variance_report
from .statevec import CNOT, HADAMARD, NumericalAbortError
from .mps import MatrixProductState, mixed_canonical, right_canonicalize

PROB_DEFICIT_TOL = 1e-6
NEG_CLAMP = 1e-12

_U_BELL = (np.kron(HADAMARD, np.eye(2)) @ CNOT).reshape(4, 2, 2)

_PAULIS = np.stack([single_qubit_matrix(c) for c in range(4)])


@dataclass
class AncestralContext:
    """Running state of one batched ancestral sweep."""

    site: int
    bond_vector: np.ndarray  # (batch, chi_conj, chi) left environment
    log_prob: np.ndarray  # (batch,) accumulated ln q of the fixed prefix


class PerfectSampler:
    """Ancestral sampler over one read-only MPS (internally right-canonical)."""

    def __init__(self, mps: MatrixProductState):
        work = mps if mps.form == "right" else right_canonicalize(mps)
        self.tensors = work.tensors
        self.n_qubits = work.n_qubits

    def sample_batch(self, batch: int, rng: np.random.Generator):
        """Returns (codes (batch, N), ln q(P) (batch,))."""
        uniforms = rng.random((batch, self.n_qubits))
        ctx = AncestralContext(
            site=0,
            bond_vector=np.ones((batch, 1, 1), dtype=complex),
            log_prob=np.zeros(batch),
        )
        codes = np.empty((batch, self.n_qubits), dtype=np.int64)
        for k in range(self.n_qubits):
            probs, branches = self._conditionals(ctx)
            cum = np.cumsum(probs, axis=1)
            choice = (uniforms[:, k, None] > cum).sum(axis=1).astype(np.int64)
            np.clip(choice, 0, 3, out=choice)
            codes[:, k] = choice
            picked = np.take_along_axis(probs, choice[:, None], axis=1)[:, 0]
            ctx.log_prob += np.log(picked)
            chosen = np.take_along_axis(
                branches, choice[:, None, None, None], axis=1
            )[:, 0]
            ctx.bond_vector = chosen / np.sqrt(picked)[:, None, None]
            ctx.site = k + 1
        return codes, ctx.log_prob

    def _conditionals(self, ctx: AncestralContext):
        """Bell-outcome conditional probabilities at the current site.

        Right-canonical tails make them the squared norms of the four
        branch vectors; they are clamped at -1e-12 and must sum to 1.
        """
        a = self.tensors[ctx.site]
        # bond_vector indices: (batch, conj-copy bond, plain-copy bond)
        v1 = np.einsum("xsy,bxa->bsya", a.conj(), ctx.bond_vector)
        v2 = np.einsum("bsya,atc->bsytc", v1, a)
        branches = np.einsum("rst,bsytc->bryc", _U_BELL, v2)
        probs = np.sum(np.abs(branches) ** 2, axis=(2, 3))
        bad = probs < -NEG_CLAMP
        if bad.any():
            raise NumericalAbortError("negative ancestral conditional probability")
        np.clip(probs, 0.0, None, out=probs)
        deficit = np.abs(probs.sum(axis=1) - 1.0).max()
        if deficit > PROB_DEFICIT_TOL:
            raise NumericalAbortError(
                f"ancestral conditional deficit {deficit:.3e} exceeds {PROB_DEFICIT_TOL}"
            )
        return probs, branches


def perfect_sample_q(mps: MatrixProductState, seed: int):
    """One draw from q_rho; returns (PauliString, ln q(P))."""
    codes, logq = PerfectSampler(mps).sample_batch(1, stream(seed, 0))
    return PauliString.from_codes(codes[0]), float(logq[0])


def draw_paulis_mps(
    mps: MatrixProductState,
    n_samples: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
):
    sampler = PerfectSampler(mps)
    codes = np.empty((n_samples, mps.n_qubits), dtype=np.int64)
    logq = np.empty(n_samples)
    for bi, start in enumerate(range(0, n_samples, batch_size)):
        stop = min(start + batch_size, n_samples)
        codes[start:stop], logq[start:stop] = sampler.sample_batch(
            stop - start, stream(seed, bi)
        )
    return codes, logq


def pauli_expectations_batch(tensors: list, codes: np.ndarray) -> np.ndarray:
    """<psi|P|psi> for many code rows at once (tensors assumed normalized)."""
    batch = codes.shape[0]
    env = np.ones((batch, 1, 1), dtype=complex)
    for k, a in enumerate(tensors):
        ops = _PAULIS[codes[:, k]]  # (batch, 2, 2)
        tmp = np.einsum("bxy,ysc->bxsc", env, a)
        tmp = np.einsum("bws,bxsc->bxwc", ops, tmp)
        env = np.einsum("xwa,bxwc->bac", a.conj(), tmp)
    vals = env[:, 0, 0]
    if np.abs(vals.imag).max() > 1e-9:
        raise NumericalAbortError("batched MPS expectation has imaginary residue")
    return np.clip(vals.real, -1.0, 1.0)


def _log_sq_expectations_mps(mps: MatrixProductState, codes: np.ndarray) -> np.ndarray:
    work = mps if mps.form in ("left", "right") else right_canonicalize(mps)
    out = np.empty(codes.shape[0])
    block = 2048
    for start in range(0, codes.shape[0], block):
        vals = pauli_expectations_batch(work.tensors, codes[start : start + block])
        sq = vals**2
        if sq.min() < 1e-12:
            raise NumericalAbortError(
                "sampled a Pauli with vanishing expectation; sampler defect"
            )
        out[start : start + block] = np.log(sq)
    return out


def estimate_m1_mps(
    mps: MatrixProductState, n_samples: int, seed: int, batch_size: int = DEFAULT_BATCH
) -> EstimateReport:
    """M_1 estimate from perfect sampling: mean of -ln <P>^2."""
    if n_samples < 100:
        raise ValueError("estimate_m1_mps needs at least 100 samples")
    t0 = time.perf_counter()
    codes, _ = draw_paulis_mps(mps, n_samples, seed, batch_size)
    vals = -_log_sq_expectations_mps(mps, codes)
    return mean_report("m1_mps", vals, seed, t0)


def estimate_capacity_mps(
    mps: MatrixProductState, n_samples: int, seed: int, batch_size: int = DEFAULT_BATCH
) -> EstimateReport:
    """Magic capacity estimate: bias-corrected variance of ln <P>^2."""
    if n_samples < 1000:
        raise ValueError("estimate_capacity_mps needs at least 1000 samples")
    t0 = time.perf_counter()
    codes, _ = draw_paulis_mps(mps, n_samples, seed, batch_size)
    vals = _log_sq_expectations_mps(mps, codes)
    return variance_report("capacity_mps", vals, seed, t0)


def estimate_m2_mps(
    mps: MatrixProductState, n_samples: int, seed: int, batch_size: int = DEFAULT_BATCH
) -> EstimateReport:
    """M_2 estimate: -ln E_p[<P>^2], with the error propagated through the log."""
    if n_samples < 100:
        raise ValueError("estimate_m2_mps needs at least 100 samples")
    t0 = time.perf_counter()
    codes, _ = draw_paulis_mps(mps, n_samples, seed, batch_size)
    sq = np.exp(_log_sq_expectations_mps(mps, codes))
    mean = sq.mean()
    se = sq.std(ddof=1) / np.sqrt(sq.size)
    return EstimateReport(
        estimator="m2_mps",
        value=float(-np.log(mean)),
        stderr=float(se / mean),
        n_samples=sq.size,
        seed=seed,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Mutual von-Neumann SRE


def _region_cut(region: Region, n: int) -> tuple[int, bool]:
    """Map a prefix/suffix region onto its cut bond; True if A is the prefix."""
    if not region.is_contiguous() or region.size in (0, n):
        raise ValueError("mutual estimator needs a proper contiguous region")
    if region.sites[0] == 0:
        return region.size, True
    if region.sites[-1] == n - 1:
        return n - region.size, False
    raise ValueError(
        "mutual estimator supports prefix/suffix regions (complement must be contiguous)"
    )


def _schmidt_pauli_matrices(tensors: list, codes: np.ndarray, from_right: bool):
    """m[b, i, j] = <V_i|P_b|V_j> over the Schmidt vectors at the cut."""
    batch = codes.shape[0]
    env = np.ones((batch, 1, 1), dtype=complex)
    if not from_right:
        for k, a in enumerate(tensors):
            ops = _PAULIS[codes[:, k]]
            tmp = np.einsum("bxy,ysc->bxsc", env, a)
            tmp = np.einsum("bws,bxsc->bxwc", ops, tmp)
            env = np.einsum("xwa,bxwc->bac", a.conj(), tmp)
    else:
        for k in range(len(tensors) - 1, -1, -1):
            a = tensors[k]
            ops = _PAULIS[codes[:, k]]
            tmp = np.einsum("bxy,zsy->bxzs", env, a)
            tmp = np.einsum("bws,bxzs->bxzw", ops, tmp)
            env = np.einsum("vwx,bxzw->bvz", a.conj(), tmp)
    return env  # (batch, bra index i, ket index j)


def estimate_mutual_q(
    mps: MatrixProductState,
    region: Region,
    n_samples: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
    paper_sign: bool = False,
) -> EstimateReport:
    """Mutual von-Neumann SRE I_1^[q] across a bipartition of a pure MPS.

    Reports the expectation term and the two 2-Renyi entropies separately in
    ``extras``. ``paper_sign`` flips the sign of the expectation term.
    """
    if n_samples < 100:
        raise ValueError("estimate_mutual_q needs at least 100 samples")
    t0 = time.perf_counter()
    n = mps.n_qubits
    cut, a_is_prefix = _region_cut(region, n)
    left, lam, right = mixed_canonical(mps, cut)
    lam2 = lam**2
    s2 = float(-np.log(np.sum(lam2**2)))  # equal on both sides of a pure cut

    codes, _ = draw_paulis_mps(mps, n_samples, seed, batch_size)
    integrand = np.empty(n_samples)
    for start in range(0, n_samples, 1024):
        chunk = codes[start : start + 1024]
        m_a = _schmidt_pauli_matrices(left, chunk[:, :cut], from_right=False)
        m_b = _schmidt_pauli_matrices(right, chunk[:, cut:], from_right=True)
        tr_a = np.einsum("i,j,bij->b", lam2, lam2, np.abs(m_a) ** 2).real
        tr_b = np.einsum("i,j,bij->b", lam2, lam2, np.abs(m_b) ** 2).real
        exp_full = np.einsum("i,j,bij,bij->b", lam, lam, m_a, m_b).real
        if min(tr_a.min(), tr_b.min()) < 1e-14:
            raise NumericalAbortError(
                "subsystem purity term below 1e-14 in mutual estimator"
            )
        integrand[start : start + 1024] = (
            np.log(tr_a) + np.log(tr_b) - np.log(exp_full**2)
        )
    if paper_sign:
        integrand = -integrand
    values = 2.0 * s2 + integrand
    report = mean_report(
        "mutual_q" if a_is_prefix else "mutual_q_suffix",
        values,
        seed,
        t0,
        expectation_term=float(integrand.mean()),
        s2_a=s2,
        s2_b=s2,
    )
    return report
