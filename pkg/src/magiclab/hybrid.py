"""Hybrid Schroedinger-Feynman Pauli/Bell sampling for dense statevectors.

Draws Pauli strings from p(P) = 2^-N <psi|P|psi>^2 in O(8^{N/2}) time and
O(2^N) memory per sample. The 2N outcome bits of a Bell-basis measurement
on (conj copy) x (copy) are sampled pairwise: the first ceil(N/2) qubit
pairs through branch bookkeeping that never materializes the doubled
state, the rest by explicit marginals of the projected N-qubit object.

Branch bookkeeping at level k: the projected doubled state is a
superposition of 2^k terms c_t |slice(x_t)*> (x) |slice(y_t)>, where
slice(x) is the unnormalized amplitude block with the first k qubits fixed
to the bits of x. Outcome weights contract the term coefficients with the
slice Gram matrix S_k[x, y] = <slice(x)|slice(y)>, which is independent of
the drawn path and therefore precomputed once per state. The Bell-basis
branching is tiny: outcome bits (z, x) extend copy-1 prefixes by i, copy-2
prefixes by i xor x, with sign (-1)^{i z}, weight 1/sqrt(2), i in {0, 1};
the outcome bit pair is already the Pauli code of that site.

The Bell-sampling variant (distribution 2^-N <psi*|P|psi>^2) replaces the
conjugated first copy by the plain state, which only toggles a conjugation
on the copy-1 Gram factors; for real-amplitude states the two coincide.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .paulis import PauliString, codes_array_to_index
from .reports import DEFAULT_BATCH, EstimateReport, mean_report, stream, variance_report
from .statevec import DenseState, NumericalAbortError, expectation

PROB_DEFICIT_TOL = 1e-6
NEG_CLAMP = 1e-9
MAX_QUBITS = 16

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass
class BranchLevel:
    """Snapshot of the branch bookkeeping after k sampled qubit pairs."""

    level: int
    copy1_prefix: np.ndarray  # (batch, 2^k) slice indices of the conjugated copy
    copy2_prefix: np.ndarray
    factors: np.ndarray  # (batch, 2^k) real +- 2^{-k/2}
    weight: np.ndarray  # (batch,) running outcome probability


class HybridSampler:
    """Sampler over one read-only state; batches share the precomputed Grams."""

    def __init__(self, state: DenseState, bell_variant: bool = False):
        n = state.n_qubits
        if n > MAX_QUBITS:
            raise ValueError(f"hybrid sampler limited to {MAX_QUBITS} qubits")
        self.n_qubits = n
        self.bell_variant = bell_variant
        self.k_switch = (n + 1) // 2
        amps = state.amplitudes
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            amps = amps / norm
        self.amplitudes = amps
        # Gram of prefix slices for levels 1..k_switch; path-independent, so
        # shared by every draw. Stored as split real/imag tables to keep the
        # per-draw gathers in float arithmetic.
        self.gram_re = []
        self.gram_im = []
        for k in range(1, self.k_switch + 1):
            v = amps.reshape(2**k, -1)
            s = v.conj() @ v.T
            self.gram_re.append(np.ascontiguousarray(s.real))
            self.gram_im.append(np.ascontiguousarray(s.imag))
        self.tail = amps.reshape(2**self.k_switch, -1)

    # -- phase 1: branch bookkeeping ------------------------------------

    def _candidate_weights(self, level: BranchLevel):
        """Outcome weights for the 4 Bell results of the next qubit pair.

        Returns (weights (batch, 4), expanded prefixes/factors) where the
        expansion interleaves branch bit i at term slot 2t + i.
        """
        s_re = self.gram_re[level.level]  # Gram at level k+1
        s_im = self.gram_im[level.level]
        batch, t = level.copy1_prefix.shape
        x_new = (2 * level.copy1_prefix[:, :, None] + np.arange(2)).reshape(batch, 2 * t)
        y_base = (2 * level.copy2_prefix[:, :, None] + np.arange(2)).reshape(batch, 2 * t)
        y_flip = y_base ^ 1  # copy-2 bit i xor 1
        f_plus = np.repeat(level.factors, 2, axis=1) * _SQRT_HALF
        sign = np.tile(np.array([1.0, -1.0]), t)
        f_minus = f_plus * sign  # (-1)^{i} on the branch bit

        rows, cols = x_new[:, :, None], x_new[:, None, :]
        a_re, a_im = s_re[rows, cols], s_im[rows, cols]
        rows, cols = y_base[:, :, None], y_base[:, None, :]
        b_re, b_im = s_re[rows, cols], s_im[rows, cols]
        # Pauli sampling conjugates the copy-1 factor: Re(conj(a) b); the Bell
        # variant takes Re(a b).
        im_sign = 1.0 if not self.bell_variant else -1.0
        weights = np.empty((batch, 4))
        for xbit in (0, 1):
            if xbit == 0:
                m = a_re * b_re + im_sign * (a_im * b_im)
            else:
                # copy-2 branch bit flips: reindex the interleaved slots
                fr = b_re.reshape(batch, t, 2, t, 2)[:, :, ::-1, :, ::-1]
                fi = b_im.reshape(batch, t, 2, t, 2)[:, :, ::-1, :, ::-1]
                m = a_re * fr.reshape(batch, 2 * t, 2 * t) + im_sign * (
                    a_im * fi.reshape(batch, 2 * t, 2 * t)
                )
            for zbit, f in ((0, f_plus), (1, f_minus)):
                fm = np.matmul(m, f[:, :, None])
                weights[:, 2 * zbit + xbit] = np.matmul(f[:, None, :], fm)[:, 0, 0]
        return weights, x_new, y_base, y_flip, f_plus, f_minus

    def _advance(self, level, choice, x_new, y_base, y_flip, f_plus, f_minus, weights):
        xbit = choice & 1
        zbit = choice >> 1
        y_new = np.where(xbit[:, None] == 1, y_flip, y_base)
        f_new = np.where(zbit[:, None] == 1, f_minus, f_plus)
        w_new = np.take_along_axis(weights, choice[:, None], axis=1)[:, 0]
        return BranchLevel(level.level + 1, x_new, y_new, f_new, w_new)

    # -- phase 2: explicit projected state -------------------------------

    def _materialize(self, level: BranchLevel) -> np.ndarray:
        """Sum the branch terms into the projected N-qubit object (a matrix
        over copy-1 x copy-2 tail indices)."""
        u = self.tail[level.copy1_prefix]  # (batch, terms, tail_dim)
        if not self.bell_variant:
            u = u.conj()
        u = u * level.factors[:, :, None]
        v = self.tail[level.copy2_prefix]
        return np.matmul(u.transpose(0, 2, 1), v)

    # -- public API -------------------------------------------------------

    def sample_batch(self, batch: int, rng: np.random.Generator):
        """Draw ``batch`` Pauli strings; returns (codes (batch, N), ln prob)."""
        n, ks = self.n_qubits, self.k_switch
        uniforms = rng.random((batch, n))
        codes = np.empty((batch, n), dtype=np.int64)
        level = BranchLevel(
            level=0,
            copy1_prefix=np.zeros((batch, 1), dtype=np.int64),
            copy2_prefix=np.zeros((batch, 1), dtype=np.int64),
            factors=np.ones((batch, 1)),
            weight=np.ones(batch),
        )
        log_prob = np.zeros(batch)
        for site in range(ks):
            weights, *expansion = self._candidate_weights(level)
            choice, cond = self._pick(weights, level.weight, uniforms[:, site])
            codes[:, site] = choice
            log_prob += np.log(cond)
            level = self._advance(level, choice, *expansion, weights)

        if ks < n:
            mat = self._materialize(level)
            weight = level.weight
            for site in range(ks, n):
                half = mat.shape[-1] // 2
                m4 = mat.reshape(batch, 2, half, 2, half)
                cands = [
                    (m4[:, 0, :, 0, :] + m4[:, 1, :, 1, :]) * _SQRT_HALF,
                    (m4[:, 0, :, 1, :] + m4[:, 1, :, 0, :]) * _SQRT_HALF,
                    (m4[:, 0, :, 0, :] - m4[:, 1, :, 1, :]) * _SQRT_HALF,
                    (m4[:, 0, :, 1, :] - m4[:, 1, :, 0, :]) * _SQRT_HALF,
                ]
                weights = np.stack(
                    [np.sum(np.abs(c) ** 2, axis=(1, 2)) for c in cands], axis=1
                )
                choice, cond = self._pick(weights, weight, uniforms[:, site])
                codes[:, site] = choice
                log_prob += np.log(cond)
                mat = np.empty_like(cands[0])
                for beta in range(4):
                    rows = choice == beta
                    if rows.any():
                        mat[rows] = cands[beta][rows]
                weight = np.take_along_axis(weights, choice[:, None], axis=1)[:, 0]
        return codes, log_prob

    @staticmethod
    def _pick(weights: np.ndarray, total: np.ndarray, u: np.ndarray):
        """Draw one of 4 outcomes per row from unnormalized weights."""
        weights = np.where(
            (weights > -NEG_CLAMP) & (weights < 0.0), 0.0, weights
        )
        if weights.min() < 0.0:
            raise NumericalAbortError(
                f"negative branch weight {weights.min():.3e} in hybrid sampler"
            )
        sums = weights.sum(axis=1)
        deficit = np.abs(1.0 - sums / total).max()
        if deficit > PROB_DEFICIT_TOL:
            raise NumericalAbortError(
                f"branch probability deficit {deficit:.3e} exceeds {PROB_DEFICIT_TOL}"
            )
        cond = weights / sums[:, None]
        cum = np.cumsum(cond, axis=1)
        choice = (u[:, None] > cum).sum(axis=1).astype(np.int64)
        np.clip(choice, 0, 3, out=choice)
        return choice, np.take_along_axis(cond, choice[:, None], axis=1)[:, 0]


def sample_pauli(state: DenseState, seed: int) -> PauliString:
    """One draw from p(P) = 2^-N <psi|P|psi>^2, deterministic given seed."""
    codes, _ = HybridSampler(state).sample_batch(1, stream(seed, 0))
    return PauliString.from_codes(codes[0])


def sample_bell(state: DenseState, seed: int) -> PauliString:
    """One draw from the Bell distribution 2^-N <psi*|P|psi>^2."""
    codes, _ = HybridSampler(state, bell_variant=True).sample_batch(1, stream(seed, 0))
    return PauliString.from_codes(codes[0])


def draw_paulis(
    state: DenseState,
    n_samples: int,
    seed: int,
    bell_variant: bool = False,
    batch_size: int = DEFAULT_BATCH,
):
    """Batch draws; returns (codes (K, N), ln prob (K,)). Batch boundaries are
    a pure function of n_samples, so any parallel split over batches
    reproduces the serial result."""
    sampler = HybridSampler(state, bell_variant=bell_variant)
    codes = np.empty((n_samples, state.n_qubits), dtype=np.int64)
    logp = np.empty(n_samples)
    for bi, start in enumerate(range(0, n_samples, batch_size)):
        stop = min(start + batch_size, n_samples)
        codes[start:stop], logp[start:stop] = sampler.sample_batch(
            stop - start, stream(seed, bi)
        )
    return codes, logp


def _log_sq_expectations(state: DenseState, codes: np.ndarray) -> np.ndarray:
    """ln <P>^2 for each sampled code row, evaluated independently of the
    sampler's own probability bookkeeping."""
    vals = np.empty(codes.shape[0])
    for i, row in enumerate(codes):
        e2 = expectation(state, PauliString.from_codes(row)) ** 2
        if e2 < 1e-12:
            raise NumericalAbortError(
                "sampled a Pauli with vanishing expectation; sampler defect"
            )
        vals[i] = np.log(e2)
    return vals


def estimate_m1(
    state: DenseState, n_samples: int, seed: int, batch_size: int = DEFAULT_BATCH
) -> EstimateReport:
    """Unbiased M_1 estimate: mean of -ln <P>^2 over hybrid draws."""
    if n_samples < 100:
        raise ValueError("estimate_m1 needs at least 100 samples")
    t0 = time.perf_counter()
    codes, _ = draw_paulis(state, n_samples, seed, batch_size=batch_size)
    vals = -_log_sq_expectations(state, codes)
    return mean_report("m1_hybrid", vals, seed, t0)


def estimate_capacity(
    state: DenseState, n_samples: int, seed: int, batch_size: int = DEFAULT_BATCH
) -> EstimateReport:
    """Magic capacity estimate: bias-corrected variance of ln <P>^2."""
    if n_samples < 1000:
        raise ValueError("estimate_capacity needs at least 1000 samples")
    t0 = time.perf_counter()
    codes, _ = draw_paulis(state, n_samples, seed, batch_size=batch_size)
    vals = _log_sq_expectations(state, codes)
    return variance_report("capacity_hybrid", vals, seed, t0)


def empirical_distribution(codes: np.ndarray, n_qubits: int) -> np.ndarray:
    """Normalized histogram over all 4^N Pauli indices."""
    idx = codes_array_to_index(codes)
    counts = np.bincount(idx, minlength=4**n_qubits)
    return counts / counts.sum()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return float(0.5 * np.abs(p - q).sum())
