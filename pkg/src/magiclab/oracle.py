"""Brute-force ground truth for magic quantities at small qubit counts.

Everything here enumerates all 4^N Pauli strings. The expectation sweep
uses a fast Walsh-Hadamard transform over the sign masks, so the pure-state
spectrum costs O(N 4^N) and the mixed q-spectrum O(8^N); the guards below
keep both in the seconds range. Every sampled estimator in the package is
validated against this module.

Distributions over Pauli strings (all indexed in the canonical enumeration
order of :mod:`magiclab.paulis`):

    p_rho(P)  = 2^-N tr(rho P)^2 / tr(rho^2)
    q_rho(P)  = 2^-N tr(rho P rho P)
    Pi(P)    propto tr(rho P)^4

SRE conventions (natural logs throughout):

    M~_alpha(rho) = H_alpha[p_rho] + S_2(rho) - N ln 2      (p variant)
    M~_alpha^[q](rho) = H_alpha[q_rho] - S_2(rho) - N ln 2  (q variant)

which coincide for alpha = 2 and, for pure states, reduce to
M_alpha = H_alpha[p] - N ln 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn, polygamma, psi as digamma

from .paulis import Region, index_to_text
from .statevec import DenseState, reduced_density

PURE_MAX_QUBITS = 10
MIXED_MAX_QUBITS = 8

ZERO_CLIP = 1e-14  # values below this are treated as exact zeros before logs

LN2 = float(np.log(2.0))


def fwht(a: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis: out[z] = sum_i (-1)^{z.i} a[i]."""
    m = a.shape[-1]
    out = np.array(a, dtype=a.dtype if np.iscomplexobj(a) else float, copy=True)
    shape = out.shape
    out = out.reshape(-1, m)
    h = 1
    while h < m:
        out = out.reshape(out.shape[0], -1, 2, h)
        top = out[:, :, 0, :] + out[:, :, 1, :]
        bot = out[:, :, 0, :] - out[:, :, 1, :]
        out = np.stack((top, bot), axis=2).reshape(out.shape[0], m)
        h *= 2
    return out.reshape(shape)


def _spread_bits(n_qubits: int) -> np.ndarray:
    """spread[b] interleaves the bits of b with zeros (base-4 digit positions)."""
    idx = np.arange(2**n_qubits, dtype=np.int64)
    spread = np.zeros_like(idx)
    for p in range(n_qubits):
        spread |= ((idx >> p) & 1) << (2 * p)
    return spread


def _scatter_xz(values_xz: np.ndarray, n_qubits: int) -> np.ndarray:
    """Reorder a (x_mask, z_mask)-indexed table into Pauli enumeration order."""
    spread = _spread_bits(n_qubits)
    pauli_idx = spread[:, None] + 2 * spread[None, :]  # [x, z] -> index
    out = np.empty(4**n_qubits, dtype=values_xz.dtype)
    out[pauli_idx.reshape(-1)] = values_xz.reshape(-1)
    return out


@dataclass
class PauliSpectrum:
    """tr(rho P)^2 for every Pauli string, plus the purity tr(rho^2)."""

    n_qubits: int
    values: np.ndarray  # shape (4^N,), tr(rho P)^2 >= 0
    purity: float

    @property
    def is_pure(self) -> bool:
        return abs(self.purity - 1.0) < 1e-6

    def p(self) -> np.ndarray:
        """Normalized Pauli distribution p_rho."""
        return self.values / (2**self.n_qubits * self.purity)

    def renyi2_offset(self) -> float:
        """S_2(rho) = -ln tr(rho^2)."""
        return float(-np.log(self.purity))


@dataclass
class QSpectrum:
    """q_rho(P) = 2^-N tr(rho P rho P); a probability distribution."""

    n_qubits: int
    values: np.ndarray


def pauli_spectrum(state_or_rho) -> PauliSpectrum:
    """Exact spectrum of a pure state (N <= 10) or density matrix (N <= 8)."""
    if isinstance(state_or_rho, DenseState):
        return _pure_spectrum(state_or_rho)
    return _mixed_spectrum(np.asarray(state_or_rho, dtype=complex))


def _pure_spectrum(state: DenseState) -> PauliSpectrum:
    n = state.n_qubits
    if n > PURE_MAX_QUBITS:
        raise ValueError(f"pauli_spectrum limited to {PURE_MAX_QUBITS} qubits (pure)")
    psi = state.amplitudes
    idx = np.arange(2**n, dtype=np.int64)
    shift = idx[:, None] ^ idx[None, :]  # [x, i] -> i xor x
    g = psi.conj()[shift] * psi[None, :]
    ghat = fwht(g)  # [x, z] -> <P> up to an i^{n_y} phase of unit modulus
    values = _scatter_xz(np.abs(ghat) ** 2, n)
    return PauliSpectrum(n, values, purity=float(np.vdot(psi, psi).real) ** 2)


def _mixed_spectrum(rho: np.ndarray) -> PauliSpectrum:
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if rho.shape != (dim, dim) or 2**n != dim:
        raise ValueError("density matrix must be square with power-of-two size")
    if n > MIXED_MAX_QUBITS:
        raise ValueError(f"pauli_spectrum limited to {MIXED_MAX_QUBITS} qubits (mixed)")
    idx = np.arange(dim, dtype=np.int64)
    d = rho[idx[None, :] ^ idx[:, None], idx[None, :]]  # [x, j] -> rho[j^x, j]
    # tr(rho P) = i^{n_y} sum_j (-1)^{z.j} rho[j, j^x]; rho[j, j^x] = conj(rho[j^x, j])
    dhat = fwht(np.conj(d))
    values = _scatter_xz(np.abs(dhat) ** 2, n)
    purity = float(np.sum(np.abs(rho) ** 2).real)
    return PauliSpectrum(n, values, purity=purity)


def q_spectrum(rho_or_state) -> QSpectrum:
    """Exact q distribution; pure states reuse the Pauli spectrum (q = p)."""
    if isinstance(rho_or_state, DenseState):
        spec = _pure_spectrum(rho_or_state)
        return QSpectrum(spec.n_qubits, spec.p())
    rho = np.asarray(rho_or_state, dtype=complex)
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if n > MIXED_MAX_QUBITS:
        raise ValueError(f"q_spectrum limited to {MIXED_MAX_QUBITS} qubits")
    idx = np.arange(dim, dtype=np.int64)
    xor = idx[:, None] ^ idx[None, :]
    m1 = rho[idx[:, None], xor]  # [a, u] -> rho[a, a^u]
    values_xz = np.empty((dim, dim))
    for x in range(dim):
        rows = idx ^ x
        h = np.sum(np.conj(m1) * m1[rows, :], axis=0)  # [u]
        values_xz[x] = fwht(h).real
    q = _scatter_xz(values_xz, n) / 2**n
    if q.min() < -1e-12:
        raise ValueError(f"q distribution negative beyond tolerance: {q.min():.2e}")
    np.clip(q, 0.0, None, out=q)
    return QSpectrum(n, q)


# ---------------------------------------------------------------------------
# Entropies of the spectra


def _clip_zeros(p: np.ndarray) -> np.ndarray:
    p = np.where(p < ZERO_CLIP, 0.0, p)
    return p


def shannon(p: np.ndarray) -> float:
    """H_1 with the 0 ln 0 := 0 convention."""
    p = _clip_zeros(np.asarray(p, dtype=float))
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def renyi(p: np.ndarray, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 1.0:
        return shannon(p)
    p = _clip_zeros(np.asarray(p, dtype=float))
    nz = p[p > 0]
    if alpha == 0.0:
        return float(np.log(nz.size))
    return float(np.log(np.sum(nz**alpha)) / (1.0 - alpha))


def sre(spectrum: PauliSpectrum, alpha: float) -> float:
    """Mixed-state SRE M~_alpha; the pure case is the same code path."""
    if alpha == 1.0:
        raise ValueError("use von_neumann_sre for alpha = 1")
    return (
        renyi(spectrum.p(), alpha)
        + spectrum.renyi2_offset()
        - spectrum.n_qubits * LN2
    )


def _sre_p_any_alpha(spectrum: PauliSpectrum, alpha: float) -> float:
    """p-variant SRE including the alpha = 1 limit (used for mutual SREs)."""
    return (
        renyi(spectrum.p(), alpha)
        + spectrum.renyi2_offset()
        - spectrum.n_qubits * LN2
    )


def _sre_q(qspec: QSpectrum, renyi2_entropy: float, alpha: float) -> float:
    """q-variant SRE M~_alpha^[q] = H_alpha[q] - S_2 - N ln 2."""
    return renyi(qspec.values, alpha) - renyi2_entropy - qspec.n_qubits * LN2


def von_neumann_sre(spectrum: PauliSpectrum) -> float:
    """M_1 of a pure state: -2^-N sum <P>^2 ln <P>^2."""
    if not spectrum.is_pure:
        raise ValueError("von_neumann_sre expects a pure-state spectrum")
    vals = _clip_zeros(spectrum.values)
    nz = vals[vals > 0]
    return float(-np.sum(nz * np.log(nz)) / 2**spectrum.n_qubits)


def magic_capacity(spectrum: PauliSpectrum) -> float:
    """Variance of ln <P>^2 under p; zero iff the state is pure stabilizer."""
    if not spectrum.is_pure:
        raise ValueError("magic_capacity expects a pure-state spectrum")
    vals = _clip_zeros(spectrum.values)
    nz = vals[vals > 0]
    p = nz / 2**spectrum.n_qubits
    logs = np.log(nz)
    m1 = -np.sum(p * logs)
    return float(np.sum(p * logs**2) - m1**2)


def capacity_via_alpha_derivative(spectrum: PauliSpectrum, step: float = 1e-3) -> float:
    """Central second difference of (1 - alpha) M_alpha at alpha = 1."""
    if not 1e-4 <= step <= 1e-2:
        raise ValueError("step must lie in [1e-4, 1e-2]")

    def f(alpha: float) -> float:
        return (1.0 - alpha) * sre(spectrum, alpha)

    return (f(1.0 + step) + f(1.0 - step)) / step**2


def pi_distribution(spectrum: PauliSpectrum) -> np.ndarray:
    """Pi(P) propto tr(rho P)^4, normalized."""
    if not spectrum.is_pure:
        raise ValueError("pi_distribution expects a pure-state spectrum")
    w = _clip_zeros(spectrum.values) ** 2
    return w / w.sum()


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    p = _clip_zeros(np.asarray(p, dtype=float))
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def antiflatness(spectrum: PauliSpectrum, alpha: float) -> float:
    """M_alpha - M_{2 alpha - 1}; controls the alpha-SRE estimator variance."""
    if alpha <= 1.0:
        raise ValueError("antiflatness needs alpha > 1")
    return sre(spectrum, alpha) - sre(spectrum, 2.0 * alpha - 1.0)


def predicted_sre_variance(gap: float, alpha: float) -> float:
    """Variance of the alpha-SRE estimator given gap = M_alpha - M_{2a-1}."""
    return (np.exp(2.0 * (alpha - 1.0) * gap) - 1.0) / abs(alpha - 1.0)


# ---------------------------------------------------------------------------
# Mutual SREs


def mutual_sre(state: DenseState, region: Region, alpha: float, variant: str = "q") -> float:
    """I_alpha = M~(rho) - M~(rho_A) - M~(rho_B) with B the complement of A.

    variant "p" uses p_rho (any alpha); variant "q" uses q_rho (alpha 1 or 2).
    Both coincide at alpha = 2. The result can be negative.
    """
    n = state.n_qubits
    if n > MIXED_MAX_QUBITS:
        raise ValueError(f"mutual_sre limited to {MIXED_MAX_QUBITS} qubits")
    if variant not in ("p", "q"):
        raise ValueError(f"unknown variant {variant!r}")
    region_b = region.complement()
    rho_a = reduced_density(state, region)
    rho_b = reduced_density(state, region_b)
    if variant == "p":
        full = _sre_p_any_alpha(pauli_spectrum(state), alpha)
        part_a = _sre_p_any_alpha(pauli_spectrum(rho_a), alpha)
        part_b = _sre_p_any_alpha(pauli_spectrum(rho_b), alpha)
    else:
        if alpha not in (1, 2):
            raise ValueError("q variant exposed for alpha in {1, 2}")
        full = _sre_q(q_spectrum(state), 0.0, alpha)
        s2a = float(-np.log(np.sum(np.abs(rho_a) ** 2).real))
        s2b = float(-np.log(np.sum(np.abs(rho_b) ** 2).real))
        part_a = _sre_q(q_spectrum(rho_a), s2a, alpha)
        part_b = _sre_q(q_spectrum(rho_b), s2b, alpha)
    return full - part_a - part_b


def b_term(state: DenseState, region: Region) -> float:
    """B(rho) = -ln( sum_A tr(rho_A P_A)^4 sum_B tr(rho_B P_B)^4 / sum tr(rho P)^4 )."""
    if state.n_qubits > MIXED_MAX_QUBITS:
        raise ValueError(f"b_term limited to {MIXED_MAX_QUBITS} qubits")
    region_b = region.complement()
    s_full = float(np.sum(pauli_spectrum(state).values ** 2))
    s_a = float(np.sum(pauli_spectrum(reduced_density(state, region)).values ** 2))
    s_b = float(np.sum(pauli_spectrum(reduced_density(state, region_b)).values ** 2))
    return float(-np.log(s_a * s_b / s_full))


def renyi2_mutual_information(state: DenseState, region: Region) -> float:
    """I_2(rho) = S_2(rho_A) + S_2(rho_B) - S_2(rho); zero S_2 for pure rho."""
    rho_a = reduced_density(state, region)
    rho_b = reduced_density(state, region.complement())
    s2a = float(-np.log(np.sum(np.abs(rho_a) ** 2).real))
    s2b = float(-np.log(np.sum(np.abs(rho_b) ** 2).real))
    return s2a + s2b


# ---------------------------------------------------------------------------
# Closed-form reference values


def uniform_reference(n_qubits: int) -> tuple[float, float]:
    """(M_1, C_M) of the toy state with <P>^2 = 1/(2^N + 1) off the identity."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    d = 2.0**n_qubits
    log_term = np.log(d + 1.0)
    m1 = (1.0 - 1.0 / d) * log_term
    cm = (1.0 / d) * (1.0 - 1.0 / d) * log_term**2
    return float(m1), float(cm)


PSI_32 = float(digamma(1.5))
TYPICAL_CAPACITY_LIMIT = float(polygamma(1, 1.5))  # = pi^2/2 - 4 ~ 0.934802
TYPICAL_M1_OFFSET = float(-2.0 * LN2 - PSI_32)  # M_1^typ - N ln 2 for large N


@dataclass(frozen=True)
class TypicalReference:
    """Phenomenological typical-state SRE curve and its cumulants at fixed N.

    The Pauli coefficients of typical states follow a Gaussian whose scale b
    normalizes the distribution: b = 1/(d+1) for complex states and
    b = 2/(d+2) for real ones, with eta = d^2 resp. d(d+1)/2 strings counted.
    """

    n_qubits: int
    ensemble: str
    eta: float
    b: float

    def _f(self, alpha: float) -> float:
        d = 2.0**self.n_qubits
        return float(
            ((self.eta - 1.0) * (2.0 * self.b) ** alpha * gamma_fn(alpha + 0.5))
            / (np.sqrt(np.pi) * d)
            + 1.0 / d
        )

    def m_alpha(self, alpha: float) -> float:
        if alpha == 1.0:
            return self.m1
        return float(np.log(self._f(alpha)) / (1.0 - alpha))

    @property
    def m1(self) -> float:
        d = 2.0**self.n_qubits
        return float(-(1.0 - 1.0 / d) * (np.log(2.0 * self.b) + PSI_32))

    @property
    def c_m(self) -> float:
        d = 2.0**self.n_qubits
        lb = np.log(2.0 * self.b) + PSI_32
        return float((1.0 - 1.0 / d) * (polygamma(1, 1.5) + lb**2 / d))


def typical_reference(n_qubits: int, ensemble: str = "complex") -> TypicalReference:
    if n_qubits < 2:
        raise ValueError("typical_reference needs N >= 2")
    d = 2.0**n_qubits
    if ensemble == "complex":
        eta, b = d * d, 1.0 / (d + 1.0)
    elif ensemble == "real":
        eta, b = d * (d + 1.0) / 2.0, 2.0 / (d + 2.0)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    return TypicalReference(n_qubits, ensemble, eta, b)


# ---------------------------------------------------------------------------
# Export


def export_spectrum_csv(state: DenseState, fh):
    """Write columns (pauli_text, trP_sq, p, q, pi) for a pure state."""
    spec = pauli_spectrum(state)
    p = spec.p()
    q = q_spectrum(state).values if state.n_qubits <= MIXED_MAX_QUBITS else p
    pi = pi_distribution(spec)
    fh.write("pauli_text,trP_sq,p,q,pi\n")
    for m in range(4**spec.n_qubits):
        fh.write(
            f"{index_to_text(m, spec.n_qubits)},{spec.values[m]:.12g},"
            f"{p[m]:.12g},{q[m]:.12g},{pi[m]:.12g}\n"
        )
