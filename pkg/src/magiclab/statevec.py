"""Dense statevector engine: gates, expectations, reduced states, ground states.

Amplitude convention: basis index ``i`` encodes qubit j in bit ``N-1-j``
(qubit 0 is the most significant bit), matching the Pauli text convention
where qubit 0 is the leftmost symbol.

All logarithms are natural logarithms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .paulis import PauliString, Region

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12
REDUCED_MAX_SITES = 14

STATE_MAGIC = b"MGL1"


class NumericalAbortError(RuntimeError):
    """A numerical invariant was violated badly enough to stop the run."""


@dataclass
class DenseState:
    """A normalized vector of 2^N complex amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = self.amplitudes.size
        if n == 0 or n & (n - 1):
            raise ValueError(f"amplitude count {n} is not a power of two")

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "DenseState":
        return DenseState(self.amplitudes / self.norm())

    def copy(self) -> "DenseState":
        return DenseState(self.amplitudes.copy())


def zero_state(n_qubits: int) -> DenseState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return DenseState(amps)


def basis_state(bits, n_qubits: int) -> DenseState:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[idx] = 1.0
    return DenseState(amps)


def ghz_state(n_qubits: int) -> DenseState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return DenseState(amps)


def product_state(single: np.ndarray, n_qubits: int) -> DenseState:
    """Tensor power of a normalized single-qubit state."""
    v = np.asarray(single, dtype=complex).reshape(2)
    amps = np.ones(1, dtype=complex)
    for _ in range(n_qubits):
        amps = np.kron(amps, v)
    return DenseState(amps)


def haar_state(n_qubits: int, rng: np.random.Generator) -> DenseState:
    z = rng.standard_normal(2**n_qubits) + 1j * rng.standard_normal(2**n_qubits)
    return DenseState(z / np.linalg.norm(z))


# Common gates.
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
S_GATE = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=complex)
T_GATE = np.array([[1.0, 0.0], [0.0, np.exp(-1j * np.pi / 4)]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def rotation_gate(axis: str, theta: float) -> np.ndarray:
    """V_axis(theta) = exp(-i sigma^axis theta / 2)."""
    from .paulis import parse, single_qubit_matrix

    code = parse(axis.upper()).codes[0]
    sigma = single_qubit_matrix(code)
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * sigma


def _check_unitary(gate: np.ndarray):
    d = gate.shape[0]
    if gate.shape != (d, d) or d not in (2, 4):
        raise ValueError(f"gate must be 2x2 or 4x4, got shape {gate.shape}")
    err = np.abs(gate @ gate.conj().T - np.eye(d)).max()
    if err > UNITARY_TOL:
        raise ValueError(f"gate is not unitary within {UNITARY_TOL} (deviation {err:.2e})")


def apply_gate(state: DenseState, gate: np.ndarray, sites) -> DenseState:
    """Apply a 1- or 2-qubit unitary on ``sites`` (order matters for 2-qubit gates)."""
    gate = np.asarray(gate, dtype=complex)
    _check_unitary(gate)
    sites = [int(s) for s in (sites if np.iterable(sites) else [sites])]
    n = state.n_qubits
    k = len(sites)
    if gate.shape[0] != 2**k:
        raise ValueError("gate size does not match number of sites")
    if len(set(sites)) != k or any(not 0 <= s < n for s in sites):
        raise ValueError(f"bad sites {sites} for {n} qubits")

    psi = state.amplitudes.reshape((2,) * n)
    g = gate.reshape((2,) * (2 * k))
    # tensordot moves the contracted axes to the front, in `sites` order.
    psi = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), sites))
    psi = np.moveaxis(psi, list(range(k)), sites)
    return DenseState(np.ascontiguousarray(psi).reshape(-1))


def apply_circuit(state: DenseState, gates) -> DenseState:
    """Apply a sequence of (name, sites) or (matrix, sites) gate records."""
    named = {"H": HADAMARD, "S": S_GATE, "T": T_GATE, "CNOT": CNOT}
    for gate, sites in gates:
        mat = named[gate] if isinstance(gate, str) else gate
        state = apply_gate(state, mat, sites)
    return state


def rotate_local_basis(state: DenseState, v: np.ndarray) -> DenseState:
    """Apply the same single-qubit unitary ``v`` on every qubit."""
    v = np.asarray(v, dtype=complex)
    _check_unitary(v)
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    for site in range(state.n_qubits):
        psi = np.tensordot(v, psi, axes=([1], [site]))
        psi = np.moveaxis(psi, 0, site)
    return DenseState(np.ascontiguousarray(psi).reshape(-1))


def expectation(state: DenseState, p: PauliString) -> float:
    """<psi|P|psi> for an unsigned Pauli string; the result is real."""
    if p.n_qubits != state.n_qubits:
        raise ValueError("Pauli string size does not match state")
    val = _pauli_bracket(state.amplitudes, state.amplitudes, p)
    if abs(val.imag) > 1e-10:
        raise NumericalAbortError(
            f"Pauli expectation has imaginary residue {val.imag:.2e}"
        )
    return float(np.clip(val.real, -1.0, 1.0))


def _pauli_bracket(bra: np.ndarray, ket: np.ndarray, p: PauliString) -> complex:
    """<bra|P|ket> via index arithmetic, O(2^N)."""
    n = p.n_qubits
    idx = np.arange(2**n, dtype=np.int64)
    x, z, ny = p.x_mask, p.z_mask, p.n_y
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
    val = np.sum(signs * bra.conj() * ket[idx ^ x])
    return ((-1j) ** ny) * val


def apply_pauli(state: DenseState, p: PauliString) -> DenseState:
    """P|psi> including the i-power phase from Y factors."""
    n = p.n_qubits
    idx = np.arange(2**n, dtype=np.int64)
    x, z, ny = p.x_mask, p.z_mask, p.n_y
    out = np.empty_like(state.amplitudes)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
    out[idx ^ x] = (1j) ** ny * signs * state.amplitudes[idx]
    return DenseState(out)


def reduced_density(state: DenseState, region: Region) -> np.ndarray:
    """Reduced density matrix on ``region`` (partial trace over the rest)."""
    n = state.n_qubits
    if region.n_qubits != n:
        raise ValueError("region does not match state size")
    if region.size > REDUCED_MAX_SITES:
        raise ValueError(f"reduced_density limited to {REDUCED_MAX_SITES} sites")
    keep = list(region.sites)
    rest = [s for s in range(n) if s not in set(keep)]
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.transpose(psi, keep + rest).reshape(2 ** len(keep), -1)
    return psi @ psi.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.sum(np.abs(rho) ** 2).real)


def renyi2_entropy(rho: np.ndarray) -> float:
    """S_2(rho) = -ln tr(rho^2), clamped to [0, inf)."""
    s2 = -np.log(purity(rho))
    if s2 < -1e-9:
        raise NumericalAbortError(f"purity above 1 beyond tolerance: S2={s2:.2e}")
    return max(s2, 0.0)


def state_fidelity(a: DenseState, b: DenseState) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# ---------------------------------------------------------------------------
# Hamiltonians and ground states


@dataclass(frozen=True)
class HamiltonianSpec:
    """TFIM or XXZ open chain, with an optional uniform local basis rotation."""

    model: str  # "tfim" | "xxz"
    n_qubits: int
    coupling: float  # transverse field h (TFIM) or anisotropy Delta (XXZ)
    rotation: np.ndarray | None = None  # 2x2 unitary applied on every site

    def __post_init__(self):
        if self.model not in ("tfim", "xxz"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.rotation is not None:
            v = np.asarray(self.rotation, dtype=complex)
            if v.shape != (2, 2) or np.abs(v @ v.conj().T - np.eye(2)).max() > 1e-12:
                raise ValueError("rotation must be a 2x2 unitary within 1e-12")
            object.__setattr__(self, "rotation", v)


LANCZOS_MAX_QUBITS = 16


class LanczosNonConvergence(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"ground-state residual {residual:.2e} above tolerance")
        self.residual = residual


def _sector_projector_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random vector in the half-filling sector (equal 0/1 bit counts)."""
    idx = np.arange(2**n, dtype=np.int64)
    mask = np.bitwise_count(idx) == n // 2
    v = np.zeros(2**n, dtype=complex)
    v[mask] = rng.standard_normal(int(mask.sum())) + 1j * rng.standard_normal(
        int(mask.sum())
    )
    return v / np.linalg.norm(v)


def lanczos_ground_state(
    spec: HamiltonianSpec, seed: int = 0, tol: float = 1e-10, maxiter: int = 200
) -> tuple[float, DenseState]:
    """Sparse ground state of a model spec; XXZ is solved in the N_p=0 sector.

    The XXZ sector restriction works by projecting the start vector: the
    Hamiltonian matvec never mixes particle-number sectors, so the Krylov
    space stays inside it.
    """
    from .models import build_sparse_hamiltonian

    n = spec.n_qubits
    if n > LANCZOS_MAX_QUBITS:
        raise ValueError(f"lanczos_ground_state limited to {LANCZOS_MAX_QUBITS} qubits")
    h = build_sparse_hamiltonian(spec)
    rng = np.random.default_rng(seed)
    if spec.model == "xxz" and n % 2 == 0 and spec.rotation is None:
        v0 = _sector_projector_vector(n, rng)
    else:
        v0 = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        v0 /= np.linalg.norm(v0)
    if n <= 3:
        dense = h.toarray()
        vals, vecs = np.linalg.eigh(dense)
        energy, psi = float(vals[0]), vecs[:, 0]
    else:
        vals, vecs = scipy.sparse.linalg.eigsh(
            h, k=1, which="SA", v0=v0, tol=tol, maxiter=maxiter * max(1, n)
        )
        energy, psi = float(vals[0]), vecs[:, 0]
    residual = float(np.linalg.norm(h @ psi - energy * psi))
    if residual > 1e-8:
        raise LanczosNonConvergence(residual)
    return energy, DenseState(psi)


# ---------------------------------------------------------------------------
# Binary state dump: b"MGL1", u32-LE qubit count, then 2^N little-endian
# complex doubles (re, im interleaved).


def save_state(state: DenseState, path):
    with open(path, "wb") as fh:
        fh.write(STATE_MAGIC)
        fh.write(struct.pack("<I", state.n_qubits))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_state(path) -> DenseState:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != STATE_MAGIC:
            raise ValueError(f"bad state file magic {magic!r}")
        (n,) = struct.unpack("<I", fh.read(4))
        amps = np.frombuffer(fh.read(2**n * 16), dtype="<c16")
        if amps.size != 2**n:
            raise ValueError("truncated state file")
    return DenseState(amps.astype(complex))
