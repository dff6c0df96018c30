"""Model builders: TFIM/XXZ chains, basis rotations, doped Clifford+T circuits.

TFIM:  H = -sum_k X_k X_{k+1} - h sum_k Z_k          (open boundary)
XXZ:   H = -sum_k (X_k X_{k+1} + Y_k Y_{k+1} + Delta Z_k Z_{k+1})

An optional local basis rotation V conjugates every local operator,
H -> V^{xN} H V^{xN,dagger}, which changes magic but not entanglement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .cliffords import random_clifford_gates
from .paulis import CODE_X, CODE_Y, CODE_Z, single_qubit_matrix
from .statevec import DenseState, HamiltonianSpec, T_GATE, apply_circuit, zero_state

_X = single_qubit_matrix(CODE_X)
_Y = single_qubit_matrix(CODE_Y)
_Z = single_qubit_matrix(CODE_Z)


def transition_constants() -> tuple[float, float, float]:
    """Doping densities where the alpha = 0, 1, 2 SRE densities saturate."""
    return 1.0, 2.0, float(np.log(2.0) / np.log(4.0 / 3.0))


def local_terms(spec: HamiltonianSpec) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Hamiltonian as a list of (sites, dense local matrix) terms."""
    n = spec.n_qubits
    terms: list[tuple[tuple[int, ...], np.ndarray]] = []
    if spec.model == "tfim":
        for k in range(n - 1):
            terms.append(((k, k + 1), -np.kron(_X, _X)))
        for k in range(n):
            terms.append(((k,), -spec.coupling * _Z))
    else:  # xxz
        bond = -(np.kron(_X, _X) + np.kron(_Y, _Y) + spec.coupling * np.kron(_Z, _Z))
        for k in range(n - 1):
            terms.append(((k, k + 1), bond))
    if spec.rotation is not None:
        v = spec.rotation
        out = []
        for sites, mat in terms:
            vk = v if len(sites) == 1 else np.kron(v, v)
            out.append((sites, vk @ mat @ vk.conj().T))
        terms = out
    return terms


def build_sparse_hamiltonian(spec: HamiltonianSpec) -> scipy.sparse.csr_matrix:
    """CSR matrix of the full Hamiltonian (qubit 0 = most significant bit)."""
    n = spec.n_qubits
    dim = 2**n
    h = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for sites, mat in local_terms(spec):
        op = scipy.sparse.csr_matrix(mat)
        before = 2 ** min(sites)
        # Adjacent sites only (min..max contiguous for these models).
        after = 2 ** (n - max(sites) - 1)
        full = scipy.sparse.kron(
            scipy.sparse.kron(scipy.sparse.identity(before), op),
            scipy.sparse.identity(after),
            format="csr",
        )
        h = h + full
    return h.tocsr()


def build_mpo(spec: HamiltonianSpec, sector_penalty: float = 0.0) -> list[np.ndarray]:
    """MPO tensors W[k] with shape (wl, wr, s_out, s_in); W[0]/W[-1] carry
    the boundary rows/columns already selected.

    For the XXZ chain, ``sector_penalty`` adds lambda (sum_k Z_k)^2, which
    vanishes exactly on the half-filling sector and lifts every other
    particle-number sector; two-site DMRG otherwise hops into the
    polarized product state once Delta is close to 1.
    """
    n = spec.n_qubits
    eye = np.eye(2, dtype=complex)
    if spec.model == "tfim":
        w = np.zeros((3, 3, 2, 2), dtype=complex)
        w[0, 0] = eye
        w[1, 0] = _X
        w[2, 0] = -spec.coupling * _Z
        w[2, 1] = -_X
        w[2, 2] = eye
    else:
        lam = sector_penalty
        w = np.zeros((6, 6, 2, 2), dtype=complex)
        w[0, 0] = eye
        w[1, 0] = _X
        w[2, 0] = _Y
        w[3, 0] = _Z
        w[4, 0] = 2.0 * lam * _Z  # second z of the long-range penalty pair
        w[4, 4] = eye
        w[5, 1] = -_X
        w[5, 2] = -_Y
        w[5, 3] = -spec.coupling * _Z
        w[5, 0] = lam * eye  # diagonal piece of (sum Z)^2
        if lam != 0.0:
            w[5, 4] = _Z  # first z of the penalty pair
        w[5, 5] = eye
    if spec.rotation is not None:
        v = spec.rotation
        w = np.einsum("ab,wvbc,dc->wvad", v, w, v.conj())
    tensors = [w.copy() for _ in range(n)]
    tensors[0] = tensors[0][-1:, :, :, :]
    tensors[-1] = tensors[-1][:, :1, :, :]
    return tensors


# ---------------------------------------------------------------------------
# Doped Clifford circuits


@dataclass(frozen=True)
class CliffordTSpec:
    """A random Clifford circuit interleaved with ``n_tgates`` T gates."""

    n_qubits: int
    n_tgates: int
    seed: int

    def __post_init__(self):
        if self.n_tgates < 0:
            raise ValueError("n_tgates must be non-negative")

    @property
    def doping(self) -> float:
        """T-gate density z = N_T / N (exact rational as a float)."""
        return self.n_tgates / self.n_qubits


def clifford_t_gates(spec: CliffordTSpec) -> list[tuple[str, tuple[int, ...]]]:
    """Gate list: fresh random Clifford, then alternating T (on qubit 0) and
    fresh Cliffords, n_tgates times. Application order is list order."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, spec.n_qubits]))
    gates: list[tuple[str, tuple[int, ...]]] = []
    gates.extend(random_clifford_gates(spec.n_qubits, rng))
    for _ in range(spec.n_tgates):
        gates.append(("T", (0,)))
        gates.extend(random_clifford_gates(spec.n_qubits, rng))
    return gates


def clifford_t_state(spec: CliffordTSpec) -> DenseState:
    if spec.n_qubits > 16:
        raise ValueError("clifford_t_state limited to 16 qubits at desk scale")
    return apply_circuit(zero_state(spec.n_qubits), clifford_t_gates(spec))


def gates_to_json(gates) -> list[dict]:
    return [{"gate": g, "targets": list(sites)} for g, sites in gates]


# re-export for CLI convenience
T_GATE_MATRIX = T_GATE
