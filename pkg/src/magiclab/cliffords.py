"""Uniform random Clifford group elements as {H, S, CNOT} gate sequences.

Sampling follows the canonical-form decomposition of the Clifford group:
every element factors uniquely as

    U = F1 . H_h . S_pi . F2 . Pauli

with F1, F2 Hadamard-free (each a product CX(Delta) then CZ(Gamma) then a
phase layer), H_h a Hadamard layer on the qubit set h, S_pi a qubit
permutation and a Pauli correction. Drawing (h, pi) from the quantum
Mallows distribution and the (Gamma, Delta) matrices with the matching
free/forced-zero pattern yields the exact uniform measure; uniformity is
pinned down in the tests by chi-squared counts over every 1- and 2-qubit
Clifford (mod global phase).

A Hadamard-free factor parameterized by lower-unit-triangular Delta and
symmetric Gamma applies, in circuit order: the CNOT network realizing the
GF(2) map x -> Delta x (columns emitted in descending order so no
feedback corrupts the map), then CZ gates on the off-diagonal support of
Gamma, then S on its diagonal support.
"""

from __future__ import annotations

import numpy as np

Gate = tuple[str, tuple[int, ...]]


def sample_quantum_mallows(n: int, rng: np.random.Generator):
    """Draw (hadamard layer bits, permutation) from the quantum Mallows law."""
    exponents = np.arange(n, 0, -1, dtype=np.int64)
    powers = np.power(4.0, exponents.astype(float))
    r = rng.uniform(0.0, 1.0, size=n)
    indexes = (-np.ceil(np.log2(r + (1.0 - r) / powers))).astype(np.int64)
    hadamards = (indexes < exponents).astype(np.int64)
    remaining = list(range(n))
    perm = np.zeros(n, dtype=np.int64)
    for pos, (idx, m) in enumerate(zip(indexes, exponents)):
        k = int(idx if idx < m else 2 * m - idx - 1)
        perm[pos] = remaining[k]
        del remaining[k]
    return hadamards, perm


def _sample_borel_matrices(n, rng, hadamards=None, perm=None):
    """(Gamma, Delta) for one Hadamard-free factor.

    With ``hadamards``/``perm`` given, only the entries that the canonical
    form leaves free are sampled; the rest stay zero. Without them every
    entry is free (the F2 factor).
    """
    gamma = np.zeros((n, n), dtype=np.int64)
    delta = np.eye(n, dtype=np.int64)
    constrained = hadamards is not None
    for i in range(n):
        if not constrained or hadamards[i] == 1:
            gamma[i, i] = rng.integers(2)
    for i in range(n):
        for j in range(i):
            if not constrained:
                b = rng.integers(2)
                gamma[i, j] = gamma[j, i] = b
                delta[i, j] = rng.integers(2)
                continue
            hi, hj = hadamards[i], hadamards[j]
            if hi == 1 and hj == 1:
                b = rng.integers(2)
                gamma[i, j] = gamma[j, i] = b
                if perm[i] > perm[j]:
                    delta[i, j] = rng.integers(2)
            elif hi == 0 and hj == 1:
                delta[i, j] = rng.integers(2)
                if perm[i] > perm[j]:
                    b = rng.integers(2)
                    gamma[i, j] = gamma[j, i] = b
            elif hi == 1 and hj == 0:
                if perm[i] < perm[j]:
                    b = rng.integers(2)
                    gamma[i, j] = gamma[j, i] = b
            else:
                if perm[i] < perm[j]:
                    delta[i, j] = rng.integers(2)
    return gamma, delta


def _borel_gates(gamma: np.ndarray, delta: np.ndarray) -> list[Gate]:
    """Circuit-order gates for the Hadamard-free factor (CX, then CZ, then S)."""
    n = gamma.shape[0]
    gates: list[Gate] = []
    for j in range(n - 2, -1, -1):
        for k in range(j + 1, n):
            if delta[k, j]:
                gates.append(("CNOT", (j, k)))
    for j in range(n):
        for k in range(j + 1, n):
            if gamma[k, j]:
                gates.extend([("H", (k,)), ("CNOT", (j, k)), ("H", (k,))])
    for j in range(n):
        if gamma[j, j]:
            gates.append(("S", (j,)))
    return gates


def _permutation_gates(perm: np.ndarray) -> list[Gate]:
    """SWAP network sending the state of qubit j to qubit perm[j]."""
    gates: list[Gate] = []
    pos = list(perm)  # pos[j] = final position of qubit j's content
    for target in range(len(pos)):
        j = pos.index(target)
        if j != target:
            gates.extend(
                [("CNOT", (j, target)), ("CNOT", (target, j)), ("CNOT", (j, target))]
            )
            pos[j], pos[target] = pos[target], pos[j]
    return gates


def _pauli_layer(n: int, rng: np.random.Generator) -> list[Gate]:
    gates: list[Gate] = []
    for j in range(n):
        if rng.integers(2):  # Z
            gates.extend([("S", (j,)), ("S", (j,))])
        if rng.integers(2):  # X
            gates.extend([("H", (j,)), ("S", (j,)), ("S", (j,)), ("H", (j,))])
    return gates


def random_clifford_gates(n: int, rng: np.random.Generator) -> list[Gate]:
    """Gate sequence (application order) of one uniform random Clifford."""
    hadamards, perm = sample_quantum_mallows(n, rng)
    gamma1, delta1 = _sample_borel_matrices(n, rng, hadamards, perm)
    gamma2, delta2 = _sample_borel_matrices(n, rng)
    gates: list[Gate] = []
    gates.extend(_pauli_layer(n, rng))
    gates.extend(_borel_gates(gamma2, delta2))
    gates.extend(_permutation_gates(perm))
    for j in range(n):
        if hadamards[j]:
            gates.append(("H", (j,)))
    gates.extend(_borel_gates(gamma1, delta1))
    return gates
