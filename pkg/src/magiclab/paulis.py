"""Unsigned N-qubit Pauli strings and subsystem bookkeeping.

Encoding: every qubit carries a two-bit code ``(n1, n2)`` with

    00 -> I,  01 -> X,  10 -> Z,  11 -> Y,

stored as the integer ``c = 2*n1 + n2`` in {0, 1, 2, 3}. This layout makes
Bell-measurement outcome bits decode directly into Pauli codes, so samplers
never remap anything. Qubit 0 is the leftmost symbol in text form and the
most significant bit of a computational-basis amplitude index.

The integer index of a string is its concatenated 2N-bit code read as one
number (qubit 0 in the highest base-4 digit), which fixes a stable
enumeration order of all 4^N strings.

Signed Pauli algebra (phases, symplectic products) is deliberately absent:
every quantity downstream depends on tr(rho P)^2 or tr(rho P rho P), both
of which are phase-insensitive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CODE_I, CODE_X, CODE_Z, CODE_Y = 0, 1, 2, 3

_CODE_TO_CHAR = "IXZY"
_CHAR_TO_CODE = {"I": CODE_I, "X": CODE_X, "Z": CODE_Z, "Y": CODE_Y}

_SINGLE = {
    CODE_I: np.eye(2, dtype=complex),
    CODE_X: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    CODE_Z: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    CODE_Y: np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
}

DENSE_MATRIX_MAX_QUBITS = 12


@dataclass(frozen=True)
class PauliString:
    """An unsigned Pauli operator on ``n_qubits`` qubits."""

    codes: tuple[int, ...]

    def __post_init__(self):
        if len(self.codes) == 0:
            raise ValueError("empty Pauli string")
        if any(c not in (0, 1, 2, 3) for c in self.codes):
            raise ValueError(f"invalid Pauli codes: {self.codes}")

    @property
    def n_qubits(self) -> int:
        return len(self.codes)

    @classmethod
    def from_codes(cls, codes) -> "PauliString":
        return cls(tuple(int(c) for c in codes))

    @classmethod
    def from_index(cls, index: int, n_qubits: int) -> "PauliString":
        """Inverse of :attr:`index` for a fixed qubit count."""
        if not 0 <= index < 4**n_qubits:
            raise ValueError(f"index {index} out of range for {n_qubits} qubits")
        codes = [(index >> (2 * (n_qubits - 1 - j))) & 3 for j in range(n_qubits)]
        return cls(tuple(codes))

    @property
    def index(self) -> int:
        """Concatenated 2N-bit code as an integer (qubit 0 most significant)."""
        m = 0
        for c in self.codes:
            m = (m << 2) | c
        return m

    def render(self) -> str:
        return "".join(_CODE_TO_CHAR[c] for c in self.codes)

    def __str__(self) -> str:
        return self.render()

    @property
    def x_mask(self) -> int:
        """Bit-flip mask over amplitude indices (qubit 0 = MSB)."""
        n = self.n_qubits
        m = 0
        for j, c in enumerate(self.codes):
            if c & 1:
                m |= 1 << (n - 1 - j)
        return m

    @property
    def z_mask(self) -> int:
        """Sign mask over amplitude indices (qubit 0 = MSB)."""
        n = self.n_qubits
        m = 0
        for j, c in enumerate(self.codes):
            if c >> 1:
                m |= 1 << (n - 1 - j)
        return m

    @property
    def n_y(self) -> int:
        return sum(1 for c in self.codes if c == CODE_Y)


@dataclass(frozen=True)
class Region:
    """A sorted set of distinct qubit indices inside a chain of ``n_qubits``."""

    sites: tuple[int, ...]
    n_qubits: int

    def __post_init__(self):
        if any(not 0 <= s < self.n_qubits for s in self.sites):
            raise ValueError(f"site out of range in {self.sites}")
        if any(b <= a for a, b in zip(self.sites, self.sites[1:])):
            raise ValueError("region sites must be strictly increasing")

    @classmethod
    def of(cls, sites, n_qubits: int) -> "Region":
        return cls(tuple(sorted(int(s) for s in set(sites))), n_qubits)

    @classmethod
    def prefix(cls, k: int, n_qubits: int) -> "Region":
        return cls(tuple(range(k)), n_qubits)

    def complement(self) -> "Region":
        rest = tuple(s for s in range(self.n_qubits) if s not in set(self.sites))
        return Region(rest, self.n_qubits)

    @property
    def size(self) -> int:
        return len(self.sites)

    def is_contiguous(self) -> bool:
        return all(b == a + 1 for a, b in zip(self.sites, self.sites[1:]))


def parse(text: str) -> PauliString:
    """Parse a string over {I, X, Y, Z} into a :class:`PauliString`."""
    if not text:
        raise ValueError("empty Pauli string")
    try:
        codes = tuple(_CHAR_TO_CODE[ch] for ch in text)
    except KeyError as exc:
        raise ValueError(f"unknown Pauli symbol {exc.args[0]!r} in {text!r}") from exc
    return PauliString(codes)


def render(p: PauliString) -> str:
    return p.render()


def restrict(p: PauliString, region: Region) -> PauliString:
    """Reduce ``p`` onto ``region``, preserving qubit order."""
    if region.n_qubits != p.n_qubits:
        raise ValueError("region size does not match Pauli string")
    if region.size == 0:
        raise ValueError("cannot restrict to the empty region")
    return PauliString(tuple(p.codes[s] for s in region.sites))


def weight(p: PauliString) -> int:
    """Number of non-identity tensor factors."""
    return sum(1 for c in p.codes if c != CODE_I)


def dense_matrix(p: PauliString) -> np.ndarray:
    """Full 2^N x 2^N matrix of ``p`` (qubit 0 = first Kronecker factor)."""
    if p.n_qubits > DENSE_MATRIX_MAX_QUBITS:
        raise ValueError(
            f"dense_matrix limited to {DENSE_MATRIX_MAX_QUBITS} qubits, got {p.n_qubits}"
        )
    m = np.ones((1, 1), dtype=complex)
    for c in p.codes:
        m = np.kron(m, _SINGLE[c])
    return m


def single_qubit_matrix(code: int) -> np.ndarray:
    return _SINGLE[code].copy()


def all_indices(n_qubits: int) -> np.ndarray:
    """All 4^N Pauli indices in enumeration order."""
    return np.arange(4**n_qubits, dtype=np.int64)


def index_to_text(index: int, n_qubits: int) -> str:
    return PauliString.from_index(index, n_qubits).render()


def masks_from_index(index, n_qubits: int):
    """Vectorized (x_mask, z_mask, n_y) for integer Pauli indices.

    Masks address amplitude bits with qubit 0 as MSB, matching
    :attr:`PauliString.x_mask` / :attr:`PauliString.z_mask`.
    """
    index = np.asarray(index, dtype=np.int64)
    x = np.zeros_like(index)
    z = np.zeros_like(index)
    for j in range(n_qubits):
        code = (index >> (2 * (n_qubits - 1 - j))) & 3
        bit = np.int64(1) << (n_qubits - 1 - j)
        x |= np.where(code & 1, bit, 0)
        z |= np.where(code >> 1, bit, 0)
    ny = np.bitwise_count(x & z).astype(np.int64)
    return x, z, ny


def index_from_masks(x_mask, z_mask, n_qubits: int):
    """Inverse of :func:`masks_from_index` (vectorized)."""
    x_mask = np.asarray(x_mask, dtype=np.int64)
    z_mask = np.asarray(z_mask, dtype=np.int64)
    idx = np.zeros_like(x_mask)
    for j in range(n_qubits):
        bit = np.int64(1) << (n_qubits - 1 - j)
        code = ((z_mask & bit) != 0) * 2 + ((x_mask & bit) != 0) * 1
        idx |= code.astype(np.int64) << (2 * (n_qubits - 1 - j))
    return idx


def codes_array_to_index(codes: np.ndarray) -> np.ndarray:
    """Pack per-qubit code rows (shape (..., N)) into integer indices."""
    codes = np.asarray(codes, dtype=np.int64)
    n = codes.shape[-1]
    out = np.zeros(codes.shape[:-1], dtype=np.int64)
    for j in range(n):
        out = (out << 2) | codes[..., j]
    return out
