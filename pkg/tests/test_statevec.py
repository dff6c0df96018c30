import numpy as np
import pytest

from magiclab.paulis import PauliString, Region, parse
from magiclab.statevec import (
    CNOT,
    HADAMARD,
    DenseState,
    HamiltonianSpec,
    S_GATE,
    T_GATE,
    apply_circuit,
    apply_gate,
    expectation,
    ghz_state,
    haar_state,
    lanczos_ground_state,
    load_state,
    product_state,
    reduced_density,
    renyi2_entropy,
    rotate_local_basis,
    rotation_gate,
    save_state,
    state_fidelity,
    zero_state,
)


def th_state():
    return apply_gate(apply_gate(zero_state(1), HADAMARD, [0]), T_GATE, [0])


def test_apply_gate_hadamard():
    out = apply_gate(zero_state(1), HADAMARD, [0])
    assert np.allclose(out.amplitudes, np.array([1, 1]) / np.sqrt(2))


def test_apply_gate_cnot():
    out = apply_gate(basis(2, "10"), CNOT, [0, 1])
    assert np.allclose(out.amplitudes, basis(2, "11").amplitudes)
    # control/target order matters
    out = apply_gate(basis(2, "01"), CNOT, [1, 0])
    assert np.allclose(out.amplitudes, basis(2, "11").amplitudes)


def basis(n, bits):
    amps = np.zeros(2**n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return DenseState(amps)


def test_apply_gate_rejects_nonunitary():
    with pytest.raises(ValueError):
        apply_gate(zero_state(1), np.array([[1.0, 0.0], [0.0, 2.0]]), [0])
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), CNOT, [0, 0])


def test_random_circuit_inverse_identity():
    rng = np.random.default_rng(1)
    state = haar_state(6, rng)
    gates = []
    for _ in range(40):
        if rng.random() < 0.5:
            g = rng.choice(["H", "S", "T"])
            gates.append((g, (int(rng.integers(6)),)))
        else:
            a, b = rng.choice(6, size=2, replace=False)
            gates.append(("CNOT", (int(a), int(b))))
    named = {"H": HADAMARD, "S": S_GATE, "T": T_GATE, "CNOT": CNOT}
    out = apply_circuit(state, gates)
    for g, sites in reversed(gates):
        out = apply_gate(out, named[g].conj().T, sites)
    assert state_fidelity(out, state) >= 1 - 1e-10


def test_norm_drift_over_100_gates():
    rng = np.random.default_rng(2)
    state = haar_state(5, rng)
    for _ in range(100):
        a, b = rng.choice(5, size=2, replace=False)
        state = apply_gate(state, CNOT, [int(a), int(b)])
        state = apply_gate(state, HADAMARD, [int(rng.integers(5))])
    assert abs(state.norm() - 1.0) < 1e-10


def test_expectation_examples():
    assert expectation(zero_state(1), parse("Z")) == pytest.approx(1.0)
    # 2x2 arithmetic oracle: TH|0> = (|0> + e^{-i pi/4}|1>)/sqrt(2)
    amp = np.array([1.0, np.exp(-1j * np.pi / 4)]) / np.sqrt(2)
    x = np.array([[0, 1], [1, 0]])
    want = (amp.conj() @ x @ amp).real
    assert expectation(th_state(), parse("X")) == pytest.approx(want)
    assert want == pytest.approx(1 / np.sqrt(2))
    assert expectation(ghz_state(4), parse("XXXX")) == pytest.approx(1.0)


def test_reduced_density_examples():
    bell = DenseState(np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(reduced_density(bell, Region.of([0], 2)), np.eye(2) / 2)
    rho = reduced_density(basis(2, "00"), Region.of([0], 2))
    assert np.allclose(rho, np.diag([1.0, 0.0]))


def test_reduced_density_schmidt_symmetry():
    psi = haar_state(6, np.random.default_rng(3))
    a = Region.of([0, 2, 5], 6)
    rho_a = reduced_density(psi, a)
    rho_b = reduced_density(psi, a.complement())
    assert abs(np.trace(rho_a) - 1.0) < 1e-10
    ev_a = np.sort(np.linalg.eigvalsh(rho_a))
    ev_b = np.sort(np.linalg.eigvalsh(rho_b))
    assert np.abs(ev_a - ev_b).max() < 1e-9


def test_renyi2_entropy_examples():
    assert renyi2_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))
    pure = np.diag([1.0, 0.0])
    assert renyi2_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    rho = reduced_density(ghz_state(6), Region.prefix(3, 6))
    assert renyi2_entropy(rho) == pytest.approx(np.log(2))


def test_purity_consistency():
    psi = haar_state(6, np.random.default_rng(4))
    rho = reduced_density(psi, Region.prefix(2, 6))
    assert np.sum(np.abs(rho) ** 2) == pytest.approx(
        np.exp(-renyi2_entropy(rho)), abs=1e-9
    )


def test_lanczos_tfim_classical_limit():
    e, _ = lanczos_ground_state(HamiltonianSpec("tfim", 8, 0.0))
    assert e == pytest.approx(-7.0, abs=1e-8)


def test_lanczos_xxz_two_sites():
    e, psi = lanczos_ground_state(HamiltonianSpec("xxz", 2, 0.0))
    assert e == pytest.approx(-2.0, abs=1e-8)
    want = np.zeros(4)
    want[1] = want[2] = 1 / np.sqrt(2)
    assert abs(np.abs(np.vdot(psi.amplitudes, want)) - 1.0) < 1e-8


def test_lanczos_against_dense_eigh():
    from magiclab.models import build_sparse_hamiltonian

    spec = HamiltonianSpec("tfim", 8, 1.0)
    e, psi = lanczos_ground_state(spec)
    h = build_sparse_hamiltonian(spec).toarray()
    want = np.linalg.eigvalsh(h)[0]
    assert e == pytest.approx(want, abs=1e-8)
    resid = np.linalg.norm(h @ psi.amplitudes - e * psi.amplitudes)
    assert resid <= 1e-8


def test_rotate_local_basis():
    psi = haar_state(3, np.random.default_rng(5))
    out = rotate_local_basis(psi, np.eye(2))
    assert state_fidelity(out, psi) == pytest.approx(1.0)
    v = rotation_gate("y", np.pi / 4)
    rotated = rotate_local_basis(zero_state(4), v)
    for k in range(4):
        codes = [0] * 4
        codes[k] = 2
        assert expectation(rotated, PauliString.from_codes(codes)) == pytest.approx(
            np.cos(np.pi / 4)
        )


def test_z_rotation_keeps_zero_state_stabilizer():
    from magiclab.oracle import pauli_spectrum, sre

    for theta in (0.3, np.pi / 4, 1.1):
        rotated = rotate_local_basis(zero_state(4), rotation_gate("z", theta))
        assert sre(pauli_spectrum(rotated), 2) == pytest.approx(0.0, abs=1e-9)


def test_state_dump_roundtrip(tmp_path):
    psi = haar_state(5, np.random.default_rng(6))
    path = tmp_path / "state.mgl"
    save_state(psi, path)
    again = load_state(path)
    assert state_fidelity(psi, again) == pytest.approx(1.0)
    raw = path.read_bytes()
    assert raw[:4] == b"MGL1"
    assert int.from_bytes(raw[4:8], "little") == 5


def test_product_state_builder():
    single = np.array([np.cos(0.3), np.sin(0.3)])
    psi = product_state(single, 3)
    assert psi.norm() == pytest.approx(1.0)
    rho = reduced_density(psi, Region.of([1], 3))
    assert np.sum(np.abs(rho) ** 2) == pytest.approx(1.0)
