import numpy as np
import pytest

from magiclab import mps as M, oracle as oc
from magiclab.hybrid import empirical_distribution, total_variation
from magiclab.mps_sampling import (
    PerfectSampler,
    draw_paulis_mps,
    estimate_capacity_mps,
    estimate_m1_mps,
    estimate_m2_mps,
    estimate_mutual_q,
    perfect_sample_q,
)
from magiclab.paulis import Region, codes_array_to_index
from magiclab.statevec import (
    DenseState,
    HamiltonianSpec,
    ghz_state,
    lanczos_ground_state,
    product_state,
    zero_state,
)

LN2 = np.log(2.0)


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


def th_product_mps(copies):
    single = np.array([1.0, np.exp(-1j * np.pi / 4)]) / np.sqrt(2.0)
    return M.from_dense(product_state(single, copies), 1)[0]


def test_plus_state_draws():
    plus = M.product_mps([(1 / np.sqrt(2), 1 / np.sqrt(2))] * 5)
    codes, _ = draw_paulis_mps(plus, 20000, seed=0)
    assert np.all((codes == 0) | (codes == 1))
    emp = empirical_distribution(codes, 5)
    support = emp[emp > 0]
    assert np.abs(support - 1 / 32).max() < 3 * np.sqrt(1 / 32 / 20000)


def test_ghz6_draws_uniform_over_stabilizer_group():
    g, _ = M.from_dense(ghz_state(6), 2)
    codes, _ = draw_paulis_mps(g, 10**5, seed=1)
    tv = total_variation(
        empirical_distribution(codes, 6), oc.pauli_spectrum(ghz_state(6)).p()
    )
    assert tv < 0.02


def test_sampled_probability_equals_exact_q():
    mps = random_mps(5, 4, 2)
    p = oc.pauli_spectrum(mps.to_dense()).p()
    codes, logq = draw_paulis_mps(mps, 500, seed=3)
    idx = codes_array_to_index(codes)
    assert np.abs(np.exp(logq) - p[idx]).max() < 1e-12


@pytest.mark.slow
def test_random_mps_tv_at_1e6():
    mps = random_mps(6, 4, 0)
    p = oc.pauli_spectrum(mps.to_dense()).p()
    codes, _ = draw_paulis_mps(mps, 10**6, seed=4, batch_size=8192)
    assert total_variation(empirical_distribution(codes, 6), p) < 0.02


def test_single_draw_api():
    mps = random_mps(4, 3, 5)
    p1, logq1 = perfect_sample_q(mps, seed=7)
    p2, logq2 = perfect_sample_q(mps, seed=7)
    assert p1.codes == p2.codes and logq1 == logq2


def test_marginal_consistency_prefix():
    mps = random_mps(6, 4, 6)
    codes, _ = draw_paulis_mps(mps, 10**5, seed=8)
    emp = empirical_distribution(codes, 6)
    from magiclab.statevec import reduced_density

    rho = reduced_density(mps.to_dense(), Region.prefix(2, 6))
    q_red = oc.q_spectrum(rho).values
    marg = emp.reshape(16, -1).sum(axis=1)
    assert 0.5 * np.abs(marg - q_red).sum() < 0.03


def test_estimator_identity_logq_vs_expectation():
    # the accumulated ln q must equal ln(2^-N <P>^2) sample by sample
    mps = random_mps(6, 4, 9)
    codes, logq = draw_paulis_mps(mps, 2000, seed=10)
    from magiclab.mps_sampling import _log_sq_expectations_mps

    vals = _log_sq_expectations_mps(mps, codes)
    assert np.abs(logq - (vals - 6 * LN2)).max() < 1e-9


def test_estimate_m1_stabilizer_exact_zero():
    zeros = M.product_mps([(1, 0)] * 6)
    rep = estimate_m1_mps(zeros, 500, seed=0)
    assert rep.value == 0.0 and rep.stderr == 0.0


def test_estimate_m1_t_stack():
    rep = estimate_m1_mps(th_product_mps(6), 10**4, seed=1)
    assert abs(rep.value - 3 * LN2) <= 3 * rep.stderr


def test_estimate_m1_tfim_ground_state():
    e, gs = lanczos_ground_state(HamiltonianSpec("tfim", 10, 1.0))
    want = oc.von_neumann_sre(oc.pauli_spectrum(gs))
    mps, _ = M.from_dense(gs, 32)
    rep = estimate_m1_mps(mps, 10**4, seed=2)
    assert abs(rep.value - want) <= 3 * rep.stderr


def test_estimate_capacity_examples():
    zeros = M.product_mps([(1, 0)] * 5)
    assert estimate_capacity_mps(zeros, 2000, seed=0).value == 0.0
    e, gs = lanczos_ground_state(HamiltonianSpec("tfim", 10, 2.0))
    want = oc.magic_capacity(oc.pauli_spectrum(gs))
    mps, _ = M.from_dense(gs, 32)
    rep = estimate_capacity_mps(mps, 2 * 10**4, seed=3)
    assert abs(rep.value - want) <= 3 * rep.stderr


def test_capacity_linear_in_n_for_product_states():
    theta = np.pi / 3
    single = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    single_cm = oc.magic_capacity(oc.pauli_spectrum(DenseState(single)))
    for n in (4, 8, 12):
        mps = M.product_mps([single] * n)
        rep = estimate_capacity_mps(mps, 4 * 10**4, seed=n)
        assert abs(rep.value / n - single_cm) <= 0.05 * single_cm + 3 * rep.stderr / n


def test_estimate_m2():
    mps = random_mps(6, 4, 11)
    want = oc.sre(oc.pauli_spectrum(mps.to_dense()), 2)
    rep = estimate_m2_mps(mps, 3 * 10**4, seed=4)
    assert abs(rep.value - want) <= 3 * rep.stderr


def test_mutual_q_product_state():
    mps = th_product_mps(6)
    rep = estimate_mutual_q(mps, Region.prefix(3, 6), 2000, seed=5)
    assert abs(rep.value) <= max(3 * rep.stderr, 1e-10)


def test_mutual_q_bell_pair():
    bell, _ = M.from_dense(DenseState(np.array([1, 0, 0, 1]) / np.sqrt(2)), 2)
    rep = estimate_mutual_q(bell, Region.prefix(1, 2), 1000, seed=6)
    assert rep.value == pytest.approx(0.0, abs=1e-10)
    assert rep.stderr == pytest.approx(0.0, abs=1e-12)  # constant integrand
    assert rep.extras["expectation_term"] == pytest.approx(-2 * LN2, abs=1e-10)
    flipped = estimate_mutual_q(bell, Region.prefix(1, 2), 1000, seed=6, paper_sign=True)
    assert flipped.value == pytest.approx(4 * LN2, abs=1e-10)


def test_mutual_q_vs_oracle():
    mps = random_mps(6, 4, 12)
    want = oc.mutual_sre(mps.to_dense(), Region.prefix(3, 6), 1, "q")
    rep = estimate_mutual_q(mps, Region.prefix(3, 6), 3 * 10**4, seed=7)
    assert abs(rep.value - want) <= 3 * rep.stderr

    e, gs = lanczos_ground_state(HamiltonianSpec("tfim", 8, 1.0))
    mps, _ = M.from_dense(gs, 16)
    want = oc.mutual_sre(gs, Region.prefix(4, 8), 1, "q")
    rep = estimate_mutual_q(mps, Region.prefix(4, 8), 3 * 10**4, seed=8)
    assert abs(rep.value - want) <= 3 * rep.stderr


def test_mutual_q_suffix_matches_prefix():
    mps = random_mps(6, 4, 13)
    a = estimate_mutual_q(mps, Region.prefix(2, 6), 5000, seed=9)
    b = estimate_mutual_q(mps, Region.of(range(2, 6), 6), 5000, seed=9)
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_mutual_q_rejects_interior_region():
    mps = random_mps(6, 4, 14)
    with pytest.raises(ValueError):
        estimate_mutual_q(mps, Region.of([2, 3], 6), 1000, seed=0)


def test_stderr_consistent_with_capacity():
    mps = random_mps(6, 4, 15)
    cm = oc.magic_capacity(oc.pauli_spectrum(mps.to_dense()))
    k = 2000
    ratios = []
    for rep_idx in range(20):
        rep = estimate_m1_mps(mps, k, seed=100 + rep_idx)
        ratios.append(rep.stderr / np.sqrt(cm / k))
    mean_ratio = float(np.mean(ratios))
    assert 0.8 <= mean_ratio <= 1.25


def test_conditional_normalization_abort():
    from magiclab.statevec import NumericalAbortError

    mps = random_mps(4, 3, 16)
    sampler = PerfectSampler(mps)
    sampler.tensors = [t * 1.2 for t in sampler.tensors]  # break isometry
    with pytest.raises(NumericalAbortError):
        sampler.sample_batch(4, np.random.default_rng(0))
