import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dqfim.ansatz import apply_circuit, build_ansatz, circuit_jacobian, custom_ansatz, word
from dqfim.core import basis_state, psd_rank, sample_haar_vector
from dqfim.ensembles import EnsembleSpec, sample_states
from dqfim.lie import ansatz_closure
from dqfim.metric import (
    NoPlateauError,
    RankProtocol,
    build_projector,
    compute_dqfim,
    dqfim_from_jacobian,
    effective_dimension,
    estimate_max_rank,
    saturation_profile,
    scan_depth,
    unitary_bound,
)

from oracles import dense_dqfim, isometry_fidelity, state_qfim

FAMILIES = ["he", "xy", "xy_open", "xxz", "ycz"]
ZERO, ONE = basis_state(1, 0), basis_state(1, 1)
PLUS = (ZERO + ONE) / np.sqrt(2)


def rz(layers):
    return custom_ansatz(1, layers, [word((0, "Z"))])


def test_projector_examples():
    p = build_projector([ZERO])
    assert p.rank == 1
    np.testing.assert_allclose(abs(p.basis[:, 0]), [1, 0])
    assert build_projector([ZERO, ZERO]).rank == 1
    p = build_projector([ZERO, PLUS])
    assert p.rank == 2
    # hand-computed spectrum of (|0><0| + |+><+|) / 2
    np.testing.assert_allclose(sorted(p.eigenvalues), [(2 - np.sqrt(2)) / 4, (2 + np.sqrt(2)) / 4])
    with pytest.raises(ValueError):
        build_projector([])


@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 12))
def test_projector_orthonormal(seed, L):
    rng = np.random.default_rng(seed)
    psi = sample_states(EnsembleSpec.parse("haar", 3), L, rng)
    p = build_projector(psi)
    assert p.rank == min(L, 8)
    np.testing.assert_allclose(p.basis.conj().T @ p.basis, np.eye(p.rank), atol=1e-10)
    # the span contains every input
    resid = psi - p.basis @ (p.basis.conj().T @ psi)
    assert np.max(np.abs(resid)) < 1e-10


def test_single_qubit_examples():
    assert compute_dqfim(rz(1), [0.3], build_projector([PLUS])).matrix == pytest.approx(np.array([[4.0]]))
    assert compute_dqfim(rz(1), [0.3], build_projector([ZERO])).matrix == pytest.approx(np.array([[0.0]]), abs=1e-14)
    q = compute_dqfim(rz(2), [0.3, 1.1], build_projector([PLUS])).matrix
    np.testing.assert_allclose(q, [[4, 4], [4, 4]], atol=1e-13)
    assert psd_rank(q) == 1


def test_effective_dimension_examples():
    assert effective_dimension(rz(2), [0.3, 1.1], build_projector([PLUS])) == 1
    assert effective_dimension(rz(2), [0.3, 1.1], build_projector([ZERO])) == 0
    zyz = custom_ansatz(1, 1, [word((0, "Z")), word((0, "Y")), word((0, "Z"))])
    assert effective_dimension(zyz, [0.4, 0.9, 1.7], build_projector([ZERO, ONE])) == 3


def test_unitary_bound_examples():
    assert unitary_bound(2, 1) == 2
    assert unitary_bound(2, 2) == 3
    assert unitary_bound(4, 2) == 11
    assert unitary_bound(4, 5) == 15
    with pytest.raises(ValueError):
        unitary_bound(1, 1)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("B", [1, 2, 4])
def test_matches_dense_oracle(family, B, rng):
    a = build_ansatz(family, 3, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 3), B, rng))
    q = compute_dqfim(a, theta, proj).matrix
    np.testing.assert_allclose(q, dense_dqfim(a, theta, proj.basis), atol=1e-11)


@pytest.mark.parametrize("family", ["he", "xxz"])
def test_second_order_fidelity_expansion(family, rng):
    a = build_ansatz(family, 2, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 2), 2, rng))
    q = compute_dqfim(a, theta, proj).matrix
    h = 1e-3

    def loss(v):
        # even part of 1 - F, which equals v.Q.v / 4 up to O(h^4)
        f = isometry_fidelity(a, theta, v, proj.basis, apply_circuit)
        g = isometry_fidelity(a, theta, -v, proj.basis, apply_circuit)
        return 1 - 0.5 * (f + g)

    M = a.n_params
    diag = np.array([4 * loss(h * np.eye(M)[n]) / h**2 for n in range(M)])
    for n in range(M):
        assert abs(diag[n] - q[n, n]) < 1e-5
        for m in range(n + 1, M):
            v = h * (np.eye(M)[n] + np.eye(M)[m])
            est = 2 * loss(v) / h**2 - 0.5 * (diag[n] + diag[m])
            assert abs(est - q[n, m]) < 1e-5


def test_rank_one_projector_is_state_qfim(rng):
    a = build_ansatz("he", 2, 3)
    theta = a.random_params(rng)
    psi = sample_haar_vector(4, rng)
    q = compute_dqfim(a, theta, build_projector([psi])).matrix
    np.testing.assert_allclose(q, state_qfim(a, theta, psi), atol=1e-10)


@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0, 2 * np.pi))
def test_gauge_invariance(seed, alpha):
    rng = np.random.default_rng(seed)
    a = build_ansatz("xy", 3, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 3), 2, rng))
    jac = circuit_jacobian(a, theta, proj.basis)
    q0 = dqfim_from_jacobian(jac.output, jac.derivatives)
    ph = np.exp(1j * alpha)
    q1 = dqfim_from_jacobian(ph * jac.output, ph * jac.derivatives)
    np.testing.assert_allclose(q0, q1, atol=1e-10)


@given(seed=st.integers(0, 2**32 - 1))
def test_basis_recombination_invariance(seed):
    rng = np.random.default_rng(seed)
    a = build_ansatz("he", 2, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 2), 3, rng))
    w = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    rotated = type(proj)(proj.basis @ w)
    np.testing.assert_allclose(
        compute_dqfim(a, theta, proj).matrix, compute_dqfim(a, theta, rotated).matrix, atol=1e-10
    )


@pytest.mark.parametrize("family", FAMILIES)
@given(seed=st.integers(0, 2**32 - 1))
def test_psd_and_symmetric(family, seed):
    rng = np.random.default_rng(seed)
    a = build_ansatz(family, 3, 3)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 3), int(rng.integers(1, 5)), rng))
    q = compute_dqfim(a, a.random_params(rng), proj).matrix
    assert np.array_equal(q, q.T)
    assert np.linalg.eigvalsh(q)[0] >= -1e-9


@pytest.mark.parametrize("family", FAMILIES)
def test_bound_chain(family, rng):
    n = 3
    a = build_ansatz(family, n, 6)
    dla = ansatz_closure(build_ansatz(family, n, 1)).dim
    for L in (1, 2, 3):
        proj = build_projector(sample_states(EnsembleSpec.parse("haar", n), L, rng))
        D = effective_dimension(a, a.random_params(rng), proj)
        assert D <= min(a.n_params, unitary_bound(8, proj.rank), dla)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        compute_dqfim(build_ansatz("he", 2, 1), np.zeros(4), build_projector([basis_state(3, 0)]))


def test_depth_schedule():
    g = list(RankProtocol(g_max=60).depths())
    assert g[:12] == list(range(1, 13))
    assert g[12:] == [18, 27, 40, 60]


def test_max_rank_he_two_qubits():
    R, M_c = estimate_max_rank("he", 2, EnsembleSpec.parse("haar", 2), 1, seed=0)
    assert R == 6 == unitary_bound(4, 1)
    assert M_c % 4 == 0


def test_max_rank_xxz_product():
    assert estimate_max_rank("xxz", 4, EnsembleSpec.parse("product", 4), 1, seed=0)[0] == 24


def test_no_plateau_error_carries_curve():
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", 3), 2, np.random.default_rng(0)))
    with pytest.raises(NoPlateauError) as info:
        scan_depth("he", 3, proj, RankProtocol(g_max=3), np.random.default_rng(0))
    assert [c[0] for c in info.value.curve] == [1, 2, 3]


def test_saturation_profile_he_two_qubits():
    prof = saturation_profile("he", 2, EnsembleSpec.parse("haar", 2), 5, seed=3)
    assert [prof.R[L] for L in range(1, 6)] == [6, 11, 14, 15, 15]
    assert prof.R_inf == 15 and prof.L_c == 4
    assert prof.L_c_approx == pytest.approx(5.0)
    assert all(prof.M_c[L] <= prof.M_c[L + 1] for L in range(1, 5))


def test_saturation_requires_plateau():
    with pytest.raises(NoPlateauError):
        saturation_profile("he", 2, EnsembleSpec.parse("haar", 2), 2, seed=0)


def test_max_and_mean_over_redraws_agree():
    """Generic data give the same rank on every redraw."""
    ranks = []
    for seed in range(4):
        ranks.append(estimate_max_rank("xy", 4, EnsembleSpec.parse("product", 4), 1, seed=seed)[0])
    assert len(set(ranks)) == 1
