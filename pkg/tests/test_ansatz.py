import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from dqfim import kernels
from dqfim.ansatz import (
    Family,
    apply_circuit,
    apply_circuit_adjoint,
    build_ansatz,
    circuit_jacobian,
    circuit_unitary,
    custom_ansatz,
    generator_set,
    pauli_matrix,
    word,
)
from dqfim.core import basis_state, sample_haar_vector
from dqfim.ensembles import EnsembleSpec, particle_number_expectation, sample_state

FAMILIES = ["he", "xy", "xy_open", "xxz", "ycz"]
SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def test_parameter_counts():
    assert build_ansatz("he", 4, 8).n_params == 64
    xy = build_ansatz("xy", 6, 10)
    assert xy.n_params == 60
    assert xy.fixed_gates_per_layer == 6
    assert build_ansatz("xy_open", 6, 10).fixed_gates_per_layer == 5


def test_periodic_layer_contains_wrap_bond():
    targets = [el.gate.targets for el in build_ansatz("xy", 6, 1).layer if hasattr(el, "gate")]
    assert (5, 0) in targets
    assert sorted(tuple(sorted(t)) for t in targets) == [(0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5)]


def test_bad_families_and_sizes():
    with pytest.raises(ValueError):
        build_ansatz("nope", 3, 1)
    with pytest.raises(ValueError):
        build_ansatz("xy", 1, 1)
    with pytest.raises(ValueError):
        build_ansatz("he", 2, 0)
    assert build_ansatz("he", 1, 1).n_params == 2
    assert Family.parse("XY-periodic") is Family.XY_PERIODIC


def test_parameter_indices_cover_range():
    a = build_ansatz("he", 3, 4)
    idx = sorted(n for _, n in a.program() if n is not None)
    assert idx == list(range(a.n_params))


def test_ycz_identity_at_zero():
    a = build_ansatz("ycz", 4, 3)
    out = apply_circuit(a, np.zeros(a.n_params), basis_state(4, 0))
    np.testing.assert_allclose(out, basis_state(4, 0), atol=1e-15)


def test_single_qubit_ry_half_pi():
    a = custom_ansatz(1, 1, [word((0, "Y"))])
    out = apply_circuit(a, [np.pi / 2], basis_state(1, 0))
    oracle = expm(-1j * np.pi / 2 * SIGMA_Y) @ basis_state(1, 0)
    np.testing.assert_allclose(out, oracle, atol=1e-15)
    assert abs(abs(out[1]) - 1) < 1e-15


@pytest.mark.parametrize("family", FAMILIES)
def test_unitary_matches_dense_product_of_exponentials(family):
    """Rebuild U(theta) from scratch with matrix exponentials and gate kron products."""
    n = 3
    a = build_ansatz(family, n, 2)
    theta = a.random_params(np.random.default_rng(5))
    dim = 1 << n
    u = np.eye(dim, dtype=complex)
    K = a.params_per_layer
    for g in range(a.n_layers):
        for el in a.layer:
            if hasattr(el, "slot"):
                step = expm(-1j * theta[g * K + el.slot] * pauli_matrix(el.generator, n))
            else:
                step = np.eye(dim, dtype=complex)
                step = np.stack([_dense_gate(el.gate, n, col) for col in step.T], axis=1)
            u = step @ u
    np.testing.assert_allclose(circuit_unitary(a, theta), u, atol=1e-12)


def _dense_gate(gate, n, psi):
    # independent two-qubit application through a full tensor reshape
    t = psi.reshape((2,) * n)  # axis j is qubit n-1-j
    a, b = (n - 1 - q for q in gate.targets)
    t = np.moveaxis(t, (a, b), (0, 1))
    t = np.tensordot(gate.matrix.reshape(2, 2, 2, 2), t, axes=([2, 3], [0, 1]))
    return np.moveaxis(t, (0, 1), (a, b)).reshape(-1)


@pytest.mark.parametrize("family", FAMILIES)
def test_norm_and_adjoint(family, rng):
    a = build_ansatz(family, 4, 3)
    theta = a.random_params(rng)
    psi = sample_haar_vector(16, rng)
    out = apply_circuit(a, theta, psi)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    np.testing.assert_allclose(apply_circuit_adjoint(a, theta, out), psi, atol=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_composition(family, rng):
    a, b = build_ansatz(family, 3, 2), build_ansatz(family, 3, 3)
    ab = build_ansatz(family, 3, 5)
    theta = ab.random_params(rng)
    psi = sample_haar_vector(8, rng)
    step = apply_circuit(b, theta[a.n_params :], apply_circuit(a, theta[: a.n_params], psi))
    np.testing.assert_allclose(apply_circuit(ab, theta, psi), step, atol=1e-12)


def test_dimension_mismatch_errors():
    a = build_ansatz("he", 2, 1)
    with pytest.raises(ValueError):
        apply_circuit(a, np.zeros(3), basis_state(2, 0))
    with pytest.raises(ValueError):
        apply_circuit(a, np.zeros(4), basis_state(3, 0))


@pytest.mark.parametrize("family", ["xy", "xy_open", "xxz"])
@given(seed=st.integers(0, 2**32 - 1))
def test_particle_number_conserved(family, seed):
    rng = np.random.default_rng(seed)
    a = build_ansatz(family, 4, 2)
    theta = a.random_params(rng)
    psi = sample_haar_vector(16, rng)
    before = particle_number_expectation(psi)
    after = particle_number_expectation(apply_circuit(a, theta, psi))
    assert abs(before - after) < 1e-10


def test_sector_state_stays_in_sector(rng):
    a = build_ansatz("xy", 5, 4)
    psi = sample_state(EnsembleSpec.parse("sector:1", 5), rng)
    out = apply_circuit(a, a.random_params(rng), psi)
    assert abs(particle_number_expectation(out) - 1) < 1e-10


def test_rz_jacobian_analytic():
    a = custom_ansatz(1, 1, [word((0, "Z"))])
    for theta in (0.0, 0.7, 2.9):
        jac = circuit_jacobian(a, [theta], basis_state(1, 0))
        np.testing.assert_allclose(jac.derivatives[0], [-1j * np.exp(-1j * theta), 0], atol=1e-15)
        assert np.vdot(jac.output, jac.derivatives[0]) == pytest.approx(-1j)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("stride", [None, 1, 4])
def test_jacobian_matches_finite_differences(family, stride, rng):
    a = build_ansatz(family, 3, 2)
    theta = a.random_params(rng)
    phi = np.stack([sample_haar_vector(8, rng) for _ in range(2)], axis=1)
    jac = circuit_jacobian(a, theta, phi, checkpoint_stride=stride)
    assert jac.derivatives.shape == (a.n_params, 8, 2)
    h = 1e-5
    for n in range(a.n_params):
        e = np.zeros(a.n_params)
        e[n] = h
        fd = (apply_circuit(a, theta + e, phi) - apply_circuit(a, theta - e, phi)) / (2 * h)
        np.testing.assert_allclose(jac.derivatives[n], fd, atol=1e-8)


@pytest.mark.parametrize("family", FAMILIES)
def test_jacobian_overlap_is_imaginary(family, rng):
    a = build_ansatz(family, 4, 3)
    theta = a.random_params(rng)
    jac = circuit_jacobian(a, theta, sample_haar_vector(16, rng))
    overlaps = jac.derivatives.conj() @ jac.output
    assert np.max(np.abs(overlaps.real)) < 1e-10


@pytest.mark.parametrize("family", FAMILIES)
def test_compiled_and_reference_paths_agree(family, rng):
    a = build_ansatz(family, 4, 3)
    theta = a.random_params(rng)
    phi = np.stack([sample_haar_vector(16, rng) for _ in range(3)], axis=1)
    fast = circuit_jacobian(a, theta, phi)
    fwd = apply_circuit(a, theta, phi)
    back = apply_circuit_adjoint(a, theta, phi)
    with kernels.numpy_backend():
        ref = circuit_jacobian(a, theta, phi)
        np.testing.assert_allclose(apply_circuit(a, theta, phi), fwd, atol=1e-13)
        np.testing.assert_allclose(apply_circuit_adjoint(a, theta, phi), back, atol=1e-13)
    np.testing.assert_allclose(fast.output, ref.output, atol=1e-13)
    np.testing.assert_allclose(fast.derivatives, ref.derivatives, atol=1e-13)


def test_generator_sets():
    def labels(gens, n):
        from dqfim.lie import PauliSum

        return [PauliSum.from_dict(g, n).to_dict() for g in gens]

    xy = labels(generator_set(build_ansatz("xy", 4, 1)), 4)
    assert xy[:4] == [{"ZIII": 1.0}, {"IZII": 1.0}, {"IIZI": 1.0}, {"IIIZ": 1.0}]
    bonds = [{"XXII": 1.0, "YYII": 1.0}, {"IIXX": 1.0, "IIYY": 1.0}, {"IXXI": 1.0, "IYYI": 1.0},
             {"XIIX": 1.0, "YIIY": 1.0}]
    assert sorted(map(sorted, map(dict.items, xy[4:]))) == sorted(map(sorted, map(dict.items, bonds)))

    ycz = labels(generator_set(build_ansatz("ycz", 3, 1)), 3)
    assert ycz[:3] == [{"YII": 1.0}, {"IYI": 1.0}, {"IIY": 1.0}]
    assert len(ycz) == 5

    he = labels(generator_set(build_ansatz("he", 2, 1)), 2)
    assert {k for g in he[:4] for k in g} == {"YI", "ZI", "IY", "IZ"}
    assert len(he) == 5


@pytest.mark.parametrize("family", FAMILIES)
def test_fixed_gate_generators_reproduce_gates(family):
    """Each fixed gate equals exp(i c H) up to a global phase for its listed generator."""
    a = build_ansatz(family, 3, 1)
    from dqfim.lie import PauliSum

    for el in a.layer:
        if not hasattr(el, "gate"):
            continue
        h = PauliSum.from_dict(dict(el.generator), 3).to_matrix()
        dense = np.stack([_dense_gate(el.gate, 3, c) for c in np.eye(8, dtype=complex).T], axis=1)
        ok = False
        for c in (np.pi / 8, np.pi / 4, -np.pi / 4, np.pi / 16 * 3):
            v = expm(1j * c * h)
            phase = np.vdot(v.reshape(-1), dense.reshape(-1)) / 8
            if abs(abs(phase) - 1) < 1e-10 and np.allclose(v * phase, dense, atol=1e-10):
                ok = True
        assert ok, el.gate.name
