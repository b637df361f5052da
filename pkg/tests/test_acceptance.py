"""Acceptance checks, one test per numbered criterion.

Rank results come from the default :class:`RankProtocol`; training results
from the default BFGS preset. Cached profiles are shared between criteria.
"""
import functools
import math

import numpy as np
import pytest

from dqfim import experiments as ex
from dqfim.ansatz import apply_circuit, build_ansatz, circuit_jacobian
from dqfim.ensembles import EnsembleSpec, build_training_set, particle_number_expectation, sample_states
from dqfim.lie import ansatz_closure
from dqfim.metric import (
    RankProtocol,
    build_projector,
    compute_dqfim,
    dqfim_from_jacobian,
    saturation_profile,
    scan_depth,
    unitary_bound,
)
from dqfim.training import cost_train, grad_cost_train

from oracles import isometry_fidelity, state_qfim

FAMILIES = ["he", "xy", "xy_open", "xxz", "ycz"]


@functools.cache
def profile(family, n, ensemble, l_max, seed=0):
    return saturation_profile(family, n, EnsembleSpec.parse(ensemble, n), l_max, RankProtocol(), seed=seed)


def sweep_config(**kw):
    return ex.ExperimentConfig(workers=1, **kw)


def seeds_below(rows, threshold):
    return sum(float(r["C_test"]) < threshold for r in rows)


# 1 -----------------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("B", [1, 2, 4])
def test_criterion_01_dqfim_matches_fidelity_expansion(family, n, B):
    rng = np.random.default_rng(1000 * n + B)
    a = build_ansatz(family, n, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", n), B, rng))
    assert proj.rank == B
    q = compute_dqfim(a, theta, proj).matrix
    h = 1e-3
    eye = np.eye(a.n_params)

    def loss(v):
        # even part of 1 - |tr(U^+ Pi U(theta + v))|^2, equal to v.Q.v / 4 + O(h^4)
        f = isometry_fidelity(a, theta, v, proj.basis, apply_circuit)
        g = isometry_fidelity(a, theta, -v, proj.basis, apply_circuit)
        return 1 - 0.5 * (f + g)

    diag = np.array([4 * loss(h * eye[k]) / h**2 for k in range(a.n_params)])
    est = np.diag(diag)
    for k in range(a.n_params):
        for m in range(k + 1, a.n_params):
            est[k, m] = est[m, k] = 2 * loss(h * (eye[k] + eye[m])) / h**2 - 0.5 * (diag[k] + diag[m])
    assert np.max(np.abs(est - q)) < 1e-5


# 2 -----------------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("n", [2, 3])
def test_criterion_02_single_state_is_qfim(family, n):
    rng = np.random.default_rng(7 + n)
    a = build_ansatz(family, n, 3)
    theta = a.random_params(rng)
    psi = sample_states(EnsembleSpec.parse("haar", n), 1, rng)[:, 0]
    q = compute_dqfim(a, theta, build_projector([psi])).matrix
    assert np.max(np.abs(q - state_qfim(a, theta, psi))) < 1e-10


# 3 -----------------------------------------------------------------------


def test_criterion_03_unitary_bound_saturation():
    p2 = profile("he", 2, "haar", 5)
    assert [p2.R[L] for L in range(1, 6)] == [6, 11, 14, 15, 15]
    assert [unitary_bound(4, L) for L in range(1, 6)] == [6, 11, 14, 15, 15]
    p3 = profile("he", 3, "haar", 10)
    assert p3.R[1] == 14 and p3.R[8] == 63
    assert all(p3.R[L] == unitary_bound(8, L) for L in range(1, 11))


# 4 -----------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 6, 8])
def test_criterion_04_xy_sector_values(n):
    p = profile("xy", n, "sector:1", n + 2)
    assert (p.R_1, p.R_inf, p.L_c) == (2 * n - 2, n * n - 1, n)


def test_criterion_04_xy_product_values():
    n = 6
    p = profile("xy", n, "product", 5)
    assert (p.R_1, p.R_inf, p.L_c) == (2 * n * n - 3 * n + 2, 2 * n * n - 1, 2) == (56, 71, 2)


# 5 -----------------------------------------------------------------------


def test_criterion_05_xxz_product_values():
    p = profile("xxz", 4, "product", 7)
    assert (p.R_1, p.R_inf, p.L_c) == (24, 51, 5)


def test_criterion_05_xy_open_values_and_training():
    p = profile("xy_open", 4, "product", 4)
    assert (p.R_1, p.R_inf, p.L_c) == (16, 16, 1)
    K = build_ansatz("xy_open", 4, 1).params_per_layer
    G = math.ceil(2 * p.M_c[1] / K)
    assert G * K >= p.M_c[1]
    cfg = sweep_config(family="xy_open", n_qubits=4, ensemble="product", g_grid=(G,), l_grid=(1,), reps=10, seed=5)
    rows = ex.run_cells(cfg, ex.cells(cfg))
    assert seeds_below(rows, 1e-2) >= 8


# 6 -----------------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_criterion_06_rank_below_lie_dimension(family, n):
    d = 2**n
    # the full-basis projector gives the largest rank over all training sets
    full = build_projector(np.eye(d, dtype=complex))
    R_inf = scan_depth(family, n, full, RankProtocol(), np.random.default_rng(n)).R
    span = ansatz_closure(build_ansatz(family, n, 1))
    assert not span.truncated
    assert R_inf <= span.dim
    if family == "he":
        assert span.dim == 4**n - 1 == R_inf


# 7 -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def phase_diagram(tmp_path_factory):
    cfg = sweep_config(
        experiment_id="phase", family="he", n_qubits=4, ensemble="haar",
        m_grid=(32, 64, 128, 192, 256, 320), l_grid=(1, 2, 4, 8, 16, 20), reps=10, seed=2024,
        output=str(tmp_path_factory.mktemp("phase")),
    )
    out = ex.run_sweep(cfg)
    assert out.success_fraction == 1.0
    return cfg, out


def _within_one_step(grid, i_star, target):
    lo = grid[i_star - 1] if i_star > 0 else -math.inf
    hi = grid[i_star + 1] if i_star + 1 < len(grid) else math.inf
    return lo <= target <= hi


def test_criterion_07a_training_transition(phase_diagram):
    cfg, out = phase_diagram
    R = {int(k): v for k, v in out.overlay["R_L"].items()}
    c_train = ex.cell_means(out.rows, "C_train")
    for L in cfg.l_grid:
        for M in cfg.m_grid:
            if M >= 1.1 * R[L]:
                assert c_train[(M, L)] < 1e-3, (M, L)
        under = [c_train[(M, L)] for M in cfg.m_grid if M <= 0.5 * R[L]]
        if under:
            assert max(under) > 1e-2, L


def test_criterion_07b_generalization_corner(phase_diagram):
    cfg, out = phase_diagram
    c_test = ex.cell_means(out.rows, "C_test")
    good = {key for key, v in c_test.items() if v < 1e-2}
    assert good
    assert all(M >= 255 and L >= 16 for M, L in good)


def test_criterion_07c_steps_peak_at_boundaries(phase_diagram):
    cfg, out = phase_diagram
    M_c = {int(k): v for k, v in out.overlay["M_c"].items()}
    R = {int(k): v for k, v in out.overlay["R_L"].items()}
    E = ex.cell_means(out.rows, "E")
    Ms, Ls = cfg.m_grid, cfg.l_grid
    for L in Ls:
        row = [E[(M, L)] for M in Ms]
        assert _within_one_step(Ms, int(np.argmax(row)), R[L]), (L, row, M_c[L])
    L_c = out.overlay["L_c"]
    for M in Ms:
        if M >= out.overlay["R_inf"]:
            col = [E[(M, L)] for L in Ls]
            assert _within_one_step(Ls, int(np.argmax(col)), L_c), (M, col)


# 8 -----------------------------------------------------------------------


def test_criterion_08_generalization_scaling(tmp_path):
    n = 8
    p = profile("xy", n, "sector:1", n + 2)
    K = build_ansatz("xy", n, 1).params_per_layer
    G = math.ceil(1.5 * max(p.M_c.values()) / K)
    cfg = sweep_config(
        experiment_id="scaling", family="xy", n_qubits=n, ensemble="sector:1", g_grid=(G,),
        l_grid=tuple(range(n + 1)), reps=10, seed=8, overlay_l_max=n + 2, output=str(tmp_path),
    )
    out = ex.run_sweep(cfg)
    assert out.overlay["M_c"] == {str(k): v for k, v in p.M_c.items()}
    base = out.overlay["C_test_baseline"]
    c_test = ex.cell_means(out.rows, "C_test")
    for L in cfg.l_grid:
        ratio = c_test[(G * K, L)] / base
        assert abs(ratio - (1 - (L / n) ** 2)) < 0.1, (L, ratio)


# 9 -----------------------------------------------------------------------


def test_criterion_09_out_of_distribution():
    n = 6
    p = profile("xy", n, "product", 5)
    K = build_ansatz("xy", n, 1).params_per_layer
    G = math.ceil(1.3 * p.M_c[2] / K)
    common = dict(family="xy", n_qubits=n, g_grid=(G,), l_grid=(2,), reps=10, seed=9)
    product = ex.run_cells(cfg := sweep_config(ensemble="product", test_ensemble="sector:1", **common), ex.cells(cfg))
    assert seeds_below(product, 1e-2) >= 8
    same = ex.run_cells(cfg := sweep_config(ensemble="product", **common), ex.cells(cfg))
    assert seeds_below(same, 1e-2) >= 8
    sector = ex.run_cells(cfg := sweep_config(ensemble="sector:1", **common), ex.cells(cfg))
    assert sum(float(r["C_test"]) > 0.05 for r in sector) >= 8


# 10 ----------------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES)
def test_criterion_10_properties(family, tmp_path):
    rng = np.random.default_rng(10)
    n = 3
    a = build_ansatz(family, n, 2)
    theta = a.random_params(rng)
    proj = build_projector(sample_states(EnsembleSpec.parse("haar", n), 2, rng))

    # gauge invariance and positivity
    jac = circuit_jacobian(a, theta, proj.basis)
    q = dqfim_from_jacobian(jac.output, jac.derivatives)
    ph = np.exp(0.7j)
    assert np.max(np.abs(q - dqfim_from_jacobian(ph * jac.output, ph * jac.derivatives))) < 1e-10
    assert np.linalg.eigvalsh(q)[0] >= -1e-9

    # gradient against central differences
    S = build_training_set(a, a.random_params(rng), EnsembleSpec.parse("haar", n), 3, rng)
    g = grad_cost_train(a, theta, S)
    for k in range(a.n_params):
        e = np.zeros(a.n_params)
        e[k] = 1e-5
        fd = (cost_train(a, theta + e, S) - cost_train(a, theta - e, S)) / 2e-5
        assert abs(fd - g[k]) < 1e-6

    # particle number for the symmetric families
    if family in ("xy", "xy_open", "xxz"):
        psi = sample_states(EnsembleSpec.parse("haar", n), 4, rng)
        out = apply_circuit(a, theta, psi)
        for k in range(4):
            assert abs(particle_number_expectation(out[:, k]) - particle_number_expectation(psi[:, k])) < 1e-10

    # byte-identical sweep reruns
    cfg = sweep_config(family=family, n_qubits=2, g_grid=(2,), l_grid=(1, 2), reps=2, seed=3, n_test=10,
                       overlay=False, output=str(tmp_path / "a"))
    first = ex.run_sweep(cfg).csv_path.read_bytes()
    cfg = ex.ExperimentConfig(**{**cfg.__dict__, "output": str(tmp_path / "b")})
    assert ex.run_sweep(cfg).csv_path.read_bytes() == first


# trend check across sizes --------------------------------------------------


def test_steps_grow_with_system_size():
    sizes = np.array([4, 6, 8])
    means = []
    for n in sizes:
        G = math.ceil(2 * (n * n - 1) / n)
        cfg = sweep_config(family="xy", n_qubits=int(n), ensemble="sector:1", g_grid=(G,), l_grid=(2 * int(n),),
                           reps=10, seed=4, convergence_threshold=1e-3, n_test=20)
        rows = ex.run_cells(cfg, ex.cells(cfg))
        assert all(r["converged"] for r in rows)
        means.append(np.mean([r["E"] for r in rows]))
    means = np.array(means)
    assert np.all(np.diff(means) > 0)
    A = np.c_[np.ones(3), sizes**2]
    fit = A @ np.linalg.lstsq(A, means, rcond=None)[0]
    r2 = 1 - np.sum((means - fit) ** 2) / np.sum((means - means.mean()) ** 2)
    assert r2 > 0.9
