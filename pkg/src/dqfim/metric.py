"""Data quantum Fisher information metric and the rank-saturation protocols.

The metric of a circuit ``U(theta)`` with respect to a set of data states is

    Q_nm = 4 Re[ tr(d_n U^+ P d_m U) - tr(d_n U^+ P U) tr(U^+ P d_m U) ]

with ``P`` the projector onto the span of the data divided by its rank. Its
numerical rank counts the independent directions in which the circuit moves
the data subspace. Maximising that rank over depth gives ``R_L``; the plateau
of ``R_L`` over the data size gives ``R_inf`` and the critical data size.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzCircuit, build_ansatz, circuit_jacobian
from .core import psd_rank, spectral_gap
from .ensembles import EnsembleSpec, sample_states

log = logging.getLogger(__name__)

RANK_REL_TOL = 1e-8
RANK_ABS_TOL = 1e-12


@dataclass
class DataProjector:
    """Orthonormal basis (columns of ``basis``) of the span of the data states."""

    basis: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def matrix(self) -> np.ndarray:
        """Dense projector; only for small dimensions and tests."""
        return self.basis @ self.basis.conj().T


def build_projector(states, tol: float = 1e-10) -> DataProjector:
    """Projector onto the span of ``states`` (columns, or a list of vectors).

    Works through the ``L x L`` Gram matrix: the nonzero spectrum of
    ``rho = L^-1 sum |psi><psi|`` equals that of ``G / L`` with
    ``G_ij = <psi_i|psi_j>``, and an eigenvector ``u`` of ``G`` maps to the
    eigenvector ``Psi u`` of ``rho``.
    """
    if isinstance(states, (list, tuple)):
        if len(states) == 0:
            raise ValueError("need at least one state")
        psi = np.column_stack([np.asarray(s, dtype=complex) for s in states])
    else:
        psi = np.asarray(states, dtype=complex)
        if psi.ndim == 1:
            psi = psi[:, None]
    if psi.shape[1] == 0:
        raise ValueError("need at least one state")
    L = psi.shape[1]
    gram = psi.conj().T @ psi / L
    evals, evecs = np.linalg.eigh(gram)
    keep = evals > tol * evals[-1]
    basis = psi @ evecs[:, keep]
    basis /= np.linalg.norm(basis, axis=0)
    # one QR pass removes residual non-orthogonality from near-degenerate data
    q, r = np.linalg.qr(basis)
    q = q * (np.sign(np.diag(r).real) + (np.diag(r).real == 0))
    return DataProjector(q, evals[keep][::-1])


@dataclass
class DQFIMMatrix:
    matrix: np.ndarray
    ansatz_id: str
    theta_hash: str
    projector_rank: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def rank(self, rel_tol: float = RANK_REL_TOL, abs_tol: float = RANK_ABS_TOL) -> int:
        return psd_rank(self.matrix, rel_tol, abs_tol)


def _theta_hash(theta) -> str:
    return hashlib.sha1(np.ascontiguousarray(theta, dtype=float).tobytes()).hexdigest()[:12]


def dqfim_from_jacobian(output: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """Metric from outputs ``U phi_k`` (``(d, B)``) and derivatives (``(M, d, B)``)."""
    B = output.shape[1]
    M = derivs.shape[0]
    flat = derivs.reshape(M, -1)
    overlap = (flat.conj() @ flat.T) / B
    # beta_n = B^-1 sum_k <d_n U phi_k | U phi_k>
    beta = np.einsum("nik,ik->n", derivs.conj(), output) / B
    q = 4.0 * (overlap - np.outer(beta, beta.conj())).real
    return 0.5 * (q + q.T)


def compute_dqfim(ansatz: AnsatzCircuit, theta, proj: DataProjector, checkpoint_stride=None) -> DQFIMMatrix:
    """The ``M x M`` metric at ``theta`` for the data subspace of ``proj``."""
    theta = np.asarray(theta, dtype=float)
    if proj.dim != ansatz.dim:
        raise ValueError(f"projector dimension {proj.dim} != circuit dimension {ansatz.dim}")
    jac = circuit_jacobian(ansatz, theta, proj.basis, checkpoint_stride=checkpoint_stride)
    q = dqfim_from_jacobian(jac.output, jac.derivatives)
    return DQFIMMatrix(q, repr(ansatz), _theta_hash(theta), proj.rank)


def effective_dimension(
    ansatz: AnsatzCircuit, theta, proj: DataProjector, rel_tol: float = RANK_REL_TOL, abs_tol: float = RANK_ABS_TOL
) -> int:
    return compute_dqfim(ansatz, theta, proj).rank(rel_tol, abs_tol)


def unitary_bound(d: int, L: int) -> int:
    """Largest possible metric rank for ``L`` generic states in dimension ``d``."""
    if d < 2 or L < 1:
        raise ValueError("need d >= 2 and L >= 1")
    if L <= d:
        return 2 * d * L - L * L - 1
    return d * d - 1


# --------------------------------------------------------------------------
# saturation protocols


class NoPlateauError(RuntimeError):
    """Raised when a rank scan does not saturate; ``curve`` holds the partial data."""

    def __init__(self, message, curve):
        super().__init__(message)
        self.curve = curve


@dataclass(frozen=True)
class RankProtocol:
    """Parameters of the depth scan.

    Attributes:
        n_theta: random parameter draws per depth (the rank is the maximum).
        plateau_window: stop after this many consecutive depth increments
            without rank change.
        linear_until: depth grows by one up to this value, then geometrically.
        growth: factor of the geometric phase.
        g_max: hard depth cap.
        n_data: dataset redraws in :func:`saturation_profile` (max rank kept).
        rel_tol, abs_tol: rank thresholds.
    """

    n_theta: int = 5
    plateau_window: int = 3
    linear_until: int = 12
    growth: float = 1.5
    g_max: int = 200
    n_data: int = 3
    rel_tol: float = RANK_REL_TOL
    abs_tol: float = RANK_ABS_TOL
    g_start: int = 1

    def depths(self):
        g = max(1, self.g_start)
        while g <= self.g_max:
            yield g
            g = g + 1 if g < self.linear_until else max(g + 1, int(round(g * self.growth)))


@dataclass
class RankEstimate:
    R: int
    M_c: int
    G_c: int
    curve: list  # (G, M, D) triples
    min_gap: float = float("inf")


def scan_depth(
    family,
    n_qubits: int,
    proj: DataProjector,
    protocol: RankProtocol,
    rng: np.random.Generator,
    record=None,
) -> RankEstimate:
    """Grow the depth until the effective dimension stops increasing.

    ``family`` is a family name or an :class:`AnsatzCircuit` whose layer is
    repeated.
    """
    base = _base_circuit(family, n_qubits)
    curve = []
    best, since_change = -1, 0
    min_gap = float("inf")
    for G in protocol.depths():
        ansatz = base.with_layers(G)
        D, D_gap = -1, 0.0
        for draw in range(protocol.n_theta):
            theta = ansatz.random_params(rng)
            q = compute_dqfim(ansatz, theta, proj).matrix
            r = psd_rank(q, protocol.rel_tol, protocol.abs_tol)
            gap = spectral_gap(q, r)
            if record is not None:
                record(G=G, M=ansatz.n_params, draw=draw, D=r, gap=gap)
            if r > D or (r == D and gap > D_gap):
                D, D_gap = r, gap
        min_gap = min(min_gap, D_gap)
        curve.append((G, ansatz.n_params, D))
        if D > best:
            best, since_change = D, 0
        else:
            since_change += 1
            if since_change >= protocol.plateau_window:
                break
    else:
        raise NoPlateauError(f"rank still growing at G={curve[-1][0]}", curve)
    if min_gap < 1e3:
        log.warning("small spectral gap %.3g in rank scan (%s, N=%d)", min_gap, base.family.value, n_qubits)
    G_c, M_c = next((g, m) for g, m, d in curve if d == best)
    return RankEstimate(best, M_c, G_c, curve, min_gap)


def _base_circuit(family, n_qubits: int) -> AnsatzCircuit:
    if isinstance(family, AnsatzCircuit):
        if family.n_qubits != n_qubits:
            raise ValueError("circuit and n_qubits disagree")
        return family.with_layers(1)
    return build_ansatz(family, n_qubits, 1)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def estimate_max_rank(
    family, n_qubits: int, spec: EnsembleSpec, L: int, protocol: RankProtocol = RankProtocol(), seed=None
) -> tuple[int, int]:
    """``(R_L, M_c)`` for one seeded draw of ``L`` training states."""
    rng = _rng(seed)
    states = sample_states(spec, L, rng)
    est = scan_depth(family, n_qubits, build_projector(states), protocol, rng)
    return est.R, est.M_c


@dataclass
class SaturationProfile:
    """Per-``L`` maximal ranks and the derived critical values."""

    records: list  # dicts with keys L, R, M_c
    R_inf: int
    L_c: int
    protocol: RankProtocol

    @property
    def R(self) -> dict:
        return {r["L"]: r["R"] for r in self.records}

    @property
    def M_c(self) -> dict:
        return {r["L"]: r["M_c"] for r in self.records}

    @property
    def R_1(self) -> int:
        return self.R[1]

    @property
    def L_c_approx(self) -> float:
        return 2.0 * self.R_inf / self.R_1 if self.R_1 else float("inf")


def saturation_profile(
    family,
    n_qubits: int,
    spec: EnsembleSpec,
    L_max: int,
    protocol: RankProtocol = RankProtocol(),
    seed=None,
    record=None,
    stop_after_plateau: int | None = None,
) -> SaturationProfile:
    """Run the depth scan for ``L = 1..L_max`` on nested training sets.

    Each of ``protocol.n_data`` redraws samples ``L_max`` states once and uses
    its first ``L`` columns for size ``L``; ``R_L`` is the maximum over redraws.
    With ``stop_after_plateau=k`` the scan over ``L`` ends early once ``R_L``
    has been unchanged for ``k`` consecutive sizes.
    """
    if L_max < 1:
        raise ValueError("L_max must be >= 1")
    ss = np.random.SeedSequence(seed if not isinstance(seed, np.random.Generator) else seed.integers(2**63))
    data_rngs = [np.random.default_rng(s) for s in ss.spawn(protocol.n_data)]
    datasets = [sample_states(spec, L_max, r) for r in data_rngs]
    records = []
    for L in range(1, L_max + 1):
        best = None
        for r_idx, (rng, states) in enumerate(zip(data_rngs, datasets)):
            proj = build_projector(states[:, :L])
            rec = None
            if record is not None:
                rec = lambda **kw: record(L=L, redraw=r_idx, **kw)  # noqa: E731
            est = scan_depth(family, n_qubits, proj, protocol, rng, rec)
            if best is None or est.R > best.R or (est.R == best.R and est.M_c < best.M_c):
                best = est
        records.append({"L": L, "R": best.R, "M_c": best.M_c, "G_c": best.G_c, "B": min(L, spec.dim), "gap": best.min_gap})
        log.info("L=%d R_L=%d M_c=%d", L, best.R, best.M_c)
        if stop_after_plateau and L > stop_after_plateau:
            tail = [r["R"] for r in records[-(stop_after_plateau + 1):]]
            if len(set(tail)) == 1:
                break
    Rs = [r["R"] for r in records]
    for i in range(1, len(Rs)):
        if Rs[i] < Rs[i - 1]:
            log.warning("R_L decreased from %d to %d at L=%d", Rs[i - 1], Rs[i], i + 1)
    R_inf = max(Rs)
    if len(Rs) >= 2 and Rs[-1] > Rs[-2]:
        raise NoPlateauError(f"R_L still growing at L={len(Rs)}", records)
    L_c = next(r["L"] for r in records if r["R"] == R_inf)
    return SaturationProfile(records, R_inf, L_c, protocol)
