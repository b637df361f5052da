"""Dense statevector kernels.

States are plain complex ``numpy`` arrays. A single state has shape ``(2**N,)``;
a batch of states is stored column-wise with shape ``(2**N, B)`` so that every
kernel in this module acts on both without special-casing.

Amplitude ordering is little-endian: qubit ``q`` is bit ``q`` of the basis
index, so qubit 0 is the least significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

NORM_TOL = 1e-12


def n_qubits_of(dim: int) -> int:
    """Return ``N`` for a Hilbert-space dimension ``2**N``."""
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    """Computational basis state ``|index>`` on ``n_qubits`` qubits."""
    dim = 1 << n_qubits
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def bits_to_index(bits) -> int:
    """Basis index for per-qubit bit values, ``bits[q]`` being qubit ``q``."""
    return sum(int(b) << q for q, b in enumerate(bits))


def normalize(psi: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(psi, axis=0)
    if np.any(nrm == 0):
        raise ValueError("cannot normalize a zero vector")
    return psi / nrm


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Return ``<a|b>`` (conjugation on ``a``)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class LocalGate:
    """A one- or two-qubit unitary acting on ``targets``.

    The matrix row/column index is built with ``targets[0]`` as the most
    significant local bit, so ``LocalGate(CNOT, (c, t))`` has control ``c``.
    """

    matrix: np.ndarray
    targets: tuple[int, ...]
    name: str = ""
    diagonal: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        arity = len(targets)
        if arity not in (1, 2):
            raise ValueError(f"gate arity must be 1 or 2, got {arity}")
        if m.shape != (1 << arity, 1 << arity):
            raise ValueError(f"matrix shape {m.shape} does not match arity {arity}")
        if len(set(targets)) != arity or min(targets) < 0:
            raise ValueError(f"invalid target qubits {targets}")
        if not np.allclose(m.conj().T @ m, np.eye(1 << arity), atol=NORM_TOL, rtol=0):
            raise ValueError(f"gate {self.name or ''} is not unitary")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", targets)
        off = m - np.diag(np.diag(m))
        object.__setattr__(self, "diagonal", np.diag(m).copy() if not off.any() else None)

    @property
    def arity(self) -> int:
        return len(self.targets)


@lru_cache(maxsize=None)
def _local_indices(n_qubits: int, targets: tuple[int, ...]) -> np.ndarray:
    """Index table ``idx[j, m]``: the m-th basis state with local pattern ``j``."""
    dim = 1 << n_qubits
    mask = 0
    for t in targets:
        mask |= 1 << t
    base = np.arange(dim)
    base = base[(base & mask) == 0]
    arity = len(targets)
    idx = np.empty((1 << arity, base.size), dtype=np.intp)
    for j in range(1 << arity):
        offset = 0
        for pos, t in enumerate(targets):
            if (j >> (arity - 1 - pos)) & 1:
                offset |= 1 << t
        idx[j] = base | offset
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=None)
def _diagonal_of(n_qubits: int, targets: tuple[int, ...], diag: tuple) -> np.ndarray:
    idx = _local_indices(n_qubits, targets)
    full = np.empty(1 << n_qubits, dtype=complex)
    for j, val in enumerate(diag):
        full[idx[j]] = val
    full.setflags(write=False)
    return full


def full_diagonal(gate: LocalGate, n_qubits: int) -> np.ndarray:
    """Full ``2**N`` diagonal of a diagonal local gate."""
    if gate.diagonal is None:
        raise ValueError("gate is not diagonal")
    return _diagonal_of(n_qubits, gate.targets, tuple(gate.diagonal.tolist()))


def apply_local_gate(state: np.ndarray, gate: LocalGate) -> np.ndarray:
    """Apply ``gate`` to a state or a column batch of states; returns a new array."""
    state = np.asarray(state)
    n = n_qubits_of(state.shape[0])
    if max(gate.targets) >= n:
        raise ValueError(f"target {max(gate.targets)} out of range for {n} qubits")
    if gate.diagonal is not None:
        diag = full_diagonal(gate, n)
        return diag * state if state.ndim == 1 else diag[:, None] * state
    idx = _local_indices(n, gate.targets)
    out = np.empty_like(state, dtype=complex)
    blocks = state[idx]
    out[idx] = np.tensordot(gate.matrix, blocks, axes=(1, 0))
    return out


def psd_rank(m: np.ndarray, rel_tol: float = 1e-8, abs_tol: float = 1e-12) -> int:
    """Numerical rank of a symmetric positive semi-definite matrix.

    Counts eigenvalues strictly above ``max(rel_tol * lambda_max, abs_tol)``.
    """
    m = np.asarray(m, dtype=float)
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.size == 0:
        return 0
    evals = np.linalg.eigvalsh(m)
    cutoff = max(rel_tol * evals[-1], abs_tol)
    return int(np.count_nonzero(evals > cutoff))


def spectral_gap(m: np.ndarray, rank: int) -> float:
    """Ratio of the smallest kept to the largest discarded eigenvalue magnitude."""
    evals = np.sort(np.linalg.eigvalsh(np.asarray(m, dtype=float)))[::-1]
    if rank <= 0 or rank >= evals.size:
        return float("inf")
    dropped = abs(evals[rank])
    with np.errstate(divide="ignore", over="ignore"):
        return float(np.float64(evals[rank - 1]) / dropped) if dropped > 0 else float("inf")


def sample_haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in ``C^dim`` from normalized complex Gaussians."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
