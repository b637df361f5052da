"""Dynamical Lie algebra of a circuit by commutator closure over Pauli strings.

A Hermitian operator is stored as a real combination of Pauli strings, which
also represents the anti-Hermitian algebra element ``i H``. Strings use the
symplectic encoding ``P = i^{|x & z|} X^x Z^z`` with bit ``q`` of ``x``/``z``
for qubit ``q``. The Hilbert-Schmidt inner product ``tr(A B) / 2**N`` is the
Euclidean product of coefficient vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzCircuit, generator_set, pauli_matrix

_POW_I = np.array([1, 1j, -1, -1j])


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a.astype(np.uint64)).astype(np.int64)


def _parse_label(label: str) -> tuple[int, int]:
    x = z = 0
    for q, ch in enumerate(label.upper()):
        if ch in "XY":
            x |= 1 << q
        if ch in "ZY":
            z |= 1 << q
        if ch not in "IXYZ":
            raise ValueError(f"invalid Pauli label {label!r}")
    return x, z


def _label(x: int, z: int, n: int) -> str:
    return "".join("IXZY"[((x >> q) & 1) | (((z >> q) & 1) << 1)] for q in range(n))


class PauliSum:
    """Real linear combination of ``N``-qubit Pauli strings.

    Build from ``{label: coeff}`` with dense labels (qubit 0 first, e.g.
    ``"XZI"``) or from the sparse words produced by :mod:`dqfim.ansatz`.
    """

    __slots__ = ("n_qubits", "xs", "zs", "coeffs")

    def __init__(self, n_qubits: int, xs, zs, coeffs):
        self.n_qubits = int(n_qubits)
        self.xs = np.asarray(xs, dtype=np.int64)
        self.zs = np.asarray(zs, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite Pauli coefficient")

    @classmethod
    def from_dict(cls, terms: dict, n_qubits: int) -> "PauliSum":
        acc: dict[tuple[int, int], float] = {}
        for key, c in terms.items():
            if isinstance(key, str):
                if len(key) != n_qubits:
                    raise ValueError(f"label {key!r} has length {len(key)}, expected {n_qubits}")
                xz = _parse_label(key)
            else:
                x = z = 0
                for q, letter in key:
                    if q >= n_qubits:
                        raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
                    x |= (letter in "XY") << q
                    z |= (letter in "ZY") << q
                xz = (x, z)
            acc[xz] = acc.get(xz, 0.0) + float(c)
        keys = [k for k, v in acc.items() if v != 0.0 and k != (0, 0)]
        return cls(
            n_qubits,
            [k[0] for k in keys],
            [k[1] for k in keys],
            [acc[k] for k in keys],
        )

    def to_dict(self) -> dict[str, float]:
        return {_label(int(x), int(z), self.n_qubits): float(c) for x, z, c in zip(self.xs, self.zs, self.coeffs)}

    @property
    def keys(self) -> np.ndarray:
        return (self.xs << self.n_qubits) | self.zs

    def __len__(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs * factor)

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for label, c in self.to_dict().items():
            w = tuple((q, ch) for q, ch in enumerate(label) if ch != "I")
            out += c * pauli_matrix(w, self.n_qubits)
        return out

    def __repr__(self):
        terms = " + ".join(f"{c:.4g}*{lbl}" for lbl, c in sorted(self.to_dict().items()))
        return f"PauliSum({terms or '0'})"


def _combine(n: int, keys: np.ndarray, vals: np.ndarray, drop_tol: float = 0.0) -> PauliSum:
    if keys.size == 0:
        return PauliSum(n, [], [], [])
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.zeros(uniq.size)
    np.add.at(summed, inv, vals)
    scale = np.max(np.abs(summed)) if summed.size else 0.0
    keep = np.abs(summed) > max(drop_tol * scale, 0.0)
    uniq, summed = uniq[keep], summed[keep]
    mask = (1 << n) - 1
    return PauliSum(n, uniq >> n, uniq & mask, summed)


def pauli_commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """Hermitian ``C`` with ``[A, B] = i C``.

    Commuting string pairs drop out; an anticommuting pair contributes
    ``+-2`` times the product string.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("operands act on different qubit counts")
    n = a.n_qubits
    if len(a) == 0 or len(b) == 0:
        return PauliSum(n, [], [], [])
    x1, z1 = a.xs[:, None], a.zs[:, None]
    x2, z2 = b.xs[None, :], b.zs[None, :]
    anti = (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2 == 1
    if not anti.any():
        return PauliSum(n, [], [], [])
    x3, z3 = x1 ^ x2, z1 ^ z2
    y1, y2, y3 = _popcount(x1 & z1), _popcount(x2 & z2), _popcount(x3 & z3)
    k12 = (y1 + y2 - y3 + 2 * _popcount(z1 & x2)) % 4
    # for anticommuting strings [P1, P2] = 2 P1 P2 = 2 i^k12 P3 and C = 2 i^(k12-1) P3
    factor = 2.0 * _POW_I[(k12 - 1) % 4].real
    vals = (a.coeffs[:, None] * b.coeffs[None, :]) * factor
    keys = (np.broadcast_to(x3, anti.shape) << n) | np.broadcast_to(z3, anti.shape)
    return _combine(n, keys[anti], vals[anti], drop_tol=1e-14)


@dataclass
class OperatorSpan:
    """Orthonormal (Hilbert-Schmidt) Pauli-sum basis of a Lie algebra."""

    basis: list = field(default_factory=list)
    truncated: bool = False

    @property
    def dim(self) -> int:
        return len(self.basis)


class _Orthonormalizer:
    """Modified Gram-Schmidt over a growing set of Pauli-string coordinates."""

    def __init__(self, n_qubits: int, tol: float):
        self.n = n_qubits
        self.tol = tol
        self.col: dict[int, int] = {}
        self.rows = np.zeros((0, 0))

    def _dense(self, p: PauliSum) -> np.ndarray:
        for k in p.keys.tolist():
            if k not in self.col:
                self.col[k] = len(self.col)
        ncol = len(self.col)
        if self.rows.shape[1] < ncol:
            grow = max(ncol, 2 * self.rows.shape[1])
            self.rows = np.pad(self.rows, ((0, 0), (0, grow - self.rows.shape[1])))
        v = np.zeros(self.rows.shape[1])
        v[[self.col[k] for k in p.keys.tolist()]] = p.coeffs
        return v

    def admit(self, p: PauliSum) -> PauliSum | None:
        nrm = p.norm()
        if nrm <= self.tol:
            return None
        v = self._dense(p) / nrm
        for _ in range(2):
            if self.rows.shape[0]:
                v -= self.rows.T @ (self.rows @ v)
        res = np.linalg.norm(v)
        if res <= self.tol:
            return None
        v /= res
        self.rows = np.vstack([self.rows, v])
        inv = np.empty(len(self.col), dtype=np.int64)
        for k, j in self.col.items():
            inv[j] = k
        nz = np.flatnonzero(np.abs(v[: len(self.col)]) > 1e-15)
        keys = inv[nz]
        return _combine(self.n, keys, v[nz])


def lie_closure(generators, cap: int | None = None, tol: float = 1e-10, n_qubits: int | None = None) -> OperatorSpan:
    """Span of the generators under repeated commutators.

    ``generators`` are :class:`PauliSum` objects or ``{label/word: coeff}``
    dicts (then ``n_qubits`` is required). The frontier is a FIFO queue of newly
    admitted elements, each commuted with the whole current basis. Stops early
    with ``truncated=True`` when the dimension reaches ``cap``.
    """
    gens = []
    for g in generators:
        if not isinstance(g, PauliSum):
            if n_qubits is None:
                raise ValueError("n_qubits is required for dict generators")
            g = PauliSum.from_dict(g, n_qubits)
        gens.append(g)
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].n_qubits
    if any(g.n_qubits != n for g in gens):
        raise ValueError("generators act on different qubit counts")
    if cap is None:
        cap = 4**n
    if cap < 1:
        raise ValueError("cap must be >= 1")

    ortho = _Orthonormalizer(n, tol)
    span = OperatorSpan()
    frontier = []
    for g in gens:
        b = ortho.admit(g)
        if b is not None:
            span.basis.append(b)
            frontier.append(b)
            if span.dim >= cap:
                span.truncated = True
                return span
    head = 0
    while head < len(frontier):
        a = frontier[head]
        head += 1
        for other in list(span.basis):
            c = pauli_commutator(a, other)
            if len(c) == 0:
                continue
            b = ortho.admit(c)
            if b is None:
                continue
            span.basis.append(b)
            frontier.append(b)
            if span.dim >= cap:
                span.truncated = True
                return span
    return span


def ansatz_closure(ansatz: AnsatzCircuit, cap: int | None = None, tol: float = 1e-10) -> OperatorSpan:
    """Lie closure of one layer's generators (rotations and fixed gates)."""
    return lie_closure(generator_set(ansatz), cap=cap, tol=tol, n_qubits=ansatz.n_qubits)


def check_rank_bound(R: int, span: OperatorSpan) -> bool:
    """Whether a measured rank respects the Lie-algebra bound ``R <= dim g``."""
    if span.truncated:
        raise ValueError("closure was truncated; the bound is not certified")
    return R <= span.dim


def dense_closure_dim(generators: list[np.ndarray], tol: float = 1e-9) -> int:
    """Reference closure on dense anti-Hermitian matrices (small systems only)."""
    dim = generators[0].shape[0]
    basis: list[np.ndarray] = []

    def admit(m):
        v = m.reshape(-1)
        v = np.concatenate([v.real, v.imag])
        nrm = np.linalg.norm(v)
        if nrm < tol:
            return None
        v = v / nrm
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        r = np.linalg.norm(v)
        if r < tol:
            return None
        basis.append(v / r)
        return m / nrm

    mats = []
    for g in generators:
        m = admit(1j * g)
        if m is not None:
            mats.append(m)
    head = 0
    while head < len(mats):
        a = mats[head]
        head += 1
        for b in list(mats):
            m = admit(a @ b - b @ a)
            if m is not None:
                mats.append(m)
                if len(mats) > dim * dim:
                    raise RuntimeError("closure exceeded matrix dimension")
    return len(mats)
