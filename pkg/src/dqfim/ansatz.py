"""Layered parameterized circuit families and their exact parameter derivatives.

Every parameterized element is a Pauli-string rotation ``exp(-i theta P)`` with
the bare Pauli ``P`` (eigenvalues +-1, no factor 1/2), so a parameter has
period ``2 pi``. A circuit is ``G`` repetitions of a fixed one-layer program of
``K`` rotations and fixed entangling gates; parameter ``k*K + j`` belongs to the
``j``-th rotation of layer ``k``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .core import LocalGate, apply_local_gate, full_diagonal, n_qubits_of

_S = 1 / np.sqrt(2)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SQRT_CZ = np.diag([1, 1, 1, 1j]).astype(complex)
# exp(i pi/8 (XX + YY))
SQRT_ISWAP = np.array(
    [[1, 0, 0, 0], [0, _S, 1j * _S, 0], [0, 1j * _S, _S, 0], [0, 0, 0, 1]], dtype=complex
)
SQRT_ISWAP_Z = SQRT_CZ @ SQRT_ISWAP


class Family(str, enum.Enum):
    HE = "he"
    XY_PERIODIC = "xy"
    XY_OPEN = "xy_open"
    XXZ = "xxz"
    Y_CZ = "ycz"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"xy_periodic": "xy", "y_cz": "ycz", "hardware_efficient": "he"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown ansatz family {value!r} (expected one of {names})") from None


# A Pauli word is a tuple of (qubit, letter) pairs sorted by qubit, letters in "XYZ".
PauliWord = tuple


def word(*pairs) -> PauliWord:
    """Build a Pauli word from ``(qubit, letter)`` pairs, e.g. ``word((0, "Z"), (1, "X"))``."""
    out = {}
    for q, letter in pairs:
        letter = letter.upper()
        if letter not in "XYZ" or len(letter) != 1:
            raise ValueError(f"invalid Pauli letter {letter!r}")
        if q in out:
            raise ValueError(f"qubit {q} repeated in Pauli word")
        out[int(q)] = letter
    return tuple(sorted(out.items()))


def word_label(w: PauliWord, n_qubits: int) -> str:
    """Dense label with qubit 0 first, e.g. ``"ZIX"``."""
    chars = ["I"] * n_qubits
    for q, letter in w:
        chars[q] = letter
    return "".join(chars)


def pauli_action(w: PauliWord, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(source, phase)`` with ``(P psi)[x] = phase[x] * psi[source[x]]``."""
    dim = 1 << n_qubits
    x = np.arange(dim)
    flip = 0
    for q, letter in w:
        if letter in "XY":
            flip |= 1 << q
    source = x ^ flip
    phase = np.ones(dim, dtype=complex)
    for q, letter in w:
        bit = (source >> q) & 1
        if letter == "Y":
            phase *= np.where(bit == 0, 1j, -1j)
        elif letter == "Z":
            phase *= np.where(bit == 0, 1.0, -1.0)
    return source, phase


def pauli_matrix(w: PauliWord, n_qubits: int) -> np.ndarray:
    source, phase = pauli_action(w, n_qubits)
    dim = 1 << n_qubits
    m = np.zeros((dim, dim), dtype=complex)
    m[np.arange(dim), source] = phase
    return m


@dataclass(frozen=True)
class Rotation:
    """``exp(-i theta P)`` driven by the layer-local parameter slot ``slot``."""

    generator: PauliWord
    slot: int


@dataclass(frozen=True)
class Fixed:
    gate: LocalGate
    # Hermitian generator as {word: coeff}; the gate equals exp(i c H) up to phase.
    generator: tuple


class _Compiled:
    """Per-element numerical kernels for one qubit count."""

    def __init__(self, layer: tuple, n_qubits: int):
        self.kernels = []
        for el in layer:
            if isinstance(el, Rotation):
                source, phase = pauli_action(el.generator, n_qubits)
                is_diag = bool(np.all(source == np.arange(source.size)))
                self.kernels.append(("rot", el.slot, is_diag, source, phase))
            else:
                g = el.gate
                if g.diagonal is not None:
                    d = full_diagonal(g, n_qubits)
                    self.kernels.append(("diag", d, d.conj()))
                else:
                    adj = LocalGate(g.matrix.conj().T, g.targets, g.name + "^dag")
                    self.kernels.append(("gate", g, adj))
        self.n_qubits = n_qubits

    @cached_property
    def table(self) -> kernels.LayerTable:
        return kernels.LayerTable(self.kernels, self.n_qubits)


def _bcast(vec, psi):
    return vec if psi.ndim == 1 else vec[:, None]


def _apply_pauli(kernel, psi):
    _, _, is_diag, source, phase = kernel
    if is_diag:
        return _bcast(phase, psi) * psi
    return _bcast(phase, psi) * psi[source]


def _apply_rotation(kernel, theta, psi, adjoint=False):
    _, _, is_diag, source, phase = kernel
    s = -np.sin(theta) if adjoint else np.sin(theta)
    c = np.cos(theta)
    if is_diag:
        # phase is real +-1 here
        return _bcast(c - 1j * s * phase, psi) * psi
    return c * psi - 1j * s * (_bcast(phase, psi) * psi[source])


def _apply_fixed(kernel, psi, adjoint=False):
    if kernel[0] == "diag":
        d = kernel[2] if adjoint else kernel[1]
        return _bcast(d, psi) * psi
    return apply_local_gate(psi, kernel[2] if adjoint else kernel[1])


@dataclass(frozen=True)
class AnsatzCircuit:
    """``G`` repetitions of a one-layer program with ``K`` rotations.

    Attributes:
        family: circuit family tag.
        n_qubits: number of qubits ``N``.
        n_layers: number of layers ``G``.
        layer: the one-layer program, a tuple of :class:`Rotation` and :class:`Fixed`.
    """

    family: Family
    n_qubits: int
    n_layers: int
    layer: tuple

    def __post_init__(self):
        slots = sorted(el.slot for el in self.layer if isinstance(el, Rotation))
        if slots != list(range(len(slots))):
            raise ValueError("rotation slots must enumerate 0..K-1 exactly once")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")

    @property
    def params_per_layer(self) -> int:
        return sum(isinstance(el, Rotation) for el in self.layer)

    @property
    def n_params(self) -> int:
        return self.n_layers * self.params_per_layer

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def fixed_gates_per_layer(self) -> int:
        return sum(isinstance(el, Fixed) for el in self.layer)

    @cached_property
    def _compiled(self) -> _Compiled:
        return _Compiled(self.layer, self.n_qubits)

    def with_layers(self, n_layers: int) -> "AnsatzCircuit":
        return AnsatzCircuit(self.family, self.n_qubits, n_layers, self.layer)

    def program(self):
        """Yield ``(kernel, param_index or None)`` over the whole circuit in order."""
        K = self.params_per_layer
        kernels = self._compiled.kernels
        for g in range(self.n_layers):
            for kern in kernels:
                if kern[0] == "rot":
                    yield kern, g * K + kern[1]
                else:
                    yield kern, None

    def random_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, self.n_params)

    def __repr__(self):
        return (
            f"AnsatzCircuit({self.family.value}, N={self.n_qubits}, G={self.n_layers}, "
            f"K={self.params_per_layer}, M={self.n_params})"
        )


def _ring_bonds(n: int, periodic: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds in brickwork order: even bonds, then odd bonds.

    The wrap bond ``(n-1, 0)`` closes the odd sublayer for even ``n`` and is
    appended last for odd ``n``. The ordering is not cosmetic: for the XXZ gate
    the achievable metric rank depends on it.
    """
    bonds = [(k, k + 1) for k in range(0, n - 1, 2)]
    bonds += [(k, k + 1) for k in range(1, n - 1, 2)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    return bonds


def _two_qubit_generator(a: int, b: int, kind: str) -> tuple:
    """Traceless Hermitian generator (as sorted (word, coeff) pairs) of a fixed gate."""
    terms: dict = {}
    if kind in ("iswap", "iswapz"):
        terms[word((a, "X"), (b, "X"))] = 1.0
        terms[word((a, "Y"), (b, "Y"))] = 1.0
    if kind in ("cz", "iswapz"):
        terms[word((a, "Z"), (b, "Z"))] = terms.get(word((a, "Z"), (b, "Z")), 0.0) + 1.0
        terms[word((a, "Z"))] = -1.0
        terms[word((b, "Z"))] = -1.0
    if kind == "cnot":
        terms[word((a, "Z"), (b, "X"))] = 1.0
        terms[word((a, "Z"))] = -1.0
        terms[word((b, "X"))] = -1.0
    return tuple(sorted(terms.items()))


def build_ansatz(family, n_qubits: int, n_layers: int) -> AnsatzCircuit:
    """Construct one of the circuit families.

    Layer content (qubits indexed from 0):

    * ``he``: ``R_y`` then ``R_z`` on every qubit, then CNOT(k, k+1) for k < N-1.
    * ``xy``: ``R_z`` on every qubit, then sqrt(iSWAP) on the ring bonds in
      brickwork order (even bonds, odd bonds, wrap bond (N-1, 0)).
    * ``xy_open``: as ``xy`` without the wrap bond.
    * ``xxz``: as ``xy`` with sqrt(CZ) sqrt(iSWAP) on every ring bond.
    * ``ycz``: ``R_y`` on every qubit, then CZ(k, k+1) for k < N-1.
    """
    fam = Family.parse(family)
    if fam is Family.CUSTOM:
        raise ValueError("use custom_ansatz() for custom generator lists")
    n = int(n_qubits)
    min_n = 1 if fam is Family.HE else 2
    if n < min_n:
        raise ValueError(f"family {fam.value} needs at least {min_n} qubits, got {n}")
    layer: list = []
    if fam is Family.HE:
        for q in range(n):
            layer.append(Rotation(word((q, "Y")), 2 * q))
            layer.append(Rotation(word((q, "Z")), 2 * q + 1))
        for k in range(n - 1):
            layer.append(Fixed(LocalGate(CNOT, (k, k + 1), "CNOT"), _two_qubit_generator(k, k + 1, "cnot")))
    elif fam in (Family.XY_PERIODIC, Family.XY_OPEN, Family.XXZ):
        for q in range(n):
            layer.append(Rotation(word((q, "Z")), q))
        periodic = fam is not Family.XY_OPEN
        mat, kind, name = (
            (SQRT_ISWAP_Z, "iswapz", "sqrtISWAPz") if fam is Family.XXZ else (SQRT_ISWAP, "iswap", "sqrtISWAP")
        )
        for a, b in _ring_bonds(n, periodic):
            layer.append(Fixed(LocalGate(mat, (a, b), name), _two_qubit_generator(a, b, kind)))
    elif fam is Family.Y_CZ:
        for q in range(n):
            layer.append(Rotation(word((q, "Y")), q))
        for k in range(n - 1):
            layer.append(Fixed(LocalGate(CZ, (k, k + 1), "CZ"), _two_qubit_generator(k, k + 1, "cz")))
    return AnsatzCircuit(fam, n, int(n_layers), tuple(layer))


def custom_ansatz(n_qubits: int, n_layers: int, generators) -> AnsatzCircuit:
    """A circuit whose layer is one rotation per Pauli word in ``generators``.

    Used for small analytic checks, e.g. ``custom_ansatz(1, 2, [word((0, "Z"))])``.
    """
    layer = tuple(Rotation(w, j) for j, w in enumerate(generators))
    return AnsatzCircuit(Family.CUSTOM, int(n_qubits), int(n_layers), layer)


def _check(ansatz: AnsatzCircuit, theta, state):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != ansatz.dim or state.ndim > 2:
        raise ValueError(f"state shape {state.shape} incompatible with dimension {ansatz.dim}")
    return theta, state


def apply_circuit(ansatz: AnsatzCircuit, theta, state) -> np.ndarray:
    """Return ``U(theta) |state>``; ``state`` may be a ``(2**N, B)`` batch."""
    theta, psi = _check(ansatz, theta, state)
    if kernels.enabled():
        return kernels.forward(ansatz._compiled.table, ansatz.n_layers, ansatz.params_per_layer, theta, psi)
    for kern, n in ansatz.program():
        if n is None:
            psi = _apply_fixed(kern, psi)
        else:
            psi = _apply_rotation(kern, theta[n], psi)
    return psi


def apply_circuit_adjoint(ansatz: AnsatzCircuit, theta, state) -> np.ndarray:
    """Return ``U(theta)^dagger |state>``."""
    theta, psi = _check(ansatz, theta, state)
    if kernels.enabled():
        return kernels.forward(
            ansatz._compiled.table, ansatz.n_layers, ansatz.params_per_layer, theta, psi, adjoint=True
        )
    for kern, n in reversed(list(ansatz.program())):
        if n is None:
            psi = _apply_fixed(kern, psi, adjoint=True)
        else:
            psi = _apply_rotation(kern, theta[n], psi, adjoint=True)
    return psi


def circuit_unitary(ansatz: AnsatzCircuit, theta) -> np.ndarray:
    """Dense ``2**N x 2**N`` matrix of ``U(theta)``."""
    return apply_circuit(ansatz, theta, np.eye(ansatz.dim, dtype=complex))


@dataclass
class JacobianBundle:
    """Output ``U|phi>`` and the stacked derivatives ``d_n U |phi>``.

    ``derivatives`` has shape ``(M,) + output.shape``.
    """

    output: np.ndarray
    derivatives: np.ndarray


def circuit_jacobian(ansatz: AnsatzCircuit, theta, state, checkpoint_stride: int | None = None) -> JacobianBundle:
    """Exact derivatives ``d_n U(theta)|state>`` for all parameters.

    The compiled path creates each derivative right after its rotation and
    carries it through the rest of the circuit, which costs ``O(M * gates)``
    batch updates and wins whenever the batch is narrow. The numpy path (used
    when ``checkpoint_stride`` is given or compilation is disabled): a forward sweep stores the state right after each rotation; a backward sweep
    carries the adjoint of the remaining circuit as a dense matrix, so the total
    work is linear in the number of gates. With ``checkpoint_stride=s`` only
    every ``s``-th forward state is kept and segments are recomputed during the
    backward sweep.
    """
    theta, phi = _check(ansatz, theta, state)
    if kernels.enabled() and checkpoint_stride is None:
        out, derivs = kernels.jacobian(ansatz._compiled.table, ansatz.n_layers, ansatz.params_per_layer, theta, phi)
        return JacobianBundle(out, derivs)
    prog = list(ansatz.program())
    n_ops = len(prog)
    stride = n_ops if checkpoint_stride is None else max(1, int(checkpoint_stride))

    # checkpoints[p] = state before op p
    checkpoints = {}
    psi = phi
    for p, (kern, n) in enumerate(prog):
        if p % stride == 0:
            checkpoints[p] = psi
        psi = _apply_fixed(kern, psi) if n is None else _apply_rotation(kern, theta[n], psi)
    output = psi

    derivs = np.empty((ansatz.n_params,) + phi.shape, dtype=complex)
    tail_adj = np.eye(ansatz.dim, dtype=complex)  # (ops after p)^dagger
    seg_start, seg_states = None, None
    for p in range(n_ops - 1, -1, -1):
        kern, n = prog[p]
        if n is not None:
            start = (p // stride) * stride
            if start != seg_start:
                seg_start, seg_states = start, []
                s = checkpoints[start]
                for q in range(start, min(start + stride, n_ops)):
                    k2, n2 = prog[q]
                    s = _apply_fixed(k2, s) if n2 is None else _apply_rotation(k2, theta[n2], s)
                    seg_states.append(s)
            after = seg_states[p - start]
            derivs[n] = tail_adj.conj().T @ (-1j * _apply_pauli(kern, after))
        if p > 0:
            tail_adj = (
                _apply_fixed(kern, tail_adj, adjoint=True)
                if n is None
                else _apply_rotation(kern, theta[n], tail_adj, adjoint=True)
            )
    return JacobianBundle(output, derivs)


def generator_set(ansatz: AnsatzCircuit) -> list[dict]:
    """One layer's Hermitian generators as ``{word: coeff}`` Pauli sums.

    Rotation generators come first (one Pauli word each), then the generators of
    the fixed entangling gates in program order.
    """
    gens = [{el.generator: 1.0} for el in ansatz.layer if isinstance(el, Rotation)]
    gens += [dict(el.generator) for el in ansatz.layer if isinstance(el, Fixed)]
    return gens


def particle_number_operator_diag(n_qubits: int) -> np.ndarray:
    x = np.arange(1 << n_qubits)
    return np.array([bin(v).count("1") for v in x], dtype=float)


__all__ = [
    "AnsatzCircuit",
    "Family",
    "Fixed",
    "JacobianBundle",
    "Rotation",
    "apply_circuit",
    "apply_circuit_adjoint",
    "build_ansatz",
    "circuit_jacobian",
    "circuit_unitary",
    "custom_ansatz",
    "generator_set",
    "n_qubits_of",
    "pauli_action",
    "pauli_matrix",
    "word",
    "word_label",
]
