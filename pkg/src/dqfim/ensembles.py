"""State distributions and training-set construction."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .ansatz import AnsatzCircuit, apply_circuit
from .core import sample_haar_vector


class Kind(str, enum.Enum):
    HAAR = "haar"
    PRODUCT = "product"
    SYMMETRIC_SECTOR = "sector"
    COMPUTATIONAL_BASIS = "basis"


@dataclass(frozen=True)
class EnsembleSpec:
    """A state distribution on ``n_qubits`` qubits.

    ``p`` is the Hamming weight for ``SYMMETRIC_SECTOR`` and ignored otherwise.
    """

    kind: Kind
    n_qubits: int
    p: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.kind is Kind.SYMMETRIC_SECTOR and not 0 <= self.p <= self.n_qubits:
            raise ValueError(f"sector weight p={self.p} outside [0, {self.n_qubits}]")

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> "EnsembleSpec":
        """Parse ``haar``, ``product``, ``basis`` or ``sector:<p>``."""
        raw = str(text).strip().lower()
        name, _, arg = raw.partition(":")
        aliases = {"prod": "product", "comp": "basis", "computational": "basis", "symmetric": "sector"}
        name = aliases.get(name, name)
        try:
            kind = Kind(name)
        except ValueError:
            raise ValueError(f"unknown ensemble {text!r}") from None
        if kind is Kind.SYMMETRIC_SECTOR:
            if not arg:
                raise ValueError(f"ensemble {text!r} needs a weight, e.g. 'sector:1'")
            try:
                p = int(arg)
            except ValueError:
                raise ValueError(f"invalid sector weight in {text!r}") from None
            return cls(kind, n_qubits, p)
        if arg:
            raise ValueError(f"ensemble {name!r} takes no argument, got {text!r}")
        return cls(kind, n_qubits)

    def label(self) -> str:
        return f"sector:{self.p}" if self.kind is Kind.SYMMETRIC_SECTOR else self.kind.value

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


@lru_cache(maxsize=None)
def sector_indices(n_qubits: int, p: int) -> np.ndarray:
    """Basis indices of Hamming weight ``p``, ascending."""
    idx = np.array(
        sorted(sum(1 << q for q in qs) for qs in itertools.combinations(range(n_qubits), p)),
        dtype=np.intp,
    )
    idx.setflags(write=False)
    return idx


def sample_state(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n_qubits
    if spec.kind is Kind.HAAR:
        return sample_haar_vector(1 << n, rng)
    if spec.kind is Kind.PRODUCT:
        psi = np.ones(1, dtype=complex)
        for _ in range(n):
            # qubit q is bit q: later qubits are more significant
            psi = np.kron(sample_haar_vector(2, rng), psi)
        return psi
    if spec.kind is Kind.SYMMETRIC_SECTOR:
        idx = sector_indices(n, spec.p)
        psi = np.zeros(1 << n, dtype=complex)
        psi[idx] = sample_haar_vector(comb(n, spec.p), rng)
        return psi
    psi = np.zeros(1 << n, dtype=complex)
    psi[rng.integers(1 << n)] = 1.0
    return psi


def sample_states(spec: EnsembleSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. samples as the columns of a ``(2**N, count)`` array."""
    if count < 0:
        raise ValueError("count must be >= 0")
    out = np.empty((spec.dim, count), dtype=complex)
    for j in range(count):
        out[:, j] = sample_state(spec, rng)
    return out


@dataclass
class TrainingSet:
    """Input states and their images under the target unitary, column-stacked."""

    inputs: np.ndarray
    targets: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.inputs.shape != self.targets.shape or self.inputs.ndim != 2:
            raise ValueError("inputs and targets must be (dim, L) arrays of equal shape")
        if self.inputs.shape[1] < 1:
            raise ValueError("training set must contain at least one pair")

    @property
    def size(self) -> int:
        return self.inputs.shape[1]

    def __len__(self) -> int:
        return self.size

    def head(self, count: int) -> "TrainingSet":
        """The first ``count`` pairs (nested training sets share a prefix)."""
        return TrainingSet(self.inputs[:, :count], self.targets[:, :count], dict(self.provenance, L=count))


def build_training_set(
    ansatz: AnsatzCircuit, theta_g, spec: EnsembleSpec, L: int, rng: np.random.Generator
) -> TrainingSet:
    """Draw ``L`` inputs from ``spec`` and label them with ``U(theta_g)``."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if spec.n_qubits != ansatz.n_qubits:
        raise ValueError("ensemble and ansatz qubit counts differ")
    inputs = sample_states(spec, L, rng)
    targets = apply_circuit(ansatz, theta_g, inputs)
    return TrainingSet(inputs, targets, {"ensemble": spec.label(), "L": L})


def hamming_weights(n_qubits: int) -> np.ndarray:
    x = np.arange(1 << n_qubits)
    w = np.zeros(x.size, dtype=float)
    for q in range(n_qubits):
        w += (x >> q) & 1
    return w


def particle_number_expectation(state: np.ndarray) -> float:
    """``<P>`` with ``P = sum_k (1 + Z_k)/2`` counting excited qubits (bit value 1)."""
    state = np.asarray(state)
    n = int(state.shape[0]).bit_length() - 1
    return float(np.sum(np.abs(state) ** 2 * hamming_weights(n)))
