"""Data quantum Fisher information for parameterized circuits.

Statevector simulation of layered circuits, the data metric and its rank,
Lie-algebra bounds, and unitary-learning experiments.
"""
from .ansatz import AnsatzCircuit, Family, apply_circuit, build_ansatz, circuit_jacobian, custom_ansatz, word
from .core import psd_rank
from .ensembles import EnsembleSpec, TrainingSet, build_training_set, sample_states
from .lie import PauliSum, ansatz_closure, lie_closure, pauli_commutator
from .metric import (
    DataProjector,
    DQFIMMatrix,
    NoPlateauError,
    RankProtocol,
    build_projector,
    compute_dqfim,
    effective_dimension,
    estimate_max_rank,
    saturation_profile,
    unitary_bound,
)
from .training import TrainConfig, TrainResult, cost_test, cost_train, grad_cost_train, train

__version__ = "0.1.0"
