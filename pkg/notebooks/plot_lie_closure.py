"""
Dynamical Lie algebras of the circuit families
==============================================

The commutator closure of a circuit's generators bounds the rank of the
metric from above. This script prints the algebra dimension for each family
and compares it with the full unitary algebra su(2^N).
"""
from dqfim import ansatz_closure, build_ansatz
from dqfim.lie import PauliSum, pauli_commutator

###############################################################################
# A single commutator
# -------------------
# [X, Y] = 2i Z, stored as the Hermitian part C with [A, B] = iC.

x = PauliSum.from_dict({"X": 1.0}, 1)
y = PauliSum.from_dict({"Y": 1.0}, 1)
print(pauli_commutator(x, y))

###############################################################################
# Dimensions per family
# ---------------------

for family in ("he", "xy", "xy_open", "xxz", "ycz"):
    dims = [ansatz_closure(build_ansatz(family, n, 1)).dim for n in (2, 3, 4)]
    print(f"{family:8s} " + "  ".join(f"N={n}: {d:3d}" for n, d in zip((2, 3, 4), dims)))
print("su(2^N)  " + "  ".join(f"N={n}: {4**n - 1:3d}" for n in (2, 3, 4)))

###############################################################################
# Capping the closure
# -------------------
# A cap stops the closure early. The result is then flagged and cannot
# certify a bound.

span = ansatz_closure(build_ansatz("he", 3, 1), cap=10)
print("capped:", span.dim, "truncated:", span.truncated)
