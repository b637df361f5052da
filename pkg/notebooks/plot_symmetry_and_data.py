"""
Symmetry and the choice of training data
========================================

A particle-conserving XY circuit only moves states inside each particle
number sector. Training data from a single sector therefore sees far fewer
degrees of freedom than random product states, and needs a different
number of states before it pins the unitary down.
"""
import numpy as np

from dqfim import RankProtocol, saturation_profile
from dqfim.ensembles import EnsembleSpec

n = 4

###############################################################################
# Single-excitation sector
# ------------------------
# The sector has dimension N, so the learnable part is an N x N unitary up
# to a phase: R_inf = N^2 - 1, reached with L_c = N states.

sector = saturation_profile("xy", n, EnsembleSpec.parse("sector:1", n), n + 2, RankProtocol(), seed=0)
print("sector:1 ", sector.R)
print(f"R_1={sector.R_1}  R_inf={sector.R_inf}  L_c={sector.L_c}")

###############################################################################
# Product states
# --------------
# Product states spread over every sector. A single one already exposes most
# directions, and only a few are needed to reach the plateau.

product = saturation_profile("xy", n, EnsembleSpec.parse("product", n), 4, RankProtocol(), seed=0)
print("product  ", product.R)
print(f"R_1={product.R_1}  R_inf={product.R_inf}  L_c={product.L_c}")

###############################################################################
# Comparison with the Lie algebra
# -------------------------------
# Neither number can exceed the dimension of the dynamical Lie algebra.

from dqfim import ansatz_closure, build_ansatz

dla = ansatz_closure(build_ansatz("xy", n, 1))
print("dim g =", dla.dim, " truncated:", dla.truncated)
print("bounded:", max(sector.R_inf, product.R_inf) <= dla.dim)
