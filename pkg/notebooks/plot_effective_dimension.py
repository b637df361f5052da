"""
Effective dimension of a learnable isometry
===========================================

The rank of the data quantum Fisher information metric counts how many
independent directions a circuit can move a set of input states. Here we
grow a hardware-efficient circuit on two qubits and watch that rank
saturate, first with depth and then with the number of training states.
"""
import numpy as np

from dqfim import RankProtocol, build_ansatz, build_projector, compute_dqfim, saturation_profile, unitary_bound
from dqfim.ensembles import EnsembleSpec, sample_states

rng = np.random.default_rng(0)

###############################################################################
# Rank against depth for a single input state
# -------------------------------------------
# One Haar-random state spans a rank-one projector. Each extra layer adds
# four parameters but the rank stops at 2d - 2 = 6.

spec = EnsembleSpec.parse("haar", 2)
proj = build_projector(sample_states(spec, 1, rng))
for G in range(1, 7):
    a = build_ansatz("he", 2, G)
    q = compute_dqfim(a, a.random_params(rng), proj)
    print(f"G={G}  M={a.n_params:2d}  D_1={q.rank()}")

###############################################################################
# Saturation over training-set size
# ---------------------------------
# The profile repeats the depth scan for L = 1..5 nested training sets and
# keeps the plateau value R_L. It matches the count of free parameters of a
# d x L isometry, 2dL - L^2 - 1, until it reaches d^2 - 1.

prof = saturation_profile("he", 2, spec, 5, RankProtocol(), seed=1)
for L, R in prof.R.items():
    print(f"L={L}  R_L={R:2d}  bound={unitary_bound(4, L):2d}  M_c={prof.M_c[L]}")
print("R_inf =", prof.R_inf, " L_c =", prof.L_c, " 2 R_inf / R_1 =", round(prof.L_c_approx, 2))

###############################################################################
# The spectrum behind the rank
# ----------------------------
# Past saturation the metric has a clean gap between the nonzero eigenvalues
# and numerical zeros, which is what makes the rank well defined.

a = build_ansatz("he", 2, 8)
q = compute_dqfim(a, a.random_params(rng), build_projector(sample_states(spec, 2, rng)))
ev = np.sort(np.linalg.eigvalsh(q.matrix))[::-1]
r = q.rank()
print("rank", r, "of", a.n_params)
print("eigenvalues around the cut:", np.array2string(ev[r - 2 : r + 2], precision=3))
