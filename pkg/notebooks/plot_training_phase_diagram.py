"""
Training across parameters and data
===================================

We learn a random three-qubit target unitary with circuits of growing size
M and training sets of growing size L. Training succeeds once M passes the
rank R_L, and the learned circuit generalises once L passes the critical
data size. Both boundaries come from the rank profile, without training.
"""
import numpy as np

from dqfim import experiments as ex

cfg = ex.ExperimentConfig(
    family="he", n_qubits=3, ensemble="haar", m_grid=(12, 24, 48, 72, 96),
    l_grid=(1, 2, 4, 8, 10), reps=3, seed=7, n_test=50, workers=1,
)

###############################################################################
# Predicted boundaries
# --------------------

overlay = ex.boundary_overlay(cfg)
print("R_L:", overlay["R_L"])
print("L_c =", overlay["L_c"], " 2 R_inf / R_1 =", round(overlay["L_c_approx"], 2))

###############################################################################
# Run the grid
# ------------
# Every cell is seeded from the master seed and its index, so the table is
# reproducible regardless of how the cells are scheduled.

rows = ex.run_cells(cfg, ex.cells(cfg))
c_train = ex.cell_means(rows, "C_train")
c_test = ex.cell_means(rows, "C_test")


def table(values, title):
    print(title)
    print("  M \\ L " + "".join(f"{L:>9d}" for L in cfg.l_grid))
    for M in cfg.m_grid:
        print(f"{M:7d} " + "".join(f"{values[(M, L)]:9.1e}" for L in cfg.l_grid))


table(c_train, "mean training error")
table(c_test, "mean test error")

###############################################################################
# Reading the tables
# ------------------
# Small training errors appear to the right of the R_L curve in M, and the
# test error only drops in the corner with enough parameters and at least
# L_c states.

for L in cfg.l_grid:
    R = overlay["R_L"][str(L)]
    solved = [M for M in cfg.m_grid if c_train[(M, L)] < 1e-3]
    print(f"L={L:2d}  R_L={R:3d}  smallest M with C_train<1e-3: {solved[0] if solved else None}")
