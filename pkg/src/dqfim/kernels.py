"""Compiled whole-circuit sweeps.

The per-gate numpy kernels in :mod:`dqfim.ansatz` pay interpreter overhead on
every gate, which dominates for the small dimensions used here. This module
flattens one layer of a circuit into plain arrays and runs the full forward
pass, or the forward pass plus the adjoint gradient sweep, inside a single
numba-compiled loop. Results agree with the numpy path to rounding error.

Element kinds in the layer table:

* ``0`` off-diagonal Pauli rotation (``flip`` mask and ``phase`` vector)
* ``1`` diagonal Pauli rotation (``phase`` is real +-1)
* ``2`` diagonal fixed gate (full diagonal in ``vec``)
* ``3`` dense two-qubit fixed gate (``mat``, ``mat_adj``; ``q0`` is the
  most significant local bit)
"""
from __future__ import annotations

import contextlib

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_enabled = _HAVE_NUMBA

ROT, ROT_DIAG, DIAG, DENSE = 0, 1, 2, 3


def enabled() -> bool:
    return _enabled


@contextlib.contextmanager
def numpy_backend():
    """Temporarily route all sweeps through the per-gate numpy kernels."""
    global _enabled
    old, _enabled = _enabled, False
    try:
        yield
    finally:
        _enabled = old


class LayerTable:
    """Array form of one layer, built once per (layer, qubit count)."""

    def __init__(self, kernels, n_qubits: int):
        n_el = len(kernels)
        dim = 1 << n_qubits
        self.kind = np.zeros(n_el, dtype=np.int64)
        self.slot = np.full(n_el, -1, dtype=np.int64)
        self.flip = np.zeros(n_el, dtype=np.int64)
        self.vec = np.ones((n_el, dim), dtype=np.complex128)
        self.mat = np.zeros((n_el, 4, 4), dtype=np.complex128)
        self.mat_adj = np.zeros((n_el, 4, 4), dtype=np.complex128)
        self.q0 = np.zeros(n_el, dtype=np.int64)
        self.q1 = np.zeros(n_el, dtype=np.int64)
        for e, kern in enumerate(kernels):
            if kern[0] == "rot":
                _, slot, is_diag, source, phase = kern
                self.kind[e] = ROT_DIAG if is_diag else ROT
                self.slot[e] = slot
                self.flip[e] = int(source[0])  # source = x ^ flip
                self.vec[e] = phase
            elif kern[0] == "diag":
                self.kind[e] = DIAG
                self.vec[e] = kern[1]
            else:
                gate = kern[1]
                if gate.arity != 2:
                    raise ValueError("compiled sweeps support two-qubit dense gates only")
                self.kind[e] = DENSE
                self.mat[e] = gate.matrix
                self.mat_adj[e] = gate.matrix.conj().T
                self.q0[e], self.q1[e] = gate.targets

    def args(self):
        return (self.kind, self.slot, self.flip, self.vec, self.mat, self.mat_adj, self.q0, self.q1)


def _py_apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, psi, adjoint):
    dim, B = psi.shape
    k = kind[e]
    if k == 0:
        fl = flip[e]
        for x in range(dim):
            y = x ^ fl
            if x < y:
                px = -1j * s * vec[e, x]
                py = -1j * s * vec[e, y]
                for b in range(B):
                    a0 = psi[x, b]
                    a1 = psi[y, b]
                    psi[x, b] = c * a0 + px * a1
                    psi[y, b] = c * a1 + py * a0
    elif k == 1:
        for x in range(dim):
            f = c - 1j * s * vec[e, x]
            for b in range(B):
                psi[x, b] *= f
    elif k == 2:
        for x in range(dim):
            f = vec[e, x].conjugate() if adjoint else vec[e, x]
            for b in range(B):
                psi[x, b] *= f
    else:
        m = mat_adj[e] if adjoint else mat[e]
        m0 = 1 << q0[e]
        m1 = 1 << q1[e]
        for x in range(dim):
            if x & m0 or x & m1:
                continue
            i1 = x | m1
            i2 = x | m0
            i3 = x | m0 | m1
            for b in range(B):
                v0 = psi[x, b]
                v1 = psi[i1, b]
                v2 = psi[i2, b]
                v3 = psi[i3, b]
                psi[x, b] = m[0, 0] * v0 + m[0, 1] * v1 + m[0, 2] * v2 + m[0, 3] * v3
                psi[i1, b] = m[1, 0] * v0 + m[1, 1] * v1 + m[1, 2] * v2 + m[1, 3] * v3
                psi[i2, b] = m[2, 0] * v0 + m[2, 1] * v1 + m[2, 2] * v2 + m[2, 3] * v3
                psi[i3, b] = m[3, 0] * v0 + m[3, 1] * v1 + m[3, 2] * v2 + m[3, 3] * v3


def _py_forward(kind, slot, flip, vec, mat, mat_adj, q0, q1, n_layers, K, theta, psi):
    n_el = kind.shape[0]
    for g in range(n_layers):
        for e in range(n_el):
            c, s = 1.0, 0.0
            if slot[e] >= 0:
                t = theta[g * K + slot[e]]
                c, s = np.cos(t), np.sin(t)
            _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, psi, False)


def _py_backward(kind, slot, flip, vec, mat, mat_adj, q0, q1, n_layers, K, theta, psi):
    n_el = kind.shape[0]
    for g in range(n_layers - 1, -1, -1):
        for e in range(n_el - 1, -1, -1):
            c, s = 1.0, 0.0
            if slot[e] >= 0:
                t = theta[g * K + slot[e]]
                c, s = np.cos(t), -np.sin(t)
            _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, psi, True)


def _py_cost_grad(kind, slot, flip, vec, mat, mat_adj, q0, q1, n_layers, K, theta, phi, targets):
    dim, B = phi.shape
    psi = phi.copy()
    _forward(kind, slot, flip, vec, mat, mat_adj, q0, q1, n_layers, K, theta, psi)
    lam = targets.copy()
    f = np.zeros(B, dtype=np.complex128)
    for x in range(dim):
        for b in range(B):
            f[b] += lam[x, b].conjugate() * psi[x, b]
    fid = 0.0
    for b in range(B):
        fid += f[b].real ** 2 + f[b].imag ** 2
    cost = 1.0 - fid / B
    w = np.conj(f)
    grad = np.zeros(theta.shape[0])
    n_el = kind.shape[0]
    for g in range(n_layers - 1, -1, -1):
        for e in range(n_el - 1, -1, -1):
            c, s = 1.0, 0.0
            if slot[e] >= 0:
                n = g * K + slot[e]
                # df_b = -i <lam_b| P |psi_b>, with psi right after the rotation
                acc = 0.0
                fl = flip[e]
                for b in range(B):
                    t = 0.0j
                    for x in range(dim):
                        t += lam[x, b].conjugate() * vec[e, x] * psi[x ^ fl, b]
                    acc += (w[b] * (-1j) * t).real
                grad[n] = -2.0 / B * acc
                c, s = np.cos(theta[n]), -np.sin(theta[n])
            _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, psi, True)
            _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, lam, True)
    return cost, grad


def _py_jacobian(kind, slot, flip, vec, mat, mat_adj, q0, q1, n_layers, K, theta, psi, derivs):
    # derivs[n] is created right after rotation n and then carried through the
    # rest of the circuit alongside psi
    dim, B = psi.shape
    n_el = kind.shape[0]
    made = np.empty(theta.shape[0], dtype=np.int64)
    active = 0
    for g in range(n_layers):
        for e in range(n_el):
            c, s = 1.0, 0.0
            if slot[e] >= 0:
                t = theta[g * K + slot[e]]
                c, s = np.cos(t), np.sin(t)
            _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, psi, False)
            for m in range(active):
                _apply_element(e, kind, flip, vec, mat, mat_adj, q0, q1, c, s, derivs[made[m]], False)
            if slot[e] >= 0:
                n = g * K + slot[e]
                fl = flip[e]
                for x in range(dim):
                    ph = -1j * vec[e, x]
                    for b in range(B):
                        derivs[n, x, b] = ph * psi[x ^ fl, b]
                made[active] = n
                active += 1


if _HAVE_NUMBA:
    _apply_element = numba.njit(cache=True)(_py_apply_element)
    _forward = numba.njit(cache=True)(_py_forward)
    _backward = numba.njit(cache=True)(_py_backward)
    _cost_grad = numba.njit(cache=True)(_py_cost_grad)
    _jacobian = numba.njit(cache=True)(_py_jacobian)


def _as_batch(state):
    psi = np.array(state, dtype=np.complex128, order="C", copy=True)
    return (psi[:, None] if psi.ndim == 1 else psi), psi.ndim == 1


def forward(table: LayerTable, n_layers: int, K: int, theta, state, adjoint: bool = False) -> np.ndarray:
    psi, single = _as_batch(state)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    (_backward if adjoint else _forward)(*table.args(), n_layers, K, theta, psi)
    return psi[:, 0] if single else psi


def cost_grad(table: LayerTable, n_layers: int, K: int, theta, inputs, targets):
    phi = np.ascontiguousarray(inputs, dtype=np.complex128)
    tgt = np.ascontiguousarray(targets, dtype=np.complex128)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    return _cost_grad(*table.args(), n_layers, K, theta, phi, tgt)


def jacobian(table: LayerTable, n_layers: int, K: int, theta, state):
    """``(U|state>, d_n U|state>)`` with derivatives stacked in parameter order."""
    psi, single = _as_batch(state)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    derivs = np.empty((n_layers * K,) + psi.shape, dtype=np.complex128)
    _jacobian(*table.args(), n_layers, K, theta, psi, derivs)
    if single:
        return psi[:, 0], derivs[:, :, 0]
    return psi, derivs
