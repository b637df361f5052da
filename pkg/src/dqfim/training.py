"""Fidelity cost, adjoint gradients and the optimisation loop for unitary learning."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .ansatz import AnsatzCircuit, _apply_fixed, _apply_pauli, _apply_rotation, _check, apply_circuit
from .ensembles import EnsembleSpec, TrainingSet, sample_states

log = logging.getLogger(__name__)


def _overlaps(ansatz: AnsatzCircuit, theta, S: TrainingSet) -> np.ndarray:
    out = apply_circuit(ansatz, theta, S.inputs)
    return np.sum(S.targets.conj() * out, axis=0)


def cost_train(ansatz: AnsatzCircuit, theta, S: TrainingSet) -> float:
    """``1 - mean_l |<V psi_l| U(theta) |psi_l>|^2``."""
    if S.inputs.shape[0] != ansatz.dim:
        raise ValueError("training set dimension does not match the circuit")
    f = _overlaps(ansatz, theta, S)
    return float(1.0 - np.mean(np.abs(f) ** 2))


def cost_and_grad(ansatz: AnsatzCircuit, theta, S: TrainingSet) -> tuple[float, np.ndarray]:
    """Training cost and its exact gradient by one forward and one adjoint sweep."""
    theta, phi = _check(ansatz, theta, S.inputs)
    if S.targets.shape != phi.shape:
        raise ValueError("targets and inputs differ in shape")
    if phi.ndim != 2:
        raise ValueError("training inputs must be a (dim, L) batch")
    if kernels.enabled():
        cost, grad = kernels.cost_grad(
            ansatz._compiled.table, ansatz.n_layers, ansatz.params_per_layer, theta, phi, S.targets
        )
        return float(cost), grad
    prog = list(ansatz.program())
    psi = phi
    for kern, n in prog:
        psi = _apply_fixed(kern, psi) if n is None else _apply_rotation(kern, theta[n], psi)
    lam = S.targets.astype(complex, copy=True)
    f = np.sum(lam.conj() * psi, axis=0)
    L = phi.shape[1]
    weights = f.conj()
    grad = np.zeros(ansatz.n_params)
    for kern, n in reversed(prog):
        if n is None:
            psi = _apply_fixed(kern, psi, adjoint=True)
            lam = _apply_fixed(kern, lam, adjoint=True)
            continue
        # d f_l / d theta_n = <lam_l| -i H_n |psi_l>, psi taken right after the rotation
        df = -1j * np.sum(lam.conj() * _apply_pauli(kern, psi), axis=0)
        grad[n] = -2.0 / L * float(np.sum((weights * df).real))
        psi = _apply_rotation(kern, theta[n], psi, adjoint=True)
        lam = _apply_rotation(kern, theta[n], lam, adjoint=True)
    cost = float(1.0 - np.mean(np.abs(f) ** 2))
    return cost, grad


def grad_cost_train(ansatz: AnsatzCircuit, theta, S: TrainingSet) -> np.ndarray:
    return cost_and_grad(ansatz, theta, S)[1]


def cost_test(
    ansatz: AnsatzCircuit,
    theta,
    theta_g,
    spec: EnsembleSpec,
    n_test: int,
    rng: np.random.Generator,
    target: AnsatzCircuit | None = None,
) -> tuple[float, float]:
    """Monte-Carlo test error and its standard error.

    Returns ``(1 - mean F, stderr(F))`` with ``F = |<psi|U(theta_g)^+ U(theta)|psi>|^2``
    over ``n_test`` fresh states from ``spec``. ``target`` defaults to ``ansatz``.
    """
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    target = ansatz if target is None else target
    psi = sample_states(spec, n_test, rng)
    a = apply_circuit(ansatz, theta, psi)
    b = apply_circuit(target, theta_g, psi)
    fid = np.abs(np.sum(b.conj() * a, axis=0)) ** 2
    se = float(np.std(fid, ddof=1) / math.sqrt(n_test)) if n_test > 1 else float("nan")
    return float(min(max(1.0 - fid.mean(), 0.0), 1.0)), se


# --------------------------------------------------------------------------
# optimisation


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser settings.

    ``optimizer`` is ``"bfgs"`` (scipy BFGS, Wolfe line search), ``"gd"``
    (gradient descent with Armijo backtracking) or ``"adam"``.

    ``convergence_threshold`` on ``C_train`` defines the step count ``E`` and
    the converged flag. Optimisation then continues towards the minimum until
    ``C_train < stop_threshold``; ``stop_threshold=None`` stops right at the
    convergence threshold.
    """

    optimizer: str = "bfgs"
    learning_rate: float = 0.01
    max_steps: int = 2000
    convergence_threshold: float = 1e-4
    stop_threshold: float | None = 1e-8
    gradient_threshold: float = 1e-10
    n_test: int = 100
    test_seed: int | None = None

    def __post_init__(self):
        if self.optimizer not in ("bfgs", "gd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.convergence_threshold <= 0 or self.gradient_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.stop_threshold is not None and self.stop_threshold <= 0:
            raise ValueError("stop_threshold must be positive")

    @property
    def stop_at(self) -> float:
        if self.stop_threshold is None:
            return self.convergence_threshold
        return min(self.stop_threshold, self.convergence_threshold)


PRESETS = {
    "bfgs": TrainConfig(),
    "bfgs-1e-3": TrainConfig(convergence_threshold=1e-3),
    "gd": TrainConfig(optimizer="gd", learning_rate=0.1),
    "adam": TrainConfig(optimizer="adam", learning_rate=0.01),
}


def preset(name: str, **overrides) -> TrainConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown optimizer preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)


@dataclass
class TrainResult:
    theta_star: np.ndarray
    c_train_final: float
    c_test_final: float
    c_test_stderr: float
    steps_E: int
    converged: bool
    status: str  # converged | local_minimum | max_steps | stalled
    cost_history: list = field(default_factory=list)  # (step, C_train)
    wall_time: float = 0.0

    @property
    def empirical_risk(self) -> float:
        return self.c_test_final - self.c_train_final


class _NonFinite(FloatingPointError):
    pass


def train(
    ansatz: AnsatzCircuit,
    theta0,
    S: TrainingSet,
    theta_g,
    test_spec: EnsembleSpec,
    config: TrainConfig = TrainConfig(),
    target: AnsatzCircuit | None = None,
) -> TrainResult:
    """Minimise the training cost from ``theta0`` and evaluate the test error.

    Stops when ``C_train`` falls below ``config.stop_at``, when the gradient
    norm drops below ``gradient_threshold``, or after ``max_steps``
    iterations. ``steps_E`` is the first iteration with ``C_train`` below
    ``convergence_threshold``; if that never happens it is the number of
    iterations run until the optimiser stopped. ``converged`` tells whether
    the threshold was reached. A gradient stop above the threshold is reported as
    ``status="local_minimum"``.
    """
    t_start = time.perf_counter()
    theta = np.array(theta0, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ValueError(f"theta0 must have length {ansatz.n_params}")
    thr = config.convergence_threshold
    history: list[tuple[int, float]] = []
    state = {"theta": theta.copy(), "cost": None, "step": 0}

    def fg(x):
        c, g = cost_and_grad(ansatz, x, S)
        if not (math.isfinite(c) and np.all(np.isfinite(g))):
            raise _NonFinite(f"non-finite cost or gradient at step {state['step']}")
        return c, g

    stop = config.stop_at
    c0, g0 = fg(theta)
    history.append((0, c0))
    status = None
    if c0 < stop:
        status = "converged"
    elif np.linalg.norm(g0) < config.gradient_threshold:
        status = "local_minimum"
    state.update(theta=theta.copy(), cost=c0)

    if status is None and config.optimizer == "bfgs":
        cache = {}

        def fun(x):
            key = x.tobytes()
            if key not in cache:
                cache.clear()
                cache[key] = fg(x)
            return cache[key]

        def callback(intermediate_result):
            state["step"] += 1
            x = intermediate_result.x
            c = float(intermediate_result.fun)
            history.append((state["step"], c))
            state.update(theta=x.copy(), cost=c)
            if c < stop:
                state["status"] = "converged"
                raise StopIteration
            g = fun(x)[1]
            if np.linalg.norm(g) < config.gradient_threshold:
                state["status"] = "converged" if c < thr else "local_minimum"
                raise StopIteration

        res = minimize(
            fun,
            theta,
            jac=True,
            method="BFGS",
            callback=callback,
            options={"maxiter": config.max_steps, "gtol": config.gradient_threshold, "norm": 2.0},
        )
        status = state.get("status")
        if status is None:
            if state["step"] >= config.max_steps:
                status = "max_steps"
            else:
                # scipy gave up (typically precision loss in the line search)
                if res.fun < state["cost"]:
                    state.update(theta=np.array(res.x), cost=float(res.fun))
                status = "converged" if state["cost"] < thr else "stalled"

    elif status is None:
        status = _first_order(fg, theta, config, history, state)

    theta_star = state["theta"]
    c_train = max(0.0, cost_train(ansatz, theta_star, S))
    if status in ("max_steps", "local_minimum", "stalled") and min(c for _, c in history) < thr:
        status = "converged"
    converged = status == "converged"
    # runs that never reach the threshold count the steps spent reaching their minimum
    steps_E = next((s for s, c in history if c < thr), history[-1][0])
    rng = np.random.default_rng(config.test_seed)
    c_test, se = cost_test(ansatz, theta_star, theta_g, test_spec, config.n_test, rng, target=target)
    return TrainResult(
        theta_star=theta_star,
        c_train_final=min(c_train, 1.0),
        c_test_final=c_test,
        c_test_stderr=se,
        steps_E=min(steps_E, config.max_steps),
        converged=converged,
        status=status,
        cost_history=history,
        wall_time=time.perf_counter() - t_start,
    )


def _first_order(fg, theta, config: TrainConfig, history, state) -> str:
    thr = config.convergence_threshold
    stop = config.stop_at
    c, g = fg(theta)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = config.learning_rate
    for step in range(1, config.max_steps + 1):
        if config.optimizer == "adam":
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            mhat = m / (1 - b1**step)
            vhat = v / (1 - b2**step)
            theta = theta - lr * mhat / (np.sqrt(vhat) + eps)
            c, g = fg(theta)
        else:
            # Armijo backtracking keeps every accepted step a descent step
            alpha, gg = lr, float(g @ g)
            while True:
                trial = theta - alpha * g
                ct, gt = fg(trial)
                if ct <= c - 1e-4 * alpha * gg or alpha < 1e-12:
                    break
                alpha *= 0.5
            if ct > c:
                state.update(theta=theta, cost=c)
                return "stalled"
            theta, c, g = trial, ct, gt
            lr = min(alpha * 2.0, 10.0 * config.learning_rate)
        history.append((step, c))
        state.update(theta=theta.copy(), cost=c, step=step)
        if c < stop:
            return "converged"
        if np.linalg.norm(g) < config.gradient_threshold:
            return "converged" if c < thr else "local_minimum"
    return "max_steps"
