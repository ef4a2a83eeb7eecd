"""Losses, adjoint gradients, Adam, and the training loop."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .datasets import random_state
from .pipeline import (
    FULL_ORACLE,
    WALSH_TRUNCATED,
    ParameterVector,
    PipelineConfig,
    init_params,
    layer_diagonals,
    prepared_state,
    run_circuit,
    zero_params,
)
from .statevec import PHASE_EPS, ShapeError, StateVector, _phases, fidelity, fwht_inplace, uniform_state
from .walsh import walsh_transform

log = logging.getLogger(__name__)

AMPLITUDE_SSE = "amplitude_sse"
AMPLITUDE_SSE_PLUS_PHASE = "amplitude_sse_plus_phase"
COMPLEX_SSE = "complex_sse"
LOSS_NAMES = (AMPLITUDE_SSE, AMPLITUDE_SSE_PLUS_PHASE, COMPLEX_SSE)


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, last_finite_loss: float):
        super().__init__(f"loss became non-finite at epoch {epoch} (last finite loss {last_finite_loss:.3e})")
        self.epoch = epoch
        self.last_finite_loss = last_finite_loss


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class LossKind:
    name: str = COMPLEX_SSE
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.name not in LOSS_NAMES:
            raise ValueError(f"loss must be one of {LOSS_NAMES}, got {self.name!r}")
        if self.weight <= 0:
            raise ValueError("phase weight must be positive")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    learning_rate: float = 0.05
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # None picks amplitude_sse for full_oracle, complex_sse for walsh_truncated
    loss: LossKind | None = None
    log_every: int = 1
    target_loss: float | None = 1e-14
    init_scale: float = 0.1
    phase_eps: float = PHASE_EPS

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "gradient_descent"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    def loss_for(self, method: str) -> LossKind:
        if self.loss is not None:
            return self.loss
        return LossKind(AMPLITUDE_SSE if method == FULL_ORACLE else COMPLEX_SSE)

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "seed": self.seed,
            "loss": None if self.loss is None else {"name": self.loss.name, "weight": self.loss.weight},
            "log_every": self.log_every,
            "target_loss": self.target_loss,
            "init_scale": self.init_scale,
            "phase_eps": self.phase_eps,
        }

    @classmethod
    def from_json(cls, data: dict) -> TrainConfig:
        data = dict(data)
        loss = data.pop("loss", None)
        if loss is not None:
            data["loss"] = LossKind(loss["name"], float(loss.get("weight", 1.0)))
        return cls(**data)


@dataclass
class TrainReport:
    loss_trace: list[tuple[int, float]]
    final_params: ParameterVector
    final_loss: float
    final_infidelity: float
    wall_clock_seconds: float
    seed: int
    epochs_run: int = 0

    def to_json(self) -> dict:
        return {
            "final_loss": self.final_loss,
            "final_infidelity": self.final_infidelity,
            "wall_clock_seconds": self.wall_clock_seconds,
            "seed": self.seed,
            "epochs_run": self.epochs_run,
            "loss_trace": [[e, v] for e, v in self.loss_trace],
        }


# -- losses ------------------------------------------------------------------

def check_target(target: StateVector, tol: float = 1e-8) -> np.ndarray:
    x = target.amps
    if np.any(np.abs(x.imag) > tol) or np.any(x.real < -tol):
        raise ValidationError("target amplitudes must be real and nonnegative")
    if abs(target.norm() - 1.0) > tol:
        raise ValidationError(f"target is not normalized (norm {target.norm():.12g})")
    return x.real


def loss_and_adjoint(
    psi: np.ndarray, x: np.ndarray, kind: LossKind, eps: float = PHASE_EPS
) -> tuple[float, np.ndarray]:
    """Loss value and the vector ``a`` with ``dL = 2 Re(sum conj(a_j) dpsi_j)``."""
    if kind.name == COMPLEX_SSE:
        d = psi - x
        return float(np.vdot(d, d).real), d
    mod = np.abs(psi)
    safe = np.where(mod > 0.0, mod, 1.0)
    diff = mod - x
    value = float(diff @ diff)
    adj = np.where(mod > 0.0, diff / safe, 0.0) * psi
    if kind.name == AMPLITUDE_SSE_PLUS_PHASE:
        theta = _phases(psi, eps)
        value += kind.weight * float(theta @ theta)
        # zero subgradient at the branch cut and below the phase threshold
        theta_g = np.where(theta == np.pi, 0.0, theta)
        adj = adj - 1j * kind.weight * theta_g * psi / (safe * safe)
    return value, adj


def loss(params: ParameterVector, target: StateVector, config: PipelineConfig | None = None,
         kind: LossKind = LossKind(), eps: float = PHASE_EPS) -> float:
    config = config or params.config
    x = check_target(target)
    psi = run_circuit(layer_diagonals(params.values, config), config)
    return loss_and_adjoint(psi, x, kind, eps)[0]


def value_and_gradient(values: np.ndarray, x: np.ndarray, config: PipelineConfig,
                       kind: LossKind, eps: float = PHASE_EPS) -> tuple[float, np.ndarray]:
    """One forward and one reverse sweep; ``x`` is the real target array."""
    if values.size != config.n_params:
        raise ShapeError(f"expected {config.n_params} parameters, got {values.size}")
    layers = config.layers
    walsh = config.method == WALSH_TRUNCATED
    phasors = [np.exp(-1j * h) for h in layer_diagonals(values, config)]

    psi = uniform_state(config.n_qubits).amps
    for k in range(layers):
        psi *= phasors[k]
        fwht_inplace(psi)
    if walsh:
        psi *= phasors[layers]

    value, lam = loss_and_adjoint(psi, x, kind, eps)
    lam = lam.astype(np.complex128, copy=True)
    grads: list[np.ndarray] = [None] * config.n_blocks  # type: ignore[list-item]
    if walsh:
        grads[layers] = 2.0 * (lam.conj() * psi).imag
        back = phasors[layers].conj()
        psi *= back
        lam *= back
    for k in reversed(range(layers)):
        fwht_inplace(psi)
        fwht_inplace(lam)
        grads[k] = 2.0 * (lam.conj() * psi).imag
        back = phasors[k].conj()
        psi *= back
        lam *= back

    if walsh:
        idx = np.asarray(config.term_set.indices)
        grads = [walsh_transform(g)[idx] for g in grads]
    return value, np.concatenate(grads)


def gradient(params: ParameterVector, target: StateVector, config: PipelineConfig | None = None,
             kind: LossKind = LossKind(), eps: float = PHASE_EPS) -> np.ndarray:
    config = config or params.config
    return value_and_gradient(params.values, check_target(target), config, kind, eps)[1]


# -- optimizers ----------------------------------------------------------------

class Adam:
    def __init__(self, size: int, lr: float = 0.05, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        params -= (self.lr / bc1) * self.m / (np.sqrt(self.v / bc2) + self.eps)


class GradientDescent:
    def __init__(self, size: int, lr: float = 0.05):
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        params -= self.lr * grad


def make_optimizer(tconfig: TrainConfig, size: int):
    if tconfig.optimizer == "adam":
        return Adam(size, tconfig.learning_rate, tconfig.beta1, tconfig.beta2, tconfig.adam_eps)
    return GradientDescent(size, tconfig.learning_rate)


# -- training ----------------------------------------------------------------

def fit(target: StateVector, pconfig: PipelineConfig, tconfig: TrainConfig,
        init: ParameterVector | None = None) -> TrainReport:
    """Train ``pconfig``'s parameters towards ``target``.

    The reported parameters and loss are the best seen; the trace holds the
    best-so-far loss every ``log_every`` epochs plus the final epoch.
    """
    x = check_target(target)
    if target.n_qubits != pconfig.n_qubits:
        raise ValidationError(f"target has {target.n_qubits} qubits, pipeline {pconfig.n_qubits}")
    if init is not None:
        params = init.values.copy()
    elif tconfig.init_scale == 0:
        params = zero_params(pconfig).values
    else:
        params = init_params(pconfig, tconfig.seed, tconfig.init_scale).values
    opt = make_optimizer(tconfig, params.size)
    kind = tconfig.loss_for(pconfig.method)

    start = time.perf_counter()
    best = math.inf
    best_params = params.copy()
    trace: list[tuple[int, float]] = []
    epoch = 0
    for epoch in range(tconfig.epochs):
        value, grad = value_and_gradient(params, x, pconfig, kind, tconfig.phase_eps)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            raise DivergenceError(epoch, best)
        if value < best:
            best = value
            best_params[:] = params
        if epoch % tconfig.log_every == 0:
            trace.append((epoch, best))
        if tconfig.target_loss is not None and value <= tconfig.target_loss:
            break
        opt.step(params, grad)
    else:
        # account for the last update, which no loop iteration evaluated
        value = value_and_gradient(params, x, pconfig, kind, tconfig.phase_eps)[0]
        epoch = tconfig.epochs
        if not math.isfinite(value):
            raise DivergenceError(epoch, best)
        if value < best:
            best = value
            best_params[:] = params
    if not trace or trace[-1][0] != epoch:
        trace.append((epoch, best))
    wall = time.perf_counter() - start

    final = ParameterVector(best_params, pconfig)
    infid = 1.0 - fidelity(prepared_state(final, tconfig.phase_eps), target)
    log.debug("fit done: loss %.3e infidelity %.3e in %.2fs", best, infid, wall)
    return TrainReport(trace, final, best, infid, wall, tconfig.seed, epochs_run=epoch)


def derive_seed(base_seed: int, trial: int) -> int:
    """Independent per-trial seed from ``base_seed XOR trial`` run through SeedSequence."""
    return int(np.random.SeedSequence(base_seed ^ trial).generate_state(1, np.uint32)[0])


@dataclass
class SweepResult:
    rows: list[dict]
    summary: list[dict]


def sweep_dataset_sizes(sizes, distributions, trials: int, tconfig: TrainConfig,
                        layers: int = 2, threads: int = 1) -> SweepResult:
    """Method-1 fits over random datasets; one row per (size, distribution, trial)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(n, d, t) for n in sizes for d in distributions for t in range(trials)]

    def run(job):
        n, dist, trial = job
        seed = derive_seed(tconfig.seed, trial)
        row = {"n_qubits": n, "N": 1 << n, "distribution": dist, "trial": trial, "seed": seed}
        try:
            target = random_state(dist, n, seed)
            report = fit(target, PipelineConfig(n, FULL_ORACLE, layers), replace(tconfig, seed=seed))
            row.update(final_loss=report.final_loss, wall_clock_s=report.wall_clock_seconds, error="")
        except (DivergenceError, ValueError) as exc:
            row.update(final_loss=math.nan, wall_clock_s=math.nan, error=str(exc))
        return row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]

    summary = []
    for n in sizes:
        for dist in distributions:
            losses = np.array([r["final_loss"] for r in rows
                               if r["n_qubits"] == n and r["distribution"] == dist])
            ok = losses[np.isfinite(losses)]
            summary.append({
                "n_qubits": n,
                "N": 1 << n,
                "distribution": dist,
                "mean_final_loss": float(ok.mean()) if ok.size else math.nan,
                "std_final_loss": float(ok.std()) if ok.size else math.nan,
                "failed_trials": int(losses.size - ok.size),
            })
    return SweepResult(rows, summary)
